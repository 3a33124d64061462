//! Word-gated greedy decoding.
//!
//! Word `i` is decoded once word `i + L` has arrived or the stream has ended.
//! Each word is decoded greedily until a terminator (regular separator or
//! eos); the word index advances at every terminator. Gating only changes
//! when symbols are produced, never which symbols: the encoder rows a step may
//! read are the same whether the rest of the text is present or not.

use crate::tensor::{argmax, Matrix, Scalar};
use crate::textdata::phones::{duration_frames, is_terminator, PhraseType, PnpToken, EOS, NUM_PHONES, PROSODY_DIM, SEP_REGULAR};
use crate::{Error, Limit, Result};

use super::model::{EncoderInput, Encoded, PnpModel, StepCache, StepOutput};

/// Symbols per word, terminator included. Hitting the cap forces a regular
/// separator and flags the word.
pub const MAX_PNP_PER_WORD: usize = 40;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decoded {
    pub pnp: Vec<PnpToken>,
    /// Words whose decoding hit [`MAX_PNP_PER_WORD`].
    pub capped_words: Vec<usize>,
}

impl Decoded {
    pub fn symbols(&self) -> Vec<usize> {
        self.pnp.iter().map(|p| p.symbol).collect()
    }
}

/// Turns one step's outputs into a PnP token with `symbol`.
pub fn step_token<T: Scalar>(model: &PnpModel<T>, out: &StepOutput<T>, symbol: usize, word: usize) -> PnpToken {
    let prosody = model.destandardize(&out.prosody);
    let frames = if symbol < NUM_PHONES { duration_frames(&prosody) } else { 0 };
    PnpToken {
        symbol,
        prosody,
        frames,
        phrase: PhraseType::from_id(argmax(&out.phrase_logits)).expect("phrase head width"),
        word_index: word,
    }
}

pub struct IncrementalDecoder<'m, T: Scalar> {
    model: &'m PnpModel<T>,
    lookahead: Limit,
    /// Lookahead used for gating; equals `lookahead` except in deliberately
    /// broken configurations used as negative controls.
    gate: Limit,
    token_ids: Vec<usize>,
    token_words: Vec<usize>,
    embeddings: Option<Matrix<T>>,
    words: usize,
    ended: bool,
    encoded: Option<Encoded<T>>,
    cross: Vec<(Matrix<T>, Matrix<T>)>,
    cache: StepCache<T>,
    emitted: Vec<PnpToken>,
    capped: Vec<usize>,
    finished: bool,
}

impl<'m, T: Scalar> IncrementalDecoder<'m, T> {
    pub fn new(model: &'m PnpModel<T>, lookahead: Limit) -> Self {
        Self::with_gate(model, lookahead, lookahead)
    }

    /// Attends with `mask` lookahead but releases words on the `gate` rule.
    /// Any `gate < mask` breaks streaming equivalence, which is the point:
    /// the equivalence checker must notice.
    pub fn with_gate(model: &'m PnpModel<T>, mask: Limit, gate: Limit) -> Self {
        let embeddings = model
            .config
            .uses_embeddings()
            .then(|| Matrix::empty(model.config.embedding_input_width()));
        Self {
            model,
            lookahead: mask,
            gate,
            token_ids: Vec::new(),
            token_words: Vec::new(),
            embeddings,
            words: 0,
            ended: false,
            encoded: None,
            cross: Vec::new(),
            cache: model.new_cache(),
            emitted: Vec::new(),
            capped: Vec::new(),
            finished: false,
        }
    }

    /// Appends the next word's token ids and (when the model uses them) its
    /// embedding rows.
    pub fn push_word(&mut self, token_ids: &[usize], embeddings: Option<&Matrix<T>>) -> Result<()> {
        if self.ended {
            return Err(Error::PushAfterFlush("word-gated decoder"));
        }
        if token_ids.is_empty() {
            return Err(Error::Empty("a word needs at least one token"));
        }
        match (&mut self.embeddings, embeddings) {
            (Some(all), Some(rows)) => {
                if rows.rows() != token_ids.len() {
                    return Err(Error::Shape(format!("{} embedding rows for {} tokens", rows.rows(), token_ids.len())));
                }
                all.append(rows)?;
            }
            (None, _) => {}
            (Some(_), None) => return Err(Error::Invalid("model expects embeddings".into())),
        }
        self.token_ids.extend_from_slice(token_ids);
        self.token_words.extend(std::iter::repeat_n(self.words, token_ids.len()));
        self.words += 1;
        Ok(())
    }

    /// Marks the end of the word stream.
    pub fn end(&mut self) {
        self.ended = true;
    }

    pub fn words_arrived(&self) -> usize {
        self.words
    }

    /// Word currently being (or next to be) decoded.
    pub fn current_word(&self) -> usize {
        self.cache.word
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Number of arrived words that releases word `w`.
    pub fn arrivals_needed(&self, w: usize) -> Option<usize> {
        self.gate.finite().map(|l| w + l + 1)
    }

    pub fn gate_open(&self) -> bool {
        let w = self.cache.word;
        if w >= self.words {
            return false;
        }
        self.ended || self.arrivals_needed(w).is_some_and(|n| self.words >= n)
    }

    pub fn emitted(&self) -> &[PnpToken] {
        &self.emitted
    }

    pub fn capped_words(&self) -> &[usize] {
        &self.capped
    }

    fn refresh_encoder(&mut self) -> Result<()> {
        if self.encoded.as_ref().is_some_and(|e| e.out.rows() == self.token_ids.len()) {
            return Ok(());
        }
        let input = EncoderInput {
            token_ids: self.token_ids.clone(),
            token_words: self.token_words.clone(),
            embeddings: self.embeddings.clone(),
        };
        let enc = self.model.encode(&input)?;
        self.cross = self.model.cross_cache(&enc)?;
        self.encoded = Some(enc);
        Ok(())
    }

    fn step(&mut self) -> Result<StepOutput<T>> {
        let words = &self.encoded.as_ref().expect("encoder refreshed").token_words;
        self.model.step_cached(&mut self.cache, &self.cross, words, self.lookahead)
    }

    fn decode_word(&mut self) -> Result<Vec<PnpToken>> {
        self.refresh_encoder()?;
        let word = self.cache.word;
        let mut out = Vec::new();
        loop {
            let s = self.step()?;
            let mut symbol = argmax(&s.phone_logits);
            if out.len() + 1 == MAX_PNP_PER_WORD && !is_terminator(symbol) {
                symbol = SEP_REGULAR;
                self.capped.push(word);
            }
            out.push(step_token(self.model, &s, symbol, word));
            self.cache.record(symbol);
            if is_terminator(symbol) {
                return Ok(out);
            }
        }
    }

    /// Decodes every word whose gate is open and returns the new symbols.
    /// After [`end`](Self::end) and the last word, eos is appended if the
    /// final terminator was not already eos.
    pub fn poll(&mut self) -> Result<Vec<PnpToken>> {
        let mut out = Vec::new();
        while self.gate_open() {
            out.extend(self.decode_word()?);
        }
        if self.ended && !self.finished && self.cache.word >= self.words {
            self.finished = true;
            let last = out.last().or(self.emitted.last()).cloned();
            if let Some(last) = last.filter(|l| l.symbol != EOS) {
                let mut eos = last;
                eos.symbol = EOS;
                eos.frames = 0;
                for d in 6..PROSODY_DIM {
                    eos.prosody[d] = 0.0;
                }
                out.push(eos);
            }
        }
        self.emitted.extend(out.iter().cloned());
        Ok(out)
    }
}

/// Splits an encoder input into per-word token id runs and embedding rows.
pub fn split_words<T: Scalar>(input: &EncoderInput<T>) -> Result<Vec<(Vec<usize>, Option<Matrix<T>>)>> {
    let mut out: Vec<(Vec<usize>, Option<Matrix<T>>)> = Vec::new();
    let mut start = 0;
    for j in 0..=input.len() {
        let boundary = j == input.len() || (j > start && input.token_words[j] != input.token_words[start]);
        if !boundary {
            continue;
        }
        if j > start {
            if input.token_words[start] != out.len() {
                return Err(Error::Invalid(format!("word {} has no tokens", out.len())));
            }
            let emb = input.embeddings.as_ref().map(|e| e.slice_rows(start, j));
            out.push((input.token_ids[start..j].to_vec(), emb));
        }
        start = j;
    }
    Ok(out)
}

/// Offline greedy decoding of a complete text: every word present up front.
pub fn greedy_decode<T: Scalar>(model: &PnpModel<T>, input: &EncoderInput<T>, lookahead: Limit) -> Result<Decoded> {
    let mut dec = IncrementalDecoder::new(model, lookahead);
    for (ids, emb) in split_words(input)? {
        dec.push_word(&ids, emb.as_ref())?;
    }
    dec.end();
    let pnp = dec.poll()?;
    Ok(Decoded {
        pnp,
        capped_words: dec.capped_words().to_vec(),
    })
}
