//! Parameters and forward passes of the encoder-decoder.
//!
//! Pre-norm transformer blocks. Encoder self-attention follows the word mask
//! and carries a learned bias per word distance; decoder self-attention is
//! causal with a bias per position distance; cross-attention follows the
//! lookahead mask with a bias per signed word offset. The batch (tape) path and
//! the cached single-step path call the same kernels row by row, so they agree
//! exactly.

use std::path::Path;

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::config::KvConfig;
use crate::layers::attention::{attend, ScoreBias};
use crate::layers::weights::TensorFile;
use crate::mask::{build_causal_mask, build_cross_mask, build_encoder_mask, AttentionMask};
use crate::rng::{derived, standard_normal};
use crate::tensor::{add, add_row, gelu, layer_norm, matmul, Matrix, Scalar};
use crate::textdata::embed::EmbeddingSet;
use crate::textdata::phones::{is_terminator, PnpToken, BOS, NUM_PHRASE_TYPES, NUM_PNP_SYMBOLS, PROSODY_DIM};
use crate::textdata::tokenize::Token;
use crate::{Error, Limit, Result};

use super::config::PnpModelConfig;

/// Piece position within a word is clamped to this many buckets.
pub const PIECE_POSITIONS: usize = 8;
/// Position within a word's PnP sequence is clamped to this many buckets.
pub const PNP_POSITIONS: usize = 16;
/// Encoder bias buckets: word distance 0..=4.
pub const ENC_REL: usize = 5;
/// Decoder self-attention buckets: position distance 0..=8.
pub const DEC_REL: usize = 9;
/// Cross-attention buckets: signed word offset -4..=4.
pub const CROSS_REL: usize = 9;

fn rand_matrix<T: Scalar>(rows: usize, cols: usize, rng: &mut crate::rng::Rng, f: impl Fn(f64) -> f64) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| T::from_f64(f(standard_normal(rng)))).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

fn uniform<T: Scalar>(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Matrix<T> {
    use rand::Rng as _;
    let bound = 1.0 / (rows as f64).sqrt();
    let data = (0..rows * cols).map(|_| T::from_f64(rng.random_range(-bound..bound))).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

fn ones<T: Scalar>(cols: usize) -> Matrix<T> {
    Matrix::from_vec(1, cols, vec![T::one(); cols]).expect("sized")
}

#[derive(Clone, Debug)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

#[derive(Clone, Debug)]
struct Attn {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
    rel: ParamId,
}

#[derive(Clone, Debug)]
struct Ff {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

#[derive(Clone, Debug)]
struct EncLayer {
    ln1: Norm,
    attn: Attn,
    ln2: Norm,
    ff: Ff,
}

#[derive(Clone, Debug)]
struct DecLayer {
    ln1: Norm,
    self_attn: Attn,
    ln2: Norm,
    cross: Attn,
    ln3: Norm,
    ff: Ff,
}

#[derive(Clone, Debug)]
struct Ids {
    tok_emb: ParamId,
    piece_pos: ParamId,
    emb_proj: Option<ParamId>,
    enc: Vec<EncLayer>,
    enc_norm: Norm,
    sym_emb: ParamId,
    pnp_pos: ParamId,
    dec: Vec<DecLayer>,
    dec_norm: Norm,
    phone_w: ParamId,
    phone_b: ParamId,
    pros_w: ParamId,
    pros_b: ParamId,
    phrase_w: ParamId,
    phrase_b: ParamId,
    pros_mean: ParamId,
    pros_std: ParamId,
}

/// Token-side model input.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderInput<T> {
    pub token_ids: Vec<usize>,
    pub token_words: Vec<usize>,
    /// `tokens x (layers * E)` concatenated layer vectors, present iff the
    /// model uses embeddings.
    pub embeddings: Option<Matrix<T>>,
}

impl<T: Scalar> EncoderInput<T> {
    pub fn new(tokens: &[Token], embeddings: Option<&EmbeddingSet>, config: &PnpModelConfig) -> Result<Self> {
        let embeddings = if config.uses_embeddings() {
            let set = embeddings.ok_or_else(|| Error::Invalid("model expects embeddings".into()))?;
            if set.layer_ids != config.layer_ids || set.dim != config.embed_dim {
                return Err(Error::Invalid(format!(
                    "embedding layers {:?} (dim {}) do not match model layers {:?} (dim {})",
                    set.layer_ids, set.dim, config.layer_ids, config.embed_dim
                )));
            }
            if set.tokens() != tokens.len() {
                return Err(Error::Shape(format!("{} embedding rows for {} tokens", set.tokens(), tokens.len())));
            }
            let data = set.as_slice().iter().map(|&v| T::from_f64(f64::from(v))).collect();
            Some(Matrix::from_vec(tokens.len(), set.width(), data)?)
        } else {
            None
        };
        Ok(Self {
            token_ids: tokens.iter().map(|t| t.id).collect(),
            token_words: tokens.iter().map(|t| t.word_index).collect(),
            embeddings,
        })
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Position of each token inside its word, clamped.
    pub fn piece_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for (j, &w) in self.token_words.iter().enumerate() {
            let p = if j > 0 && self.token_words[j - 1] == w { out[j - 1] + 1 } else { 0 };
            out.push(p);
        }
        out.iter().map(|&p: &usize| p.min(PIECE_POSITIONS - 1)).collect()
    }
}

/// Decoder-side input: the symbol fed at each step and the bookkeeping of the
/// symbol being predicted there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderInput {
    pub prev_symbols: Vec<usize>,
    /// Index of the predicted PnP inside its word.
    pub positions: Vec<usize>,
    /// Word of the predicted PnP.
    pub words: Vec<usize>,
}

impl DecoderInput {
    /// Bookkeeping for predicting `history.len() + 1` symbols given that the
    /// first ones are `history`: the word index advances after every terminator.
    pub fn from_history(history: &[usize]) -> Self {
        let mut prev = Vec::with_capacity(history.len() + 1);
        let mut positions = Vec::with_capacity(history.len() + 1);
        let mut words = Vec::with_capacity(history.len() + 1);
        let (mut word, mut pos) = (0usize, 0usize);
        prev.push(BOS);
        prev.extend_from_slice(history);
        for &s in history {
            positions.push(pos);
            words.push(word);
            if is_terminator(s) {
                word += 1;
                pos = 0;
            } else {
                pos += 1;
            }
        }
        positions.push(pos);
        words.push(word);
        Self {
            prev_symbols: prev,
            positions,
            words,
        }
    }

    /// Teacher-forcing input for gold labels; rejects labels whose word
    /// indices disagree with separator bookkeeping.
    pub fn gold(labels: &[PnpToken]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("no labels"));
        }
        let symbols: Vec<usize> = labels.iter().map(|l| l.symbol).collect();
        let mut d = Self::from_history(&symbols[..symbols.len() - 1]);
        for (i, l) in labels.iter().enumerate() {
            if d.words[i] != l.word_index {
                return Err(Error::Invalid(format!(
                    "label {i} has word {} but separators place it in word {}",
                    l.word_index, d.words[i]
                )));
            }
        }
        d.positions.truncate(labels.len());
        d.words.truncate(labels.len());
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.prev_symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prev_symbols.is_empty()
    }
}

/// Head outputs for a run of decoder steps. Prosody is in standardized units.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadOutputs<T> {
    pub phone_logits: Matrix<T>,
    pub prosody: Matrix<T>,
    pub phrase_logits: Matrix<T>,
}

impl<T: Scalar> HeadOutputs<T> {
    pub fn rows(&self) -> usize {
        self.phone_logits.rows()
    }

    pub fn row(&self, i: usize) -> StepOutput<T> {
        StepOutput {
            phone_logits: self.phone_logits.row(i).to_vec(),
            prosody: self.prosody.row(i).to_vec(),
            phrase_logits: self.phrase_logits.row(i).to_vec(),
        }
    }
}

/// One step's head outputs (prosody standardized).
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput<T> {
    pub phone_logits: Vec<T>,
    pub prosody: Vec<T>,
    pub phrase_logits: Vec<T>,
}

/// Tape handles of a full forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardVars {
    pub encoded: Var,
    pub phone: Var,
    pub prosody: Var,
    pub phrase: Var,
}

/// Encoder output with the word index of every row.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoded<T> {
    pub out: Matrix<T>,
    pub token_words: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PnpModel<T: Scalar> {
    pub config: PnpModelConfig,
    pub params: ParamStore<T>,
    ids: Ids,
}

fn rel_buckets_encoder(words: &[usize]) -> Vec<usize> {
    let mut b = Vec::with_capacity(words.len() * words.len());
    for &wi in words {
        b.extend(words.iter().map(|&wj| wi.saturating_sub(wj).min(ENC_REL - 1)));
    }
    b
}

fn rel_bucket_cross(pnp_word: usize, tok_word: usize) -> usize {
    let half = (CROSS_REL / 2) as isize;
    let off = (tok_word as isize - pnp_word as isize).clamp(-half, half);
    (off + half) as usize
}

fn rel_buckets_cross(pnp_words: &[usize], tok_words: &[usize]) -> Vec<usize> {
    let mut b = Vec::with_capacity(pnp_words.len() * tok_words.len());
    for &p in pnp_words {
        b.extend(tok_words.iter().map(|&t| rel_bucket_cross(p, t)));
    }
    b
}

fn rel_buckets_causal(rows: &[usize], n_keys: usize) -> Vec<usize> {
    let mut b = Vec::with_capacity(rows.len() * n_keys);
    for &i in rows {
        b.extend((0..n_keys).map(|j| i.saturating_sub(j).min(DEC_REL - 1)));
    }
    b
}

impl<T: Scalar> PnpModel<T> {
    fn layout(config: &PnpModelConfig, params: &mut ParamStore<T>, rng: &mut crate::rng::Rng) -> Ids {
        let d = config.width;
        let f = config.ff_width;
        let h = config.heads;
        let emb = |p: &mut ParamStore<T>, name: &str, rows: usize, rng: &mut crate::rng::Rng| {
            p.add(name, rand_matrix(rows, d, rng, |x| 0.3 * x), true)
        };
        let norm = |p: &mut ParamStore<T>, name: &str| Norm {
            gain: p.add(&format!("{name}.gain"), ones(d), true),
            bias: p.add(&format!("{name}.bias"), Matrix::zeros(1, d), true),
        };
        let attn = |p: &mut ParamStore<T>, name: &str, buckets: usize, rng: &mut crate::rng::Rng| Attn {
            wq: p.add(&format!("{name}.wq"), uniform(d, d, rng), true),
            wk: p.add(&format!("{name}.wk"), uniform(d, d, rng), true),
            wv: p.add(&format!("{name}.wv"), uniform(d, d, rng), true),
            wo: p.add(&format!("{name}.wo"), uniform(d, d, rng), true),
            rel: p.add(&format!("{name}.rel"), Matrix::zeros(h, buckets), true),
        };
        let ff = |p: &mut ParamStore<T>, name: &str, rng: &mut crate::rng::Rng| Ff {
            w1: p.add(&format!("{name}.w1"), uniform(d, f, rng), true),
            b1: p.add(&format!("{name}.b1"), Matrix::zeros(1, f), true),
            w2: p.add(&format!("{name}.w2"), uniform(f, d, rng), true),
            b2: p.add(&format!("{name}.b2"), Matrix::zeros(1, d), true),
        };

        let tok_emb = emb(params, "enc.token", config.vocab_size, rng);
        let piece_pos = emb(params, "enc.piece_pos", PIECE_POSITIONS, rng);
        let emb_proj = config
            .uses_embeddings()
            .then(|| params.add("enc.emb_proj", uniform(config.embedding_input_width(), d, rng), true));
        let enc = (0..config.encoder_layers)
            .map(|l| EncLayer {
                ln1: norm(params, &format!("enc.{l}.ln1")),
                attn: attn(params, &format!("enc.{l}.attn"), ENC_REL, rng),
                ln2: norm(params, &format!("enc.{l}.ln2")),
                ff: ff(params, &format!("enc.{l}.ff"), rng),
            })
            .collect();
        let enc_norm = norm(params, "enc.norm");
        let sym_emb = emb(params, "dec.symbol", NUM_PNP_SYMBOLS + 1, rng);
        let pnp_pos = emb(params, "dec.pos", PNP_POSITIONS, rng);
        let dec = (0..config.decoder_layers)
            .map(|l| DecLayer {
                ln1: norm(params, &format!("dec.{l}.ln1")),
                self_attn: attn(params, &format!("dec.{l}.self"), DEC_REL, rng),
                ln2: norm(params, &format!("dec.{l}.ln2")),
                cross: attn(params, &format!("dec.{l}.cross"), CROSS_REL, rng),
                ln3: norm(params, &format!("dec.{l}.ln3")),
                ff: ff(params, &format!("dec.{l}.ff"), rng),
            })
            .collect();
        let dec_norm = norm(params, "dec.norm");
        let phone_w = params.add("head.phone.w", uniform(d, NUM_PNP_SYMBOLS, rng), true);
        let phone_b = params.add("head.phone.b", Matrix::zeros(1, NUM_PNP_SYMBOLS), true);
        let pros_w = params.add("head.prosody.w", uniform(d, PROSODY_DIM, rng), true);
        let pros_b = params.add("head.prosody.b", Matrix::zeros(1, PROSODY_DIM), true);
        let phrase_w = params.add("head.phrase.w", uniform(d, NUM_PHRASE_TYPES, rng), true);
        let phrase_b = params.add("head.phrase.b", Matrix::zeros(1, NUM_PHRASE_TYPES), true);
        let pros_mean = params.add("prosody.mean", Matrix::zeros(1, PROSODY_DIM), false);
        let pros_std = params.add("prosody.std", ones(PROSODY_DIM), false);
        Ids {
            tok_emb,
            piece_pos,
            emb_proj,
            enc,
            enc_norm,
            sym_emb,
            pnp_pos,
            dec,
            dec_norm,
            phone_w,
            phone_b,
            pros_w,
            pros_b,
            phrase_w,
            phrase_b,
            pros_mean,
            pros_std,
        }
    }

    /// Training initialization: uniform `±1/sqrt(fan_in)` projections, small
    /// normal embedding tables, unit norms, zero biases.
    pub fn init(config: PnpModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut rng = derived(seed, "llm2pnp-init");
        let ids = Self::layout(&config, &mut params, &mut rng);
        Ok(Self { config, params, ids })
    }

    /// Seeded random weights with every tensor (norms, biases, score biases
    /// included) perturbed away from its neutral value, and plausible
    /// prosody statistics. Used for causality and equivalence checks.
    pub fn random_fixture(config: PnpModelConfig, seed: u64) -> Result<Self> {
        let mut m = Self::init(config, seed)?;
        let mut rng = derived(seed, "llm2pnp-fixture");
        for id in 0..m.params.len() {
            if !m.params.is_trainable(id) {
                continue;
            }
            let name = m.params.name(id).to_string();
            let scale = if name.ends_with(".rel") || name.ends_with(".bias") || name.ends_with(".b1")
                || name.ends_with(".b2") || name.ends_with(".b")
            {
                0.3
            } else if name.ends_with(".gain") {
                0.2
            } else {
                continue;
            };
            for v in m.params.get_mut(id).as_mut_slice() {
                *v = *v + T::from_f64(scale * standard_normal(&mut rng));
            }
        }
        let mean = [6.0, 110.0, 2.5, 20.0, 105.0, 2.5, 6.0, 105.0, 2.3];
        let std = [1.0, 10.0, 0.3, 10.0, 10.0, 0.3, 3.0, 10.0, 0.5];
        m.set_prosody_stats(&mean, &std)?;
        Ok(m)
    }

    pub fn set_prosody_stats(&mut self, mean: &[f64], std: &[f64]) -> Result<()> {
        if mean.len() != PROSODY_DIM || std.len() != PROSODY_DIM || std.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(Error::Invalid("prosody statistics need 9 means and 9 positive deviations".into()));
        }
        let to_row = |v: &[f64]| Matrix::from_vec(1, PROSODY_DIM, v.iter().map(|&x| T::from_f64(x)).collect());
        *self.params.get_mut(self.ids.pros_mean) = to_row(mean)?;
        *self.params.get_mut(self.ids.pros_std) = to_row(std)?;
        Ok(())
    }

    pub fn prosody_stats(&self) -> (Vec<T>, Vec<T>) {
        (
            self.params.get(self.ids.pros_mean).as_slice().to_vec(),
            self.params.get(self.ids.pros_std).as_slice().to_vec(),
        )
    }

    /// Standardizes a raw prosody vector with the stored statistics.
    pub fn standardize(&self, raw: &[f32]) -> Vec<T> {
        let (m, s) = self.prosody_stats();
        raw.iter().zip(m.iter().zip(&s)).map(|(&x, (&m, &s))| (T::from_f64(f64::from(x)) - m) / s).collect()
    }

    pub fn destandardize(&self, z: &[T]) -> [f32; PROSODY_DIM] {
        let (m, s) = self.prosody_stats();
        let mut out = [0.0f32; PROSODY_DIM];
        for (o, (&zv, (&mv, &sv))) in out.iter_mut().zip(z.iter().zip(m.iter().zip(&s))) {
            *o = (zv * sv + mv).as_f64() as f32;
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> PnpModel<U> {
        PnpModel {
            config: self.config.clone(),
            params: self.params.cast(),
            ids: self.ids.clone(),
        }
    }

    /// Writes `<stem>.weights` and `<stem>.cfg`.
    pub fn save(&self, weights: &Path) -> Result<()> {
        self.params.to_tensor_file().write(weights)?;
        let cfg_path = weights.with_extension("cfg");
        std::fs::write(&cfg_path, self.config.to_kv().to_text()).map_err(|e| Error::io(&cfg_path, e))
    }

    pub fn load(weights: &Path) -> Result<Self> {
        let cfg_path = weights.with_extension("cfg");
        let config = PnpModelConfig::from_kv(&KvConfig::read(&cfg_path)?)?;
        let mut m = Self::init(config, 0)?;
        m.params.load_tensor_file(&TensorFile::read(weights)?)?;
        if let Some(bad) = m.params.all_finite() {
            return Err(Error::NonFinite(format!("parameter {bad} in {}", weights.display())));
        }
        Ok(m)
    }

    fn p(&self, id: ParamId) -> &Matrix<T> {
        self.params.get(id)
    }

    // ---- tape forward -------------------------------------------------

    fn tape_norm(&self, tape: &mut Tape<'_, T>, x: Var, n: &Norm) -> Result<Var> {
        tape.layer_norm(x, Var::Param(n.gain), Var::Param(n.bias))
    }

    fn tape_ff(&self, tape: &mut Tape<'_, T>, x: Var, f: &Ff) -> Result<Var> {
        let h = tape.affine(x, Var::Param(f.w1), Var::Param(f.b1))?;
        let h = tape.gelu(h);
        tape.affine(h, Var::Param(f.w2), Var::Param(f.b2))
    }

    #[allow(clippy::too_many_arguments)]
    fn tape_attn(
        &self,
        tape: &mut Tape<'_, T>,
        x: Var,
        kv: Var,
        a: &Attn,
        mask: &AttentionMask,
        buckets: Vec<usize>,
    ) -> Result<Var> {
        let q = tape.matmul(x, Var::Param(a.wq))?;
        let k = tape.matmul(kv, Var::Param(a.wk))?;
        let v = tape.matmul(kv, Var::Param(a.wv))?;
        let o = tape.attention(q, k, v, self.config.heads, mask, Some((Var::Param(a.rel), buckets)))?;
        tape.matmul(o, Var::Param(a.wo))
    }

    /// Encoder on the tape; returns the final normalized outputs.
    pub fn encode_tape(&self, tape: &mut Tape<'_, T>, input: &EncoderInput<T>) -> Result<Var> {
        let mask = build_encoder_mask(&input.token_words)?;
        let mut x = tape.gather(Var::Param(self.ids.tok_emb), &input.token_ids)?;
        let pp = tape.gather(Var::Param(self.ids.piece_pos), &input.piece_positions())?;
        x = tape.add(x, pp)?;
        match (self.ids.emb_proj, &input.embeddings) {
            (Some(proj), Some(e)) => {
                if e.shape() != (input.len(), self.config.embedding_input_width()) {
                    return Err(Error::Shape(format!("embedding input {:?}", e.shape())));
                }
                let c = tape.constant(e.clone());
                let pe = tape.matmul(c, Var::Param(proj))?;
                x = tape.add(x, pe)?;
            }
            (None, None) => {}
            _ => return Err(Error::Invalid("embedding input does not match the model configuration".into())),
        }
        let buckets = rel_buckets_encoder(&input.token_words);
        for layer in &self.ids.enc {
            let h = self.tape_norm(tape, x, &layer.ln1)?;
            let a = self.tape_attn(tape, h, h, &layer.attn, &mask, buckets.clone())?;
            x = tape.add(x, a)?;
            let h = self.tape_norm(tape, x, &layer.ln2)?;
            let f = self.tape_ff(tape, h, &layer.ff)?;
            x = tape.add(x, f)?;
        }
        self.tape_norm(tape, x, &self.ids.enc_norm)
    }

    /// Decoder and heads on the tape over encoder rows `enc`.
    pub fn decode_tape(
        &self,
        tape: &mut Tape<'_, T>,
        enc: Var,
        token_words: &[usize],
        input: &DecoderInput,
        lookahead: Limit,
    ) -> Result<(Var, Var, Var)> {
        let n = input.len();
        let cross_mask = build_cross_mask(&input.words, token_words, lookahead)?;
        let self_mask = build_causal_mask(n);
        let positions: Vec<usize> = input.positions.iter().map(|&p| p.min(PNP_POSITIONS - 1)).collect();
        let mut y = tape.gather(Var::Param(self.ids.sym_emb), &input.prev_symbols)?;
        let pe = tape.gather(Var::Param(self.ids.pnp_pos), &positions)?;
        y = tape.add(y, pe)?;
        let rows: Vec<usize> = (0..n).collect();
        let self_b = rel_buckets_causal(&rows, n);
        let cross_b = rel_buckets_cross(&input.words, token_words);
        for layer in &self.ids.dec {
            let h = self.tape_norm(tape, y, &layer.ln1)?;
            let a = self.tape_attn(tape, h, h, &layer.self_attn, &self_mask, self_b.clone())?;
            y = tape.add(y, a)?;
            let h = self.tape_norm(tape, y, &layer.ln2)?;
            let a = self.tape_attn(tape, h, enc, &layer.cross, &cross_mask, cross_b.clone())?;
            y = tape.add(y, a)?;
            let h = self.tape_norm(tape, y, &layer.ln3)?;
            let f = self.tape_ff(tape, h, &layer.ff)?;
            y = tape.add(y, f)?;
        }
        let h = self.tape_norm(tape, y, &self.ids.dec_norm)?;
        let phone = tape.affine(h, Var::Param(self.ids.phone_w), Var::Param(self.ids.phone_b))?;
        let pros = tape.affine(h, Var::Param(self.ids.pros_w), Var::Param(self.ids.pros_b))?;
        let phrase = tape.affine(h, Var::Param(self.ids.phrase_w), Var::Param(self.ids.phrase_b))?;
        Ok((phone, pros, phrase))
    }

    pub fn forward_tape(
        &self,
        tape: &mut Tape<'_, T>,
        enc_in: &EncoderInput<T>,
        dec_in: &DecoderInput,
        lookahead: Limit,
    ) -> Result<ForwardVars> {
        let encoded = self.encode_tape(tape, enc_in)?;
        let (phone, prosody, phrase) = self.decode_tape(tape, encoded, &enc_in.token_words, dec_in, lookahead)?;
        Ok(ForwardVars {
            encoded,
            phone,
            prosody,
            phrase,
        })
    }

    /// Encoder outputs, one row per token.
    pub fn encode(&self, input: &EncoderInput<T>) -> Result<Encoded<T>> {
        let mut tape = Tape::new(&self.params);
        let v = self.encode_tape(&mut tape, input)?;
        Ok(Encoded {
            out: tape.value(v).clone(),
            token_words: input.token_words.clone(),
        })
    }

    /// Head outputs for every position of `dec_in`, gold history.
    pub fn decode_all(&self, enc: &Encoded<T>, dec_in: &DecoderInput, lookahead: Limit) -> Result<HeadOutputs<T>> {
        let mut tape = Tape::new(&self.params);
        let e = tape.constant(enc.out.clone());
        let (p, r, f) = self.decode_tape(&mut tape, e, &enc.token_words, dec_in, lookahead)?;
        Ok(HeadOutputs {
            phone_logits: tape.value(p).clone(),
            prosody: tape.value(r).clone(),
            phrase_logits: tape.value(f).clone(),
        })
    }

    /// One head-output triple per label, computed with the gold history.
    pub fn teacher_forced_outputs(
        &self,
        enc_in: &EncoderInput<T>,
        labels: &[PnpToken],
        lookahead: Limit,
    ) -> Result<HeadOutputs<T>> {
        let dec_in = DecoderInput::gold(labels)?;
        if let (Some(&last_tok), Some(l)) = (enc_in.token_words.last(), labels.last()) {
            if l.word_index > last_tok {
                return Err(Error::Invalid(format!(
                    "labels reach word {} but tokens end at word {last_tok}",
                    l.word_index
                )));
            }
        }
        let enc = self.encode(enc_in)?;
        self.decode_all(&enc, &dec_in, lookahead)
    }

    /// Next-symbol outputs after `history`, recomputing the whole decoder.
    pub fn decode_step(&self, history: &[usize], enc: &Encoded<T>, lookahead: Limit) -> Result<StepOutput<T>> {
        let dec_in = DecoderInput::from_history(history);
        let out = self.decode_all(enc, &dec_in, lookahead)?;
        Ok(out.row(out.rows() - 1))
    }

    // ---- cached single-row decoding ----------------------------------

    fn row_norm(&self, x: &Matrix<T>, n: &Norm) -> Result<Matrix<T>> {
        Ok(layer_norm(x, self.p(n.gain), self.p(n.bias))?.0)
    }

    fn row_ff(&self, x: &Matrix<T>, f: &Ff) -> Result<Matrix<T>> {
        let h = add_row(&matmul(x, self.p(f.w1))?, self.p(f.b1))?.map(gelu);
        add_row(&matmul(&h, self.p(f.w2))?, self.p(f.b2))
    }

    /// Cross-attention keys and values for the current encoder rows.
    pub fn cross_cache(&self, enc: &Encoded<T>) -> Result<Vec<(Matrix<T>, Matrix<T>)>> {
        self.ids
            .dec
            .iter()
            .map(|l| Ok((matmul(&enc.out, self.p(l.cross.wk))?, matmul(&enc.out, self.p(l.cross.wv))?)))
            .collect()
    }

    /// Computes the next row given the cached self-attention keys/values and
    /// appends this row's keys/values to the cache.
    pub(crate) fn step_cached(
        &self,
        cache: &mut StepCache<T>,
        cross: &[(Matrix<T>, Matrix<T>)],
        token_words: &[usize],
        lookahead: Limit,
    ) -> Result<StepOutput<T>> {
        let i = cache.history.len();
        let prev = cache.history.last().copied().unwrap_or(BOS);
        let pos = cache.position.min(PNP_POSITIONS - 1);
        let word = cache.word;
        let mut y = add(
            &Matrix::from_vec(1, self.config.width, self.p(self.ids.sym_emb).row(prev).to_vec())?,
            &Matrix::from_vec(1, self.config.width, self.p(self.ids.pnp_pos).row(pos).to_vec())?,
        )?;
        let self_mask = AttentionMask::from_rows(&[vec![true; i + 1]])?;
        let self_b = rel_buckets_causal(&[i], i + 1);
        let cross_row: Vec<bool> = token_words.iter().map(|&w| lookahead.admits(w, word)).collect();
        if !cross_row.iter().any(|&a| a) {
            return Err(Error::EmptyMaskRow { row: i });
        }
        let cross_mask = AttentionMask::from_rows(&[cross_row])?;
        let cross_b = rel_buckets_cross(&[word], token_words);
        for (l, layer) in self.ids.dec.iter().enumerate() {
            let h = self.row_norm(&y, &layer.ln1)?;
            let q = matmul(&h, self.p(layer.self_attn.wq))?;
            let (keys, values) = &mut cache.self_kv[l];
            keys.append(&matmul(&h, self.p(layer.self_attn.wk))?)?;
            values.append(&matmul(&h, self.p(layer.self_attn.wv))?)?;
            let sb = ScoreBias {
                table: self.p(layer.self_attn.rel),
                bucket: &self_b,
            };
            let a = attend(&q, keys, values, self.config.heads, &self_mask, Some(sb))?.output;
            y = add(&y, &matmul(&a, self.p(layer.self_attn.wo))?)?;

            let h = self.row_norm(&y, &layer.ln2)?;
            let q = matmul(&h, self.p(layer.cross.wq))?;
            let cb = ScoreBias {
                table: self.p(layer.cross.rel),
                bucket: &cross_b,
            };
            let a = attend(&q, &cross[l].0, &cross[l].1, self.config.heads, &cross_mask, Some(cb))?.output;
            y = add(&y, &matmul(&a, self.p(layer.cross.wo))?)?;

            let h = self.row_norm(&y, &layer.ln3)?;
            y = add(&y, &self.row_ff(&h, &layer.ff)?)?;
        }
        let h = self.row_norm(&y, &self.ids.dec_norm)?;
        let head = |w: ParamId, b: ParamId| -> Result<Vec<T>> { Ok(add_row(&matmul(&h, self.p(w))?, self.p(b))?.into_vec()) };
        Ok(StepOutput {
            phone_logits: head(self.ids.phone_w, self.ids.phone_b)?,
            prosody: head(self.ids.pros_w, self.ids.pros_b)?,
            phrase_logits: head(self.ids.phrase_w, self.ids.phrase_b)?,
        })
    }

    pub(crate) fn new_cache(&self) -> StepCache<T> {
        StepCache {
            self_kv: (0..self.config.decoder_layers)
                .map(|_| (Matrix::empty(self.config.width), Matrix::empty(self.config.width)))
                .collect(),
            history: Vec::new(),
            word: 0,
            position: 0,
        }
    }
}

/// Per-stream decoder state: self-attention keys/values per layer plus the
/// emitted symbols and their word bookkeeping.
#[derive(Clone, Debug)]
pub(crate) struct StepCache<T> {
    self_kv: Vec<(Matrix<T>, Matrix<T>)>,
    pub history: Vec<usize>,
    pub word: usize,
    pub position: usize,
}

impl<T> StepCache<T> {
    pub fn record(&mut self, symbol: usize) {
        self.history.push(symbol);
        if is_terminator(symbol) {
            self.word += 1;
            self.position = 0;
        } else {
            self.position += 1;
        }
    }
}
