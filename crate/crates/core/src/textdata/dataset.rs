//! Distillation dataset: context/text split, teacher labels, embeddings and
//! the line-delimited JSON record format.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::corpus::Paragraph;
use super::embed::{EmbeddingProvider, EmbeddingRecord, EmbeddingSet};
use super::phones::{inventory_listing, symbol_id, symbol_name, PhraseType, PnpToken, ProsodyVector};
use super::teacher::{teacher_labels, WordTags};
use super::tokenize::{split_punct, tokenize, Token, Vocab};
use crate::rng::{derived, Rng};
use crate::{Error, Result};

pub const MAX_T2PRED_SENTENCES: usize = 5;

/// Splits a paragraph into `(context, t2pred)` sentence lists: the text to
/// predict is the last `k` sentences with `k` uniform in `1..=min(5, S-1)`.
/// A single sentence becomes the whole text with an empty context.
pub fn split_paragraph(sentences: &[Vec<String>], rng: &mut Rng) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>)> {
    match sentences.len() {
        0 => Err(Error::Empty("paragraph without sentences")),
        1 => Ok((Vec::new(), sentences.to_vec())),
        s => {
            let k = rng.random_range(1..=MAX_T2PRED_SENTENCES.min(s - 1));
            Ok((sentences[..s - k].to_vec(), sentences[s - k..].to_vec()))
        }
    }
}

/// Per-word tags plus training-set membership.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordInfo {
    #[serde(flatten)]
    pub tags: WordTags,
    /// The word never occurs in the training split.
    pub oov: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub paragraph: usize,
    pub context: Vec<String>,
    pub t2pred: Vec<Vec<String>>,
    pub tokens: Vec<Token>,
    pub embeddings: EmbeddingSet,
    pub labels: Vec<PnpToken>,
    pub words: Vec<WordInfo>,
}

impl Sample {
    /// Flattened text words.
    pub fn text_words(&self) -> Vec<String> {
        self.t2pred.iter().flatten().cloned().collect()
    }

    pub fn word_count(&self) -> usize {
        self.t2pred.iter().map(Vec::len).sum()
    }

    pub fn token_words(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.word_index).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    symbol: String,
    prosody: ProsodyVector,
    frames: usize,
    phrase: PhraseType,
    word_index: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    paragraph: usize,
    context: Vec<String>,
    t2pred: Vec<Vec<String>>,
    tokens: Vec<Token>,
    word_index: Vec<usize>,
    embeddings: EmbeddingRecord,
    labels: Vec<LabelRecord>,
    words: Vec<WordInfo>,
}

impl Sample {
    pub fn to_json(&self) -> String {
        let rec = SampleRecord {
            paragraph: self.paragraph,
            context: self.context.clone(),
            t2pred: self.t2pred.clone(),
            tokens: self.tokens.clone(),
            word_index: self.token_words(),
            embeddings: EmbeddingRecord::from(&self.embeddings),
            labels: self
                .labels
                .iter()
                .map(|l| LabelRecord {
                    symbol: symbol_name(l.symbol).to_string(),
                    prosody: l.prosody,
                    frames: l.frames,
                    phrase: l.phrase,
                    word_index: l.word_index,
                })
                .collect(),
            words: self.words.clone(),
        };
        serde_json::to_string(&rec).expect("sample records serialize")
    }

    pub fn from_json(line: &str) -> Result<Self> {
        let rec: SampleRecord = serde_json::from_str(line).map_err(|e| Error::format("dataset record", e.to_string()))?;
        let labels = rec
            .labels
            .into_iter()
            .map(|l| {
                let symbol = symbol_id(&l.symbol).ok_or_else(|| Error::format("dataset record", format!("unknown symbol {}", l.symbol)))?;
                Ok(PnpToken {
                    symbol,
                    prosody: l.prosody,
                    frames: l.frames,
                    phrase: l.phrase,
                    word_index: l.word_index,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let embeddings = EmbeddingSet::try_from(&rec.embeddings)?;
        let sample = Sample {
            paragraph: rec.paragraph,
            context: rec.context,
            t2pred: rec.t2pred,
            tokens: rec.tokens,
            embeddings,
            labels,
            words: rec.words,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.word_count();
        let bad = |d: String| Err(Error::format("dataset record", d));
        if self.t2pred.is_empty() || self.t2pred.len() > MAX_T2PRED_SENTENCES {
            return bad(format!("{} sentences", self.t2pred.len()));
        }
        if self.tokens.iter().any(|t| t.word_index >= n) || self.tokens.windows(2).any(|w| w[1].word_index < w[0].word_index) {
            return bad("token word indices".into());
        }
        if self.embeddings.tokens() != self.tokens.len() {
            return bad("embedding count".into());
        }
        if self.labels.last().map(|l| l.symbol) != Some(super::phones::EOS) {
            return bad("labels must end with eos".into());
        }
        if self.words.len() != n {
            return bad("word info count".into());
        }
        Ok(())
    }
}

/// Builds one sample; `vocab` assigns token ids.
pub fn make_sample(
    paragraph: &Paragraph,
    seed: u64,
    vocab: Option<&Vocab>,
    provider: &dyn EmbeddingProvider,
    layer_ids: &[usize],
) -> Result<Sample> {
    let mut rng = derived(seed, &format!("split-{}", paragraph.index));
    let (context, t2pred) = split_paragraph(&paragraph.sentences, &mut rng)?;
    let context: Vec<String> = context.into_iter().flatten().collect();
    let words: Vec<String> = t2pred.iter().flatten().cloned().collect();
    let tokens = tokenize(&words, vocab);
    let embeddings = provider.embed(&context, &words, &tokens, layer_ids)?;
    let (labels, tags) = teacher_labels(&t2pred, &context);
    Ok(Sample {
        paragraph: paragraph.index,
        context,
        t2pred,
        tokens,
        embeddings,
        labels,
        words: tags.into_iter().map(|tags| WordInfo { tags, oov: false }).collect(),
    })
}

pub struct Dataset {
    pub train: Vec<Sample>,
    pub valid: Vec<Sample>,
    pub vocab: Vocab,
}

fn word_key(w: &str) -> &str {
    split_punct(w).0
}

/// Builds train and validation samples: holdout paragraphs go to validation,
/// the token vocabulary comes from training text only, and every validation
/// word absent from training text is flagged OOV.
pub fn build_dataset(
    corpus: &[Paragraph],
    seed: u64,
    provider: &dyn EmbeddingProvider,
    layer_ids: &[usize],
) -> Result<Dataset> {
    build_dataset_limited(corpus, seed, provider, layer_ids, None)
}

/// As [`build_dataset`], keeping only the first `max_train` training
/// paragraphs; every holdout paragraph still goes to validation. Vocabulary
/// and OOV flags refer to the kept training samples.
pub fn build_dataset_limited(
    corpus: &[Paragraph],
    seed: u64,
    provider: &dyn EmbeddingProvider,
    layer_ids: &[usize],
    max_train: Option<usize>,
) -> Result<Dataset> {
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for p in corpus {
        if p.holdout {
            valid.push(make_sample(p, seed, None, provider, layer_ids)?);
        } else if max_train.is_none_or(|m| train.len() < m) {
            train.push(make_sample(p, seed, None, provider, layer_ids)?);
        }
    }
    let vocab = Vocab::build(train.iter().flat_map(|s| s.t2pred.iter().flatten().map(String::as_str)));
    let seen: HashSet<&str> = train.iter().flat_map(|s| s.t2pred.iter().flatten().map(|w| word_key(w))).collect();
    let mut oov_flags = Vec::new();
    for s in &valid {
        oov_flags.push(s.t2pred.iter().flatten().map(|w| !seen.contains(word_key(w))).collect::<Vec<_>>());
    }
    for (s, flags) in valid.iter_mut().zip(oov_flags) {
        for (info, oov) in s.words.iter_mut().zip(flags) {
            info.oov = oov;
        }
    }
    for s in train.iter_mut().chain(valid.iter_mut()) {
        for t in &mut s.tokens {
            t.id = vocab.id(&t.surface);
        }
    }
    Ok(Dataset { train, valid, vocab })
}

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALID_FILE: &str = "valid.jsonl";
pub const PHONES_FILE: &str = "phones.txt";
pub const TOKENS_FILE: &str = "tokens.txt";

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        writeln!(w, "{}", s.to_json()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Sample::from_json(&line).map_err(|e| Error::format("dataset line", format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

/// Writes both splits and the phone and token sidecars into `dir`.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = [TRAIN_FILE, VALID_FILE, PHONES_FILE, TOKENS_FILE].iter().map(|f| dir.join(f)).collect();
    write_samples(&paths[0], &data.train)?;
    write_samples(&paths[1], &data.valid)?;
    fs::write(&paths[2], inventory_listing()).map_err(|e| Error::io(&paths[2], e))?;
    fs::write(&paths[3], data.vocab.listing()).map_err(|e| Error::io(&paths[3], e))?;
    Ok(paths)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let tokens = dir.join(TOKENS_FILE);
    let text = fs::read_to_string(&tokens).map_err(|e| Error::io(&tokens, e))?;
    Ok(Dataset {
        train: read_samples(&dir.join(TRAIN_FILE))?,
        valid: read_samples(&dir.join(VALID_FILE))?,
        vocab: Vocab::parse_listing(&text)?,
    })
}
