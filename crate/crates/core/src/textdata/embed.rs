//! Contextual token embeddings from a pluggable provider.
//!
//! The default [`HashEmbedder`] stands in for a frozen language model: each
//! vector mixes a hashed piece code, a positional code and the mean hashed
//! vector of the words seen so far (context paragraph, then the words of the
//! text up to and including the token's own word). Topic nouns share a common
//! cluster direction, so the mean carries the paragraph topic.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::lexicon::{topic_of_word, Topic};
use super::tokenize::{split_punct, Token};
use crate::rng::hashed_normal;
use crate::{Error, Result};

pub const EMBED_DIM: usize = 32;
pub const DEFAULT_LAYER_IDS: [usize; 3] = [2, 6, 10];

const PIECE_DIM: usize = 12;
const POS_DIM: usize = 4;
const CONTEXT_DIM: usize = EMBED_DIM - PIECE_DIM - POS_DIM;
/// Weight of the shared topic direction in a topic noun's vector.
const CLUSTER_SCALE: f64 = 5.0;

/// Per-token, per-layer vectors, stored token-major: `[token][layer][dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    pub layer_ids: Vec<usize>,
    pub dim: usize,
    data: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(layer_ids: Vec<usize>, dim: usize, data: Vec<f32>) -> Result<Self> {
        let width = layer_ids.len() * dim;
        if layer_ids.is_empty() || dim == 0 || data.len() % width != 0 {
            return Err(Error::Shape(format!(
                "{} values for {} layers of dim {dim}",
                data.len(),
                layer_ids.len()
            )));
        }
        Ok(Self { layer_ids, dim, data })
    }

    pub fn tokens(&self) -> usize {
        self.data.len() / self.width()
    }

    /// Concatenated layer vectors per token.
    pub fn width(&self) -> usize {
        self.layer_ids.len() * self.dim
    }

    pub fn vector(&self, token: usize, layer_slot: usize) -> &[f32] {
        let start = token * self.width() + layer_slot * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn token_row(&self, token: usize) -> &[f32] {
        &self.data[token * self.width()..(token + 1) * self.width()]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn to_base64(&self) -> String {
        let bytes: Vec<u8> = self.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        B64.encode(bytes)
    }

    pub fn from_base64(layer_ids: Vec<usize>, dim: usize, text: &str) -> Result<Self> {
        let bytes = B64
            .decode(text)
            .map_err(|e| Error::format("embedding payload", e.to_string()))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::format("embedding payload", "length not a multiple of 4"));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(layer_ids, dim, data)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub layer_ids: Vec<usize>,
    pub dim: usize,
    pub data: String,
}

impl From<&EmbeddingSet> for EmbeddingRecord {
    fn from(e: &EmbeddingSet) -> Self {
        Self {
            layer_ids: e.layer_ids.clone(),
            dim: e.dim,
            data: e.to_base64(),
        }
    }
}

impl TryFrom<&EmbeddingRecord> for EmbeddingSet {
    type Error = Error;
    fn try_from(r: &EmbeddingRecord) -> Result<Self> {
        EmbeddingSet::from_base64(r.layer_ids.clone(), r.dim, &r.data)
    }
}

pub trait EmbeddingProvider {
    fn dim(&self) -> usize;

    /// One vector per `(token, layer id)`. `words` are the surfaces the
    /// tokens index into.
    fn embed(&self, context: &[String], words: &[String], tokens: &[Token], layer_ids: &[usize]) -> Result<EmbeddingSet>;
}

#[derive(Clone, Copy, Debug)]
pub struct HashEmbedder {
    pub seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { seed: 0x5eed_e3b }
    }
}

impl HashEmbedder {
    fn word_vector(&self, word: &str) -> Vec<f64> {
        let core = split_punct(word).0;
        let mut v = hashed_normal(self.seed, &format!("word:{core}"), CONTEXT_DIM);
        if let Some(topic) = topic_of_word(core) {
            let cluster = self.cluster(topic);
            for (a, c) in v.iter_mut().zip(cluster) {
                *a += CLUSTER_SCALE * c;
            }
        }
        v
    }

    fn cluster(&self, topic: Topic) -> Vec<f64> {
        hashed_normal(self.seed, &format!("topic:{}", topic.name()), CONTEXT_DIM)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dim(&self) -> usize {
        EMBED_DIM
    }

    fn embed(&self, context: &[String], words: &[String], tokens: &[Token], layer_ids: &[usize]) -> Result<EmbeddingSet> {
        if tokens.is_empty() || words.is_empty() {
            return Err(Error::Empty("embedding needs a non-empty text"));
        }
        if layer_ids.is_empty() {
            return Err(Error::Empty("embedding needs at least one layer id"));
        }
        if tokens.iter().any(|t| t.word_index >= words.len()) {
            return Err(Error::Invalid("token word index beyond the word list".into()));
        }
        // running sums so that word k sees context plus words 0..=k
        let mut sum = vec![0.0f64; CONTEXT_DIM];
        for w in context {
            for (s, x) in sum.iter_mut().zip(self.word_vector(w)) {
                *s += x;
            }
        }
        let mut prefix_means = Vec::with_capacity(words.len());
        for (k, w) in words.iter().enumerate() {
            for (s, x) in sum.iter_mut().zip(self.word_vector(w)) {
                *s += x;
            }
            let n = (context.len() + k + 1) as f64;
            prefix_means.push(sum.iter().map(|s| s / n).collect::<Vec<_>>());
        }

        let mut data = Vec::with_capacity(tokens.len() * layer_ids.len() * EMBED_DIM);
        for (j, t) in tokens.iter().enumerate() {
            let piece = hashed_normal(self.seed, &format!("piece:{}", t.surface), PIECE_DIM);
            let pos = j as f64;
            let code = [(pos / 4.0).sin(), (pos / 4.0).cos(), (pos / 32.0).sin(), (pos / 32.0).cos()];
            let ctx = &prefix_means[t.word_index];
            for &l in layer_ids {
                // deeper layers lean on context, shallower ones on the piece
                let m = (l as f64 / 12.0).min(1.0);
                data.extend(piece.iter().map(|x| ((1.0 - 0.5 * m) * x) as f32));
                data.extend(code.iter().map(|&x| x as f32));
                data.extend(ctx.iter().map(|x| ((0.5 + m) * x) as f32));
            }
        }
        EmbeddingSet::new(layer_ids.to_vec(), EMBED_DIM, data)
    }
}
