//! Simulated language-model word source on a discrete clock.

use crate::tensor::Matrix;
use crate::textdata::{tokenize, EmbeddingProvider, Token, Vocab};
use crate::{Error, Result};

/// One generated word with its tokens and per-token embedding rows.
#[derive(Clone, Debug, PartialEq)]
pub struct WordArrivalEvent {
    pub word_index: usize,
    pub word: String,
    pub tokens: Vec<Token>,
    /// `tokens x (layers * dim)`; absent when no layers are requested.
    pub embeddings: Option<Matrix<f32>>,
    pub arrival_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceEvent {
    Word(WordArrivalEvent),
    End { arrival_ms: u64 },
}

impl SourceEvent {
    pub fn arrival_ms(&self) -> u64 {
        match self {
            SourceEvent::Word(w) => w.arrival_ms,
            SourceEvent::End { arrival_ms } => *arrival_ms,
        }
    }
}

/// Emits `words` at `0, dt, 2dt, ...` followed by an end marker one interval
/// after the last word. Embeddings of word `i` are computed from `context`
/// and words `0..=i` only, as a generating model would see them.
pub fn simulate_llm_source(
    context: &[String],
    words: &[String],
    vocab: &Vocab,
    provider: &dyn EmbeddingProvider,
    layer_ids: &[usize],
    inter_arrival_ms: u64,
) -> Result<Vec<SourceEvent>> {
    let all_tokens = tokenize(words, Some(vocab));
    let mut events = Vec::with_capacity(words.len() + 1);
    for (i, word) in words.iter().enumerate() {
        let prefix_end = all_tokens.iter().position(|t| t.word_index > i).unwrap_or(all_tokens.len());
        let tokens: Vec<Token> = all_tokens[..prefix_end].iter().filter(|t| t.word_index == i).cloned().collect();
        if tokens.is_empty() {
            return Err(Error::Invalid(format!("word {i} ({word:?}) produced no tokens")));
        }
        let embeddings = if layer_ids.is_empty() {
            None
        } else {
            let set = provider.embed(context, &words[..=i], &all_tokens[..prefix_end], layer_ids)?;
            let first = prefix_end - tokens.len();
            let mut m = Matrix::empty(set.width());
            for t in first..prefix_end {
                m.push_row(set.token_row(t))?;
            }
            Some(m)
        };
        events.push(SourceEvent::Word(WordArrivalEvent {
            word_index: i,
            word: word.clone(),
            tokens,
            embeddings,
            arrival_ms: i as u64 * inter_arrival_ms,
        }));
    }
    events.push(SourceEvent::End {
        arrival_ms: words.len() as u64 * inter_arrival_ms,
    });
    Ok(events)
}

/// Whitespace-separated words of `text`.
pub fn split_text(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}
