//! Fixed-length sub-word pieces and the token vocabulary.
//!
//! A word splits into its letter/digit core, cut into pieces of at most
//! [`MAX_PIECE`] characters, followed by one piece per trailing punctuation
//! mark. Concatenating a word's pieces gives back the word.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_PIECE: usize = 4;
pub const UNK: &str = "<unk>";
pub const UNK_ID: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: usize,
    pub surface: String,
    pub word_index: usize,
}

pub fn is_punct(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | ',')
}

/// Splits off trailing punctuation: `("table", ".")`.
pub fn split_punct(word: &str) -> (&str, &str) {
    let core_len = word.trim_end_matches(is_punct).len();
    word.split_at(core_len)
}

pub fn pieces(word: &str) -> Vec<String> {
    let (core, punct) = split_punct(word);
    let chars: Vec<char> = core.chars().collect();
    let mut out: Vec<String> = chars.chunks(MAX_PIECE).map(|c| c.iter().collect()).collect();
    out.extend(punct.chars().map(String::from));
    out
}

/// Token vocabulary. Id 0 is reserved for unknown pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from_symbols(vec![UNK.to_string()]).expect("unk-only vocabulary")
    }
}

impl Vocab {
    pub fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        if symbols.first().map(String::as_str) != Some(UNK) {
            return Err(Error::format("vocabulary", format!("first symbol must be {UNK}")));
        }
        let index: HashMap<String, usize> = symbols.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        if index.len() != symbols.len() {
            return Err(Error::format("vocabulary", "duplicate symbol"));
        }
        Ok(Self { symbols, index })
    }

    /// Collects every piece of `words`, sorted for a stable numbering.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set: Vec<String> = words.into_iter().flat_map(pieces).collect();
        set.sort();
        set.dedup();
        let mut symbols = vec![UNK.to_string()];
        symbols.extend(set.into_iter().filter(|s| s != UNK));
        Self::from_symbols(symbols).expect("deduplicated")
    }

    pub fn id(&self, piece: &str) -> usize {
        self.index.get(piece).copied().unwrap_or(UNK_ID)
    }

    pub fn symbol(&self, id: usize) -> Option<&str> {
        self.symbols.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.index.contains_key(piece)
    }

    pub fn listing(&self) -> String {
        self.symbols.iter().map(|s| format!("{s}\n")).collect()
    }

    pub fn parse_listing(text: &str) -> Result<Self> {
        Self::from_symbols(text.lines().map(str::to_string).collect())
    }
}

/// Tokenizes a word list; `vocab` assigns ids (all [`UNK_ID`] without one).
pub fn tokenize(words: &[String], vocab: Option<&Vocab>) -> Vec<Token> {
    let mut out = Vec::new();
    for (w, word) in words.iter().enumerate() {
        for surface in pieces(word) {
            out.push(Token {
                id: vocab.map_or(UNK_ID, |v| v.id(&surface)),
                surface,
                word_index: w,
            });
        }
    }
    out
}

pub fn detokenize(tokens: &[Token]) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for t in tokens {
        if t.word_index >= words.len() {
            words.resize(t.word_index + 1, String::new());
        }
        words[t.word_index].push_str(&t.surface);
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn examples() {
        let t = tokenize(&words(&["hi"]), None);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].word_index, 0);
        let t = tokenize(&words(&["hello", "world"]), None);
        let s: Vec<&str> = t.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(s, vec!["hell", "o", "worl", "d"]);
        assert_eq!(t.iter().map(|t| t.word_index).collect::<Vec<_>>(), vec![0, 0, 1, 1]);
        let t = tokenize(&words(&["a", "b", "c"]), None);
        assert_eq!(t.iter().map(|t| t.word_index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(pieces("table."), vec!["tabl", "e", "."]);
        assert_eq!(pieces("23?"), vec!["23", "?"]);
    }

    #[test]
    fn vocab_round_trip() {
        let v = Vocab::build(["hello", "world", "hello."]);
        assert_eq!(v.symbol(0), Some(UNK));
        assert_eq!(v.id("zzzz"), UNK_ID);
        assert_ne!(v.id("hell"), UNK_ID);
        assert_eq!(Vocab::parse_listing(&v.listing()).unwrap(), v);
        assert!(Vocab::parse_listing("a\n<unk>\n").is_err());
    }

    proptest! {
        #[test]
        fn detokenize_inverts_tokenize(ws in prop::collection::vec("[a-z0-9]{1,11}[.?!]?", 1..12)) {
            let toks = tokenize(&ws, None);
            prop_assert_eq!(detokenize(&toks), ws.clone());
            prop_assert!(toks.windows(2).all(|p| p[0].word_index <= p[1].word_index));
            prop_assert!(toks.iter().all(|t| t.surface.chars().count() <= MAX_PIECE));
        }
    }
}
