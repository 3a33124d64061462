//! Phone inventory, PnP symbols, prosody layout and phrase types.

use serde::{Deserialize, Serialize};

/// 24 phones. The first [`NUM_VOWELS`] are vowels.
pub const PHONES: [&str; 24] = [
    "AA", "AE", "AH", "EH", "ER", "EY", "IH", "IY", "OW", "UW", "AY", // vowels
    "P", "T", "D", "K", "DX", "F", "V", "S", "M", "N", "L", "R", "W",
];
pub const NUM_VOWELS: usize = 11;
pub const NUM_PHONES: usize = PHONES.len();

pub const SEP_REGULAR: usize = NUM_PHONES;
pub const SEP_INNER: usize = NUM_PHONES + 1;
pub const EOS: usize = NUM_PHONES + 2;
/// Output classes of the phone head: phones plus the three special symbols.
pub const NUM_PNP_SYMBOLS: usize = NUM_PHONES + 3;
/// Decoder-input-only begin symbol.
pub const BOS: usize = NUM_PNP_SYMBOLS;

pub const PROSODY_DIM: usize = 9;
pub const NUM_PHRASE_TYPES: usize = 4;

pub fn phone_id(symbol: &str) -> Option<usize> {
    PHONES.iter().position(|&p| p == symbol)
}

/// Parses a space-separated phone string.
pub fn parse_phones(s: &str) -> Vec<usize> {
    s.split_whitespace()
        .map(|p| phone_id(p).unwrap_or_else(|| panic!("unknown phone {p}")))
        .collect()
}

pub fn is_vowel(id: usize) -> bool {
    id < NUM_VOWELS
}

pub fn is_terminator(id: usize) -> bool {
    id == SEP_REGULAR || id == EOS
}

pub fn symbol_name(id: usize) -> &'static str {
    match id {
        i if i < NUM_PHONES => PHONES[i],
        SEP_REGULAR => "sep_regular",
        SEP_INNER => "sep_inner",
        EOS => "eos",
        BOS => "bos",
        _ => "?",
    }
}

pub fn symbol_id(name: &str) -> Option<usize> {
    match name {
        "sep_regular" => Some(SEP_REGULAR),
        "sep_inner" => Some(SEP_INNER),
        "eos" => Some(EOS),
        other => phone_id(other),
    }
}

/// Sidecar listing: one symbol per line, line number = id.
pub fn inventory_listing() -> String {
    (0..NUM_PNP_SYMBOLS).map(|i| format!("{}\n", symbol_name(i))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PnpKind {
    Phone(usize),
    SepRegular,
    SepInner,
    Eos,
}

impl PnpKind {
    pub fn of(symbol: usize) -> Option<Self> {
        match symbol {
            s if s < NUM_PHONES => Some(PnpKind::Phone(s)),
            SEP_REGULAR => Some(PnpKind::SepRegular),
            SEP_INNER => Some(PnpKind::SepInner),
            EOS => Some(PnpKind::Eos),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhraseType {
    Declarative,
    YesnoQuestion,
    WhQuestion,
    Exclamation,
}

impl PhraseType {
    pub const ALL: [PhraseType; NUM_PHRASE_TYPES] = [
        PhraseType::Declarative,
        PhraseType::YesnoQuestion,
        PhraseType::WhQuestion,
        PhraseType::Exclamation,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }
}

/// Prosody layout: `[hierarchy * 3 + feature]` with hierarchies
/// sentence, word, phone and features duration, pitch, max log-energy.
pub mod prosody_index {
    pub const SENTENCE: usize = 0;
    pub const WORD: usize = 3;
    pub const PHONE: usize = 6;
    pub const DURATION: usize = 0;
    pub const PITCH: usize = 1;
    pub const ENERGY: usize = 2;
}

pub type ProsodyVector = [f32; PROSODY_DIM];

/// Frame count carried by a predicted phone: the phone-level duration
/// rounded to a non-negative integer, at least 1.
pub fn duration_frames(prosody: &ProsodyVector) -> usize {
    let d = prosody[prosody_index::PHONE + prosody_index::DURATION];
    if d.is_finite() {
        (d.round().max(1.0)).min(1e6) as usize
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnpToken {
    /// Index into [`PHONES`] or one of the special symbols.
    pub symbol: usize,
    pub prosody: ProsodyVector,
    /// Frame count: >= 1 for phones, 0 for separators and eos.
    pub frames: usize,
    pub phrase: PhraseType,
    pub word_index: usize,
}

impl PnpToken {
    pub fn kind(&self) -> PnpKind {
        PnpKind::of(self.symbol).expect("PnP symbol out of range")
    }

    pub fn is_phone(&self) -> bool {
        self.symbol < NUM_PHONES
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_shape() {
        assert_eq!(NUM_PHONES, 24);
        assert_eq!(NUM_PNP_SYMBOLS, 27);
        assert!(phone_id("DX").is_some());
        assert_eq!((0..NUM_PHONES).filter(|&p| is_vowel(p)).count(), NUM_VOWELS);
        let listing = inventory_listing();
        assert_eq!(listing.lines().count(), NUM_PNP_SYMBOLS);
        for (i, line) in listing.lines().enumerate() {
            assert_eq!(symbol_id(line), Some(i));
        }
    }
}
