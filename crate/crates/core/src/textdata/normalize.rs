//! Numeral expansion. Expanded parts are joined by inner separators in the
//! labels; all parts keep the index of the original word.

use super::phones::parse_phones;

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

const NUMBER_PHONES: &[(&str, &str)] = &[
    ("zero", "S IY R OW"),
    ("one", "W AH N"),
    ("two", "T UW"),
    ("three", "T R IY"),
    ("four", "F OW R"),
    ("five", "F AY V"),
    ("six", "S IH K S"),
    ("seven", "S EH V AH N"),
    ("eight", "EY T"),
    ("nine", "N AY N"),
    ("ten", "T EH N"),
    ("eleven", "IH L EH V AH N"),
    ("twelve", "T W EH L V"),
    ("thirteen", "T ER T IY N"),
    ("fourteen", "F OW R T IY N"),
    ("fifteen", "F IH F T IY N"),
    ("sixteen", "S IH K S T IY N"),
    ("seventeen", "S EH V AH N T IY N"),
    ("eighteen", "EY T IY N"),
    ("nineteen", "N AY N T IY N"),
    ("twenty", "T W EH N T IY"),
    ("thirty", "T ER DX IY"),
    ("forty", "F OW R DX IY"),
    ("fifty", "F IH F T IY"),
    ("sixty", "S IH K S T IY"),
    ("seventy", "S EH V AH N T IY"),
    ("eighty", "EY DX IY"),
    ("ninety", "N AY N T IY"),
    ("hundred", "AH N D R AH D"),
];

pub const MAX_SPELLED: u32 = 999;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub parts: Vec<String>,
    /// Part indices `i` such that an inner separator follows part `i`.
    pub inner_separators: Vec<usize>,
    /// Set when a numeral-looking word could not be expanded.
    pub diagnostic: Option<String>,
}

impl Normalized {
    pub fn is_expansion(&self) -> bool {
        !self.inner_separators.is_empty() || self.parts.len() > 1
    }
}

fn spell(n: u32) -> Vec<&'static str> {
    let mut parts = Vec::new();
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        parts.push(ONES[hundreds as usize]);
        parts.push("hundred");
        if rest == 0 {
            return parts;
        }
    }
    if rest < 20 {
        if rest > 0 || parts.is_empty() {
            parts.push(ONES[rest as usize]);
        }
    } else {
        parts.push(TENS[(rest / 10) as usize]);
        if rest % 10 > 0 {
            parts.push(ONES[(rest % 10) as usize]);
        }
    }
    parts
}

/// Expands a word surface (without trailing punctuation).
pub fn normalize(word: &str) -> Normalized {
    let passthrough = |diag: Option<String>| Normalized {
        parts: vec![word.to_string()],
        inner_separators: Vec::new(),
        diagnostic: diag,
    };
    if !word.chars().any(|c| c.is_ascii_digit()) {
        return passthrough(None);
    }
    if !word.chars().all(|c| c.is_ascii_digit()) {
        return passthrough(Some(format!("mixed numeral {word:?}")));
    }
    match word.parse::<u32>() {
        Ok(n) if n <= MAX_SPELLED => {
            let parts: Vec<String> = spell(n).into_iter().map(str::to_string).collect();
            let inner_separators = (0..parts.len() - 1).collect();
            Normalized {
                parts,
                inner_separators,
                diagnostic: None,
            }
        }
        _ => passthrough(Some(format!("numeral {word:?} outside 0..={MAX_SPELLED}"))),
    }
}

pub fn number_word_phones(part: &str) -> Option<Vec<usize>> {
    NUMBER_PHONES.iter().find(|(w, _)| *w == part).map(|(_, p)| parse_phones(p))
}
