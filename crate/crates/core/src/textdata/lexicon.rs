//! Pronunciation lexicon, word classes, heteronym tables and the
//! letter-to-phone fallback for words outside the lexicon.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::phones::{parse_phones, phone_id};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordClass {
    Det,
    Pron,
    Noun,
    Verb,
    Adj,
    Adv,
    Prep,
    Conj,
    Aux,
    Wh,
    Number,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    Nature,
    Workshop,
}

impl Topic {
    pub fn name(self) -> &'static str {
        match self {
            Topic::Nature => "nature",
            Topic::Workshop => "workshop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nature" => Some(Topic::Nature),
            "workshop" => Some(Topic::Workshop),
            _ => None,
        }
    }
}

use WordClass::*;

/// `(word, phones, class)`
const ENTRIES: &[(&str, &str, WordClass)] = &[
    ("the", "D AH", Det),
    ("a", "AH", Det),
    ("an", "AE N", Det),
    ("this", "D IH S", Det),
    ("that", "D AE T", Det),
    ("my", "M AY", Det),
    ("our", "AA R", Det),
    ("some", "S AH M", Det),
    ("every", "EH V R IY", Det),
    ("her", "ER", Det),
    ("its", "IH T S", Det),
    ("it", "IH T", Pron),
    ("we", "W IY", Pron),
    ("they", "D EY", Pron),
    ("you", "IY UW", Pron),
    ("she", "S IY", Pron),
    ("he", "IY", Pron),
    ("them", "D EH M", Pron),
    ("us", "AH S", Pron),
    ("me", "M IY", Pron),
    ("him", "IH M", Pron),
    ("will", "W IH L", Aux),
    ("can", "K AE N", Aux),
    ("did", "D IH D", Aux),
    ("would", "W UW D", Aux),
    ("must", "M AH S T", Aux),
    ("could", "K UW D", Aux),
    ("may", "M EY", Aux),
    ("should", "S UW D", Aux),
    ("and", "AE N D", Conj),
    ("but", "P AH T", Conj),
    ("or", "OW R", Conj),
    ("then", "D EH N", Conj),
    ("so", "S OW", Conj),
    ("at", "AE T", Prep),
    ("on", "AA N", Prep),
    ("in", "IH N", Prep),
    ("over", "OW V ER", Prep),
    ("near", "N IY R", Prep),
    ("to", "T UW", Prep),
    ("for", "F OW R", Prep),
    ("with", "W IH D", Prep),
    ("by", "P AY", Prep),
    ("from", "F R AH M", Prep),
    ("into", "IH N T UW", Prep),
    ("under", "AH N D ER", Prep),
    ("after", "AE F T ER", Prep),
    ("until", "AH N T IH L", Prep),
    ("around", "AH R AA N D", Prep),
    ("down", "D AA N", Adv),
    ("today", "T AH D EY", Adv),
    ("tonight", "T AH N AY T", Adv),
    ("there", "D EH R", Adv),
    ("soon", "S UW N", Adv),
    ("now", "N AA", Adv),
    ("again", "AH K EH N", Adv),
    ("early", "ER L IY", Adv),
    ("often", "AA F AH N", Adv),
    ("outside", "AA T S AY D", Adv),
    ("inside", "IH N S AY D", Adv),
    ("always", "AA L W EY S", Adv),
    ("later", "L EY T ER", Adv),
    ("all", "AA L", Adv),
    ("yesterday", "IY EH S T ER D EY", Adv),
    ("earlier", "ER L IY ER", Adv),
    ("already", "AA L R EH D IY", Adv),
    ("man", "M AE N", Noun),
    ("friend", "F R EH N D", Noun),
    ("list", "L IH S T", Noun),
    ("note", "N OW T", Noun),
    ("song", "S AA N", Noun),
    ("road", "R OW D", Noun),
    ("room", "R UW M", Noun),
    ("letter", "L EH T ER", Noun),
    ("paper", "P EY P ER", Noun),
    ("table", "T EY P AH L", Noun),
    ("car", "K AA R", Noun),
    ("town", "T AA N", Noun),
    ("dinner", "D IH N ER", Noun),
    ("story", "S T AA R IY", Noun),
    ("picture", "P IH K T ER", Noun),
    ("idea", "AY D IY AH", Noun),
    ("apple", "AE P AH L", Noun),
    ("answer", "AE N S ER", Noun),
    ("office", "AA F AH S", Noun),
    ("evening", "IY V N IH N", Noun),
    ("window", "W IH N D OW", Noun),
    ("door", "D OW R", Noun),
    ("house", "AA S", Noun),
    ("book", "P UW K", Noun),
    ("map", "M AE P", Noun),
    ("plan", "P L AE N", Noun),
    ("team", "T IY M", Noun),
    ("city", "S IH DX IY", Noun),
    ("market", "M AA R K AH T", Noun),
    ("ticket", "T IH K AH T", Noun),
    ("basket", "P AE S K AH T", Noun),
    ("music", "M UW S IH K", Noun),
    ("dog", "D AA K", Noun),
    ("cat", "K AE T", Noun),
    ("coat", "K OW T", Noun),
    ("boat", "P OW T", Noun),
    ("seat", "S IY T", Noun),
    ("street", "S T R IY T", Noun),
    ("sales", "S EY L S", Noun),
    ("store", "S T OW R", Noun),
    ("shop", "S AA P", Noun),
    ("people", "P IY P AH L", Noun),
    ("water", "W AA DX ER", Noun),
    ("money", "M AH N IY", Noun),
    ("work", "W ER K", Noun),
    ("word", "W ER D", Noun),
    ("name", "N EY M", Noun),
    ("family", "F AE M L IY", Noun),
    ("morning", "M OW R N IH N", Noun),
    ("night", "N AY T", Noun),
    ("oven", "AH V AH N", Noun),
    ("engine", "EH N D IH N", Noun),
    ("actor", "AE K T ER", Noun),
    ("uncle", "AH N K AH L", Noun),
    ("artist", "AA R DX IH S T", Noun),
    ("cars", "K AA R S", Noun),
    ("days", "D EY S", Noun),
    ("books", "P UW K S", Noun),
    ("dogs", "D AA K S", Noun),
    ("miles", "M AY L S", Noun),
    ("friends", "F R EH N D S", Noun),
    ("apples", "AE P AH L S", Noun),
    ("tickets", "T IH K AH T S", Noun),
    ("notes", "N OW T S", Noun),
    ("old", "OW L D", Adj),
    ("new", "N UW", Adj),
    ("small", "S M AA L", Adj),
    ("great", "K R EY T", Adj),
    ("late", "L EY T", Adj),
    ("red", "R EH D", Adj),
    ("long", "L AA N", Adj),
    ("quiet", "K W AY AH T", Adj),
    ("nice", "N AY S", Adj),
    ("warm", "W AA R M", Adj),
    ("open", "OW P AH N", Adj),
    ("empty", "EH M P T IY", Adj),
    ("easy", "IY S IY", Adj),
    ("dark", "D AA R K", Adj),
    ("strong", "S T R AA N", Adj),
    ("full", "F UW L", Adj),
    ("fast", "F AE S T", Adj),
    ("sit", "S IH T", Verb),
    ("get", "K EH T", Verb),
    ("put", "P UW T", Verb),
    ("let", "L EH T", Verb),
    ("meet", "M IY T", Verb),
    ("visit", "V IH S IH T", Verb),
    ("wait", "W EY T", Verb),
    ("eat", "IY T", Verb),
    ("cut", "K AH T", Verb),
    ("write", "R AY T", Verb),
    ("start", "S T AA R T", Verb),
    ("forget", "F ER K EH T", Verb),
    ("paint", "P EY N T", Verb),
    ("repeat", "R IH P IY T", Verb),
    ("met", "M EH T", Verb),
    ("sat", "S AE T", Verb),
    ("see", "S IY", Verb),
    ("take", "T EY K", Verb),
    ("make", "M EY K", Verb),
    ("find", "F AY N D", Verb),
    ("keep", "K IY P", Verb),
    ("call", "K AA L", Verb),
    ("move", "M UW V", Verb),
    ("saw", "S AA", Verb),
    ("heard", "ER D", Verb),
    ("like", "L AY K", Verb),
    ("need", "N IY D", Verb),
    ("want", "W AA N T", Verb),
    ("fix", "F IH K S", Verb),
    ("leave", "L IY V", Verb),
    ("walk", "W AA K", Verb),
    ("stay", "S T EY", Verb),
    ("was", "W AA S", Verb),
    ("were", "W ER", Verb),
    ("is", "IH S", Verb),
    ("are", "AA R", Verb),
    ("have", "AE V", Verb),
    ("sell", "S EH L", Verb),
    ("love", "L AH V", Verb),
    ("show", "S OW", Verb),
    ("found", "F AA N D", Verb),
    ("lost", "L AA S T", Verb),
    ("kept", "K EH P T", Verb),
    ("what", "W AA T", Wh),
    ("where", "W EH R", Wh),
    ("when", "W EH N", Wh),
    ("who", "UW", Wh),
    ("why", "W AY", Wh),
    ("how", "AA", Wh),
    ("river", "R IH V ER", Noun),
    ("forest", "F OW R AH S T", Noun),
    ("storm", "S T OW R M", Noun),
    ("rain", "R EY N", Noun),
    ("hill", "IH L", Noun),
    ("leaves", "L IY V S", Noun),
    ("lake", "L EY K", Noun),
    ("trees", "T R IY S", Noun),
    ("sea", "S IY", Noun),
    ("field", "F IY L D", Noun),
    ("flowers", "F L AA ER S", Noun),
    ("birds", "P ER D S", Noun),
    ("valley", "V AE L IY", Noun),
    ("clouds", "K L AA D S", Noun),
    ("tools", "T UW L S", Noun),
    ("metal", "M EH DX AH L", Noun),
    ("bench", "P EH N T S", Noun),
    ("drill", "D R IH L", Noun),
    ("wire", "W AY ER", Noun),
    ("nails", "N EY L S", Noun),
    ("screws", "S K R UW S", Noun),
    ("pipe", "P AY P", Noun),
    ("motor", "M OW DX ER", Noun),
    ("hammer", "AE M ER", Noun),
    ("steel", "S T IY L", Noun),
    ("lathe", "L EY D", Noun),
    ("saws", "S AA S", Noun),
    ("glue", "K L UW", Noun),
];

pub const NATURE_WORDS: &[&str] = &[
    "river", "forest", "storm", "rain", "hill", "leaves", "lake", "trees", "sea", "field", "flowers", "birds",
    "valley", "clouds",
];
pub const WORKSHOP_WORDS: &[&str] = &[
    "tools", "metal", "bench", "drill", "wire", "nails", "screws", "pipe", "motor", "hammer", "steel", "lathe",
    "saws", "glue",
];

/// Heteronyms resolved by the class of the following word:
/// `(word, default, alternative, classes selecting the alternative)`.
pub const NEXT_WORD_HETERONYMS: &[(&str, &str, &str, &[WordClass])] = &[
    ("record", "R EH K ER D", "R IH K AA R D", &[Det, Pron]),
    ("present", "P R EH S AH N T", "P R IY S EH N T", &[Det, Pron]),
    ("desert", "D EH S ER T", "D IH S ER T", &[Det, Pron]),
    ("conduct", "K AA N D AH K T", "K AH N D AH K T", &[Det, Pron]),
    ("object", "AA P D IH K T", "AH P D EH K T", &[Det, Pron]),
    ("live", "L IH V", "L AY V", &[Noun]),
];

/// Heteronyms resolved by paragraph topic: `(word, nature, workshop)`.
pub const CONTEXT_HETERONYMS: &[(&str, &str, &str)] = &[
    ("wind", "W IH N D", "W AY N D"),
    ("tear", "T IH R", "T EY R"),
    ("lead", "L IY D", "L EH D"),
    ("minute", "M AY N UW T", "M IH N IH T"),
];

/// Heteronym resolved by a past-time marker later in the same sentence.
pub const TENSE_HETERONYM: (&str, &str, &str) = ("read", "R IY D", "R EH D");
pub const PAST_MARKERS: &[&str] = &["yesterday", "earlier", "already"];

struct Tables {
    entries: HashMap<&'static str, (Vec<usize>, WordClass)>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| Tables {
        entries: ENTRIES.iter().map(|&(w, p, c)| (w, (parse_phones(p), c))).collect(),
    })
}

/// Plain lexicon lookup (heteronyms excluded).
pub fn lookup(word: &str) -> Option<&'static [usize]> {
    tables().entries.get(word).map(|(p, _)| p.as_slice())
}

pub fn class_of(word: &str) -> Option<WordClass> {
    if let Some((_, c)) = tables().entries.get(word) {
        return Some(*c);
    }
    if word.chars().all(|c| c.is_ascii_digit()) && !word.is_empty() {
        return Some(Number);
    }
    if NEXT_WORD_HETERONYMS.iter().any(|h| h.0 == word) || word == TENSE_HETERONYM.0 {
        return Some(Verb);
    }
    if CONTEXT_HETERONYMS.iter().any(|h| h.0 == word) {
        return Some(Noun);
    }
    None
}

pub fn is_heteronym(word: &str) -> bool {
    NEXT_WORD_HETERONYMS.iter().any(|h| h.0 == word)
        || CONTEXT_HETERONYMS.iter().any(|h| h.0 == word)
        || word == TENSE_HETERONYM.0
}

/// Every spelling the lexicon knows, heteronyms included.
pub fn known_words() -> Vec<&'static str> {
    let mut w: Vec<&str> = ENTRIES.iter().map(|e| e.0).collect();
    w.extend(NEXT_WORD_HETERONYMS.iter().map(|h| h.0));
    w.extend(CONTEXT_HETERONYMS.iter().map(|h| h.0));
    w.push(TENSE_HETERONYM.0);
    w
}

pub fn words_of_class(class: WordClass) -> Vec<&'static str> {
    ENTRIES
        .iter()
        .filter(|e| e.2 == class && !NATURE_WORDS.contains(&e.0) && !WORKSHOP_WORDS.contains(&e.0))
        .map(|e| e.0)
        .collect()
}

pub fn topic_of_word(word: &str) -> Option<Topic> {
    if NATURE_WORDS.contains(&word) {
        Some(Topic::Nature)
    } else if WORKSHOP_WORDS.contains(&word) {
        Some(Topic::Workshop)
    } else {
        None
    }
}

const DIGRAPHS: &[(&str, &str)] = &[
    ("ee", "IY"),
    ("ea", "IY"),
    ("oo", "UW"),
    ("ay", "EY"),
    ("ai", "EY"),
    ("ow", "OW"),
    ("oa", "OW"),
    ("er", "ER"),
    ("ck", "K"),
    ("th", "D"),
    ("sh", "S"),
    ("ch", "T S"),
    ("ph", "F"),
    ("ng", "N"),
];

fn letter(c: char) -> &'static str {
    match c {
        'a' => "AE",
        'e' => "EH",
        'i' => "IH",
        'o' => "AA",
        'u' => "AH",
        'y' => "IY",
        'b' | 'p' => "P",
        'c' | 'g' | 'k' | 'q' => "K",
        'd' | 'j' => "D",
        'f' => "F",
        'v' => "V",
        's' | 'z' => "S",
        'x' => "K S",
        'm' => "M",
        'n' => "N",
        'l' => "L",
        'r' => "R",
        'w' => "W",
        't' => "T",
        '0' => "S IY R OW",
        '1' => "W AH N",
        '2' => "T UW",
        '3' => "T R IY",
        '4' => "F OW R",
        '5' => "F AY V",
        '6' => "S IH K S",
        '7' => "S EH V AH N",
        '8' => "EY T",
        '9' => "N AY N",
        _ => "",
    }
}

/// Letter-to-phone rules: greedy digraphs, then single letters; `h` and other
/// symbols are silent. Never empty for a word with at least one letter or digit.
pub fn letter_to_phone(word: &str) -> Vec<usize> {
    let chars: Vec<char> = word.to_ascii_lowercase().chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if i + 1 < chars.len() {
            let pair: String = chars[i..i + 2].iter().collect();
            if let Some((_, p)) = DIGRAPHS.iter().find(|(d, _)| *d == pair) {
                out.extend(p.split_whitespace().filter_map(phone_id));
                i += 2;
                continue;
            }
        }
        out.extend(letter(chars[i]).split_whitespace().filter_map(phone_id));
        i += 1;
    }
    if out.is_empty() {
        out.push(phone_id("AH").expect("AH in inventory"));
    }
    out
}
