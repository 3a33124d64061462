//! Synthetic paragraph generator.
//!
//! The first sentence of every paragraph names its topic through topic nouns;
//! later sentences use topic-neutral vocabulary only, so topic-dependent
//! heteronyms there can be resolved from the preceding paragraph and from
//! nothing else. Every `HOLDOUT_PERIOD`-th paragraph is a holdout paragraph:
//! it is the only place held-out pseudo-words appear.

use std::collections::HashSet;

use rand::Rng as _;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::lexicon::{
    known_words, words_of_class, Topic, WordClass, CONTEXT_HETERONYMS, NATURE_WORDS, NEXT_WORD_HETERONYMS,
    PAST_MARKERS, TENSE_HETERONYM, WORKSHOP_WORDS,
};
use crate::rng::{derived, Rng};
use crate::{Error, Result};

/// Paragraph `k` is held out iff `k % HOLDOUT_PERIOD == HOLDOUT_PERIOD - 1`
/// (1 in 24, about the 130K-of-3.13M validation share).
pub const HOLDOUT_PERIOD: usize = 24;
pub const RARE_POOL: usize = 300;
pub const OOV_POOL: usize = 80;
const RARE_NOUN_RATE: f64 = 0.12;
const OOV_NOUN_RATE: f64 = 0.35;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub topic: Topic,
    pub holdout: bool,
    /// Sentences of word surfaces; the last word carries the terminal punctuation.
    pub sentences: Vec<Vec<String>>,
}

impl Paragraph {
    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.sentences.iter().flatten()
    }
}

pub fn is_holdout(index: usize) -> bool {
    index % HOLDOUT_PERIOD == HOLDOUT_PERIOD - 1
}

/// Pseudo-word pools: Zipf-distributed rare words used everywhere and
/// held-out words used only in holdout paragraphs.
#[derive(Clone, Debug)]
pub struct PseudoWords {
    pub rare: Vec<String>,
    pub oov: Vec<String>,
}

pub fn pseudo_words(seed: u64) -> PseudoWords {
    const ONSETS: &[&str] = &["p", "t", "d", "k", "f", "v", "s", "m", "n", "l", "r", "w"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    const CODAS: &[&str] = &["n", "s", "l", "m", "t"];
    let mut rng = derived(seed, "pseudo-words");
    let mut seen: HashSet<String> = known_words().into_iter().map(str::to_string).collect();
    let mut pool = Vec::new();
    while pool.len() < RARE_POOL + OOV_POOL {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        if rng.random_bool(0.4) {
            w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
        }
        if seen.insert(w.clone()) {
            pool.push(w);
        }
    }
    let oov = pool.split_off(RARE_POOL);
    PseudoWords { rare: pool, oov }
}

const SUBJECTS: &[&str] = &["we", "they", "you", "she", "he"];
const SUBJECT_NOUNS: &[&str] = &["man", "friend", "team", "family", "actor", "uncle", "artist"];
const AUX: &[&str] = &["will", "can", "could", "should", "may", "would", "did"];
const DETS: &[&str] = &["the", "a", "my", "our", "this", "that", "her", "some"];
const OBJ_PRONOUNS: &[&str] = &["them", "it", "us", "me", "him"];
const PREPS: &[&str] = &["at", "on", "in", "over", "after", "into", "around", "near", "to", "for", "with", "by", "from"];
const VOWEL_PREPS: &[&str] = &["at", "on", "in", "over", "after", "into", "around", "until"];
const VOWEL_ADVS: &[&str] = &["again", "early", "often", "outside", "inside", "always", "all"];
const CONS_PREPS: &[&str] = &["near", "to", "for", "with", "by", "from"];
const CONS_ADVS: &[&str] = &["down", "today", "tonight", "there", "soon", "now", "later"];
const NEUTRAL_ADVS: &[&str] = &["today", "soon", "now", "there", "again", "early", "later", "often"];
const PRESENT_MARKERS: &[&str] = &["today", "now", "often", "again", "tonight"];
const PAST_VERBS: &[&str] = &["saw", "found", "heard", "kept", "lost", "met", "sat"];
const PLURALS: &[&str] = &["cars", "days", "books", "dogs", "miles", "friends", "apples", "tickets", "notes"];
const WH: &[&str] = &["what", "where", "when", "who", "why", "how"];

struct Gen<'a> {
    rng: Rng,
    pools: &'a PseudoWords,
    zipf: Zipf<f64>,
    holdout: bool,
    nouns: Vec<&'static str>,
    verbs: Vec<&'static str>,
    t_verbs: Vec<&'static str>,
    adjs: Vec<&'static str>,
}

fn own(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|s| s.to_string()).collect()
}

impl<'a> Gen<'a> {
    fn new(rng: Rng, pools: &'a PseudoWords, holdout: bool) -> Self {
        let nouns: Vec<&str> = words_of_class(WordClass::Noun)
            .into_iter()
            .filter(|n| !PLURALS.contains(n) && !SUBJECT_NOUNS.contains(n))
            .collect();
        let verbs = words_of_class(WordClass::Verb);
        let t_verbs = verbs
            .iter()
            .copied()
            .filter(|v| v.ends_with('t') && !PAST_VERBS.contains(v))
            .collect();
        Self {
            rng,
            pools,
            zipf: Zipf::new(pools.rare.len() as f64, 1.1).expect("valid Zipf parameters"),
            holdout,
            nouns,
            verbs,
            t_verbs,
            adjs: words_of_class(WordClass::Adj),
        }
    }

    fn pick(&mut self, list: &[&str]) -> String {
        list[self.rng.random_range(0..list.len())].to_string()
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn noun(&mut self) -> String {
        if self.holdout && self.chance(OOV_NOUN_RATE) {
            let i = self.rng.random_range(0..self.pools.oov.len());
            return self.pools.oov[i].clone();
        }
        if self.chance(RARE_NOUN_RATE) {
            let rank = self.zipf.sample(&mut self.rng) as usize;
            return self.pools.rare[rank.clamp(1, self.pools.rare.len()) - 1].clone();
        }
        let nouns = self.nouns.clone();
        self.pick(&nouns)
    }

    fn np(&mut self) -> Vec<String> {
        let det = self.pick(DETS);
        let mut out = vec![det];
        if self.chance(0.2) {
            let adjs = self.adjs.clone();
            out.push(self.pick(&adjs));
        }
        out.push(self.noun());
        out
    }

    fn subject(&mut self) -> Vec<String> {
        if self.chance(0.7) {
            vec![self.pick(SUBJECTS)]
        } else {
            vec!["the".into(), self.pick(SUBJECT_NOUNS)]
        }
    }

    fn prep_phrase(&mut self, preps: &[&str]) -> Vec<String> {
        let mut out = vec![self.pick(preps)];
        out.extend(self.np());
        out
    }

    fn tail(&mut self) -> Vec<String> {
        match self.rng.random_range(0..4) {
            0 => Vec::new(),
            1 => vec![self.pick(NEUTRAL_ADVS)],
            _ => self.prep_phrase(PREPS),
        }
    }

    fn number(&mut self) -> String {
        let n: u32 = match self.rng.random_range(0..3) {
            0 => self.rng.random_range(2..20),
            1 => self.rng.random_range(20..100),
            _ => self.rng.random_range(100..1000),
        };
        n.to_string()
    }

    fn flap_sentence(&mut self) -> Vec<String> {
        let mut s = self.subject();
        if self.chance(0.5) {
            s.push(self.pick(AUX));
        }
        let tv = self.t_verbs.clone();
        s.push(self.pick(&tv));
        let vowel = self.chance(0.5);
        let phrase = self.chance(0.6);
        match (vowel, phrase) {
            (true, true) => s.extend(self.prep_phrase(VOWEL_PREPS)),
            (true, false) => s.push(self.pick(VOWEL_ADVS)),
            (false, true) => s.extend(self.prep_phrase(CONS_PREPS)),
            (false, false) => s.push(self.pick(CONS_ADVS)),
        }
        s
    }

    fn next_word_sentence(&mut self) -> Vec<String> {
        let mut s = self.subject();
        s.push(self.pick(AUX));
        let (word, _, _, triggers) = NEXT_WORD_HETERONYMS[self.rng.random_range(0..NEXT_WORD_HETERONYMS.len())];
        s.push(word.to_string());
        let alternative = self.chance(0.5);
        if triggers.contains(&WordClass::Noun) {
            if alternative {
                s.push(self.noun());
                if self.chance(0.5) {
                    s.push(self.pick(NEUTRAL_ADVS));
                }
            } else if self.chance(0.5) {
                s.extend(self.prep_phrase(PREPS));
            } else {
                s.push(self.pick(NEUTRAL_ADVS));
            }
        } else if alternative {
            if self.chance(0.6) {
                s.extend(self.np());
            } else {
                s.push(self.pick(OBJ_PRONOUNS));
            }
        } else if self.chance(0.5) {
            s.push(self.pick(NEUTRAL_ADVS));
        } else {
            s.extend(self.prep_phrase(PREPS));
        }
        s
    }

    fn context_sentence(&mut self) -> Vec<String> {
        let mut s = self.subject();
        s.push(self.pick(PAST_VERBS));
        s.push("the".into());
        s.push(CONTEXT_HETERONYMS[self.rng.random_range(0..CONTEXT_HETERONYMS.len())].0.to_string());
        s.extend(self.tail());
        s
    }

    fn tense_sentence(&mut self) -> Vec<String> {
        let mut s = self.subject();
        s.push(TENSE_HETERONYM.0.into());
        s.push("the".into());
        s.push(self.noun());
        if self.chance(0.5) {
            s.push(self.pick(PAST_MARKERS));
        } else {
            s.push(self.pick(PRESENT_MARKERS));
        }
        s
    }

    fn number_sentence(&mut self) -> Vec<String> {
        let mut s = self.subject();
        s.push(self.pick(PAST_VERBS));
        s.push(self.number());
        s.push(self.pick(PLURALS));
        s
    }

    fn simple_sentence(&mut self) -> Vec<String> {
        let mut s = self.subject();
        if self.chance(0.4) {
            s.push("was".into());
            let adjs = self.adjs.clone();
            s.push(self.pick(&adjs));
        } else {
            let verbs = self.verbs.clone();
            s.push(self.pick(&verbs));
            s.extend(self.np());
        }
        s.extend(self.tail());
        s
    }

    fn question(&mut self) -> Vec<String> {
        let mut s = Vec::new();
        if self.chance(0.5) {
            s.push(self.pick(WH));
        }
        s.push("did".into());
        s.extend(self.subject());
        let verbs = self.verbs.clone();
        s.push(self.pick(&verbs));
        s.extend(self.np());
        s
    }

    fn exclamation(&mut self) -> Vec<String> {
        let mut s = own(&["what", "a"]);
        let adjs = self.adjs.clone();
        s.push(self.pick(&adjs));
        s.push(self.noun());
        s
    }

    fn body_sentence(&mut self) -> (Vec<String>, char) {
        let r: f64 = self.rng.random();
        match r {
            r if r < 0.20 => (self.flap_sentence(), '.'),
            r if r < 0.40 => (self.next_word_sentence(), '.'),
            r if r < 0.58 => (self.context_sentence(), '.'),
            r if r < 0.70 => (self.tense_sentence(), '.'),
            r if r < 0.80 => (self.number_sentence(), '.'),
            r if r < 0.92 => (self.simple_sentence(), '.'),
            r if r < 0.97 => (self.question(), '?'),
            _ => (self.exclamation(), '!'),
        }
    }

    fn topic_sentence(&mut self, topic: Topic) -> Vec<String> {
        let pool = match topic {
            Topic::Nature => NATURE_WORDS,
            Topic::Workshop => WORKSHOP_WORDS,
        };
        let mut picks: Vec<String> = Vec::new();
        while picks.len() < 3 {
            let w = self.pick(pool);
            if !picks.contains(&w) {
                picks.push(w);
            }
        }
        match self.rng.random_range(0..3) {
            0 => own(&["the", &picks[0], "and", "the", &picks[1], "were", "near", "the", &picks[2]]),
            1 => {
                let mut s = self.subject();
                s.extend(own(&["saw", "the", &picks[0], "by", "the", &picks[1]]));
                s
            }
            _ => own(&["the", &picks[0], "was", "over", "the", &picks[1], "and", "the", &picks[2]]),
        }
    }
}

fn finish(mut words: Vec<String>, punct: char) -> Vec<String> {
    if let Some(last) = words.last_mut() {
        last.push(punct);
    }
    words
}

/// Generates `n` paragraphs; a pure function of `(seed, n)`.
pub fn gen_corpus(seed: u64, n: usize) -> Result<Vec<Paragraph>> {
    if n == 0 {
        return Err(Error::Invalid("n_paragraphs must be >= 1".into()));
    }
    let pools = pseudo_words(seed);
    Ok((0..n).map(|k| gen_paragraph(seed, k, &pools)).collect())
}

/// One JSON paragraph per line.
pub fn write_corpus(path: &std::path::Path, corpus: &[Paragraph]) -> Result<()> {
    let mut text = String::new();
    for p in corpus {
        text.push_str(&serde_json::to_string(p).map_err(|e| Error::format("corpus", e.to_string()))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_corpus(path: &std::path::Path) -> Result<Vec<Paragraph>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::format("corpus", format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn gen_paragraph(seed: u64, index: usize, pools: &PseudoWords) -> Paragraph {
    let holdout = is_holdout(index);
    let mut g = Gen::new(derived(seed, &format!("paragraph-{index}")), pools, holdout);
    let topic = if g.chance(0.5) { Topic::Nature } else { Topic::Workshop };
    let count = if g.chance(0.03) { 1 } else { g.rng.random_range(2..=6) };
    let mut sentences = vec![finish(g.topic_sentence(topic), '.')];
    for _ in 1..count {
        let (s, p) = g.body_sentence();
        sentences.push(finish(s, p));
    }
    Paragraph {
        index,
        topic,
        holdout,
        sentences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textdata::lexicon::{is_heteronym, topic_of_word};
    use crate::textdata::tokenize::split_punct;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = gen_corpus(1, 10).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&gen_corpus(1, 10).unwrap()).unwrap());
        assert_ne!(a, gen_corpus(2, 10).unwrap());
        assert!(gen_corpus(1, 0).is_err());
    }

    #[test]
    fn heteronym_sites_are_common() {
        let corpus = gen_corpus(1, 1000).unwrap();
        let (mut sites, mut total) = (0usize, 0usize);
        for w in corpus.iter().flat_map(|p| p.words()) {
            total += 1;
            sites += usize::from(is_heteronym(split_punct(w).0));
        }
        assert!(sites as f64 >= 0.05 * total as f64, "{sites}/{total}");
    }

    #[test]
    fn topic_words_only_open_paragraphs() {
        for p in gen_corpus(3, 300).unwrap() {
            for s in &p.sentences[1..] {
                assert!(s.iter().all(|w| topic_of_word(split_punct(w).0).is_none()), "{s:?}");
            }
            assert!(p.sentences[0].iter().any(|w| topic_of_word(split_punct(w).0) == Some(p.topic)));
        }
    }

    #[test]
    fn held_out_words_stay_in_holdout_paragraphs() {
        let pools = pseudo_words(5);
        let oov: HashSet<&str> = pools.oov.iter().map(String::as_str).collect();
        let corpus = gen_corpus(5, 480).unwrap();
        let mut seen_in_holdout = 0;
        for p in &corpus {
            for w in p.words() {
                if oov.contains(split_punct(w).0) {
                    assert!(p.holdout);
                    seen_in_holdout += 1;
                }
            }
        }
        assert!(seen_in_holdout > 0);
        assert!(pools.rare.iter().all(|r| !oov.contains(r.as_str())));
    }
}
