//! The full-lookahead teacher: rule-based G2P with post-lexical rules and
//! deterministic prosody targets. It sees the whole paragraph, so its output
//! for a word may depend on any later word.

use serde::{Deserialize, Serialize};

use super::lexicon::{
    class_of, letter_to_phone, lookup, topic_of_word, Topic, CONTEXT_HETERONYMS, NEXT_WORD_HETERONYMS,
    PAST_MARKERS, TENSE_HETERONYM,
};
use super::normalize::{normalize, number_word_phones};
use super::phones::{
    is_vowel, parse_phones, phone_id, prosody_index as px, PhraseType, PnpToken, ProsodyVector, EOS, PROSODY_DIM,
    SEP_INNER, SEP_REGULAR,
};
use super::tokenize::split_punct;

/// Per-word evaluation subset membership.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTags {
    /// Word-final T with a following word in the same sentence.
    pub flap_site: bool,
    pub next_word_heteronym: bool,
    pub context_heteronym: bool,
    pub tense_heteronym: bool,
    /// Expanded by numeral normalization.
    pub normalized: bool,
    /// Pronounced by the letter-to-phone fallback.
    pub fallback: bool,
}

impl WordTags {
    /// Words whose pronunciation depends on the next word.
    pub fn lookahead_site(&self) -> bool {
        self.flap_site || self.next_word_heteronym
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordPronunciation {
    /// One phone list per normalized part; parts are joined by inner separators.
    pub parts: Vec<Vec<usize>>,
    pub tags: WordTags,
}

impl WordPronunciation {
    /// Phones and inner separators, without the terminating separator.
    pub fn symbols(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                out.push(SEP_INNER);
            }
            out.extend(p);
        }
        out
    }
}

const WH_WORDS: &[&str] = &["what", "where", "when", "who", "why", "how"];

fn core(word: &str) -> &str {
    split_punct(word).0
}

/// Majority topic over topic nouns; nature on a tie or absence.
pub fn infer_topic<'a>(words: impl IntoIterator<Item = &'a String>) -> Topic {
    let (mut nature, mut workshop) = (0usize, 0usize);
    for w in words {
        match topic_of_word(core(w)) {
            Some(Topic::Nature) => nature += 1,
            Some(Topic::Workshop) => workshop += 1,
            None => {}
        }
    }
    if workshop > nature {
        Topic::Workshop
    } else {
        Topic::Nature
    }
}

pub fn phrase_type(sentence: &[String]) -> PhraseType {
    let last = sentence.last().map(String::as_str).unwrap_or("");
    let punct = split_punct(last).1;
    if punct.contains('?') {
        let first = sentence.first().map(|w| core(w)).unwrap_or("");
        if WH_WORDS.contains(&first) {
            PhraseType::WhQuestion
        } else {
            PhraseType::YesnoQuestion
        }
    } else if punct.contains('!') {
        PhraseType::Exclamation
    } else {
        PhraseType::Declarative
    }
}

fn base_pronunciation(sentence: &[String], i: usize, topic: Topic) -> WordPronunciation {
    let w = core(&sentence[i]);
    let mut tags = WordTags::default();
    let norm = normalize(w);
    if norm.diagnostic.is_none() && w.chars().all(|c| c.is_ascii_digit()) && !w.is_empty() {
        tags.normalized = true;
        let parts = norm
            .parts
            .iter()
            .map(|p| number_word_phones(p).expect("spelled numbers have phones"))
            .collect();
        return WordPronunciation { parts, tags };
    }
    let phones = if let Some(&(_, default, alt, triggers)) = NEXT_WORD_HETERONYMS.iter().find(|h| h.0 == w) {
        tags.next_word_heteronym = true;
        let next_class = sentence.get(i + 1).and_then(|n| class_of(core(n)).or(Some(super::lexicon::WordClass::Noun)));
        if next_class.is_some_and(|c| triggers.contains(&c)) {
            parse_phones(alt)
        } else {
            parse_phones(default)
        }
    } else if let Some(&(_, nature, workshop)) = CONTEXT_HETERONYMS.iter().find(|h| h.0 == w) {
        tags.context_heteronym = true;
        parse_phones(match topic {
            Topic::Nature => nature,
            Topic::Workshop => workshop,
        })
    } else if w == TENSE_HETERONYM.0 {
        tags.tense_heteronym = true;
        let past = sentence[i + 1..].iter().any(|n| PAST_MARKERS.contains(&core(n)));
        parse_phones(if past { TENSE_HETERONYM.2 } else { TENSE_HETERONYM.1 })
    } else if let Some(p) = lookup(w) {
        p.to_vec()
    } else {
        tags.fallback = true;
        letter_to_phone(w)
    };
    WordPronunciation {
        parts: vec![phones],
        tags,
    }
}

/// Teacher pronunciations for every word of `t2pred` (sentences in order),
/// given the preceding context paragraph.
pub fn teacher_g2p(t2pred: &[Vec<String>], context: &[String]) -> Vec<WordPronunciation> {
    let topic = infer_topic(context.iter().chain(t2pred.iter().flatten()));
    let t = phone_id("T").expect("T");
    let dx = phone_id("DX").expect("DX");
    let mut out = Vec::new();
    for sentence in t2pred {
        let mut prons: Vec<WordPronunciation> =
            (0..sentence.len()).map(|i| base_pronunciation(sentence, i, topic)).collect();
        for i in 0..prons.len().saturating_sub(1) {
            let ends_t = prons[i].parts.last().and_then(|p| p.last()) == Some(&t);
            if !ends_t {
                continue;
            }
            prons[i].tags.flap_site = true;
            let next_vowel = prons[i + 1].parts[0].first().is_some_and(|&p| is_vowel(p));
            if next_vowel {
                *prons[i].parts.last_mut().and_then(|p| p.last_mut()).expect("non-empty") = dx;
            }
        }
        out.extend(prons);
    }
    out
}

fn base_pitch(phrase: PhraseType) -> f32 {
    match phrase {
        PhraseType::Declarative => 100.0,
        PhraseType::YesnoQuestion => 120.0,
        PhraseType::WhQuestion => 110.0,
        PhraseType::Exclamation => 130.0,
    }
}

/// Frames per phone: 8 for vowels, 4 for consonants, times 1.5 on the
/// sentence-final word.
pub fn phone_frames(phone: usize, sentence_final: bool) -> usize {
    let base = if is_vowel(phone) { 8 } else { 4 };
    if sentence_final {
        base * 3 / 2
    } else {
        base
    }
}

fn log_energy(phone: usize, frames: usize) -> f32 {
    (1.0 + frames as f32).ln() + if is_vowel(phone) { 0.5 } else { 0.0 }
}

/// Prosody and phrase type for one sentence's pronunciations. Returns one
/// `(symbol, prosody, frames)` triple per PnP token of the sentence, without
/// word terminators, grouped per word.
pub fn teacher_prosody(
    prons: &[WordPronunciation],
    sentence: &[String],
) -> (Vec<Vec<(usize, ProsodyVector, usize)>>, PhraseType) {
    let phrase = phrase_type(sentence);
    let pitch = base_pitch(phrase);
    let n = prons.len();
    let frames: Vec<Vec<usize>> = prons
        .iter()
        .enumerate()
        .map(|(i, p)| p.symbols().iter().map(|&s| if s == SEP_INNER { 0 } else { phone_frames(s, i + 1 == n) }).collect())
        .collect();
    let phone_count: usize = prons.iter().map(|p| p.parts.iter().map(Vec::len).sum::<usize>()).sum();
    let total_frames: usize = frames.iter().flatten().sum();
    let s_dur = total_frames as f32 / phone_count.max(1) as f32;
    let mut s_energy = 0.0f32;
    for (p, f) in prons.iter().zip(&frames) {
        for (&s, &fr) in p.symbols().iter().zip(f) {
            if s != SEP_INNER {
                s_energy = s_energy.max(log_energy(s, fr));
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (wi, (p, f)) in prons.iter().zip(&frames).enumerate() {
        let syms = p.symbols();
        let w_dur: usize = f.iter().sum();
        let mut w_pitch = pitch - 2.0 * wi as f32;
        if phrase == PhraseType::YesnoQuestion && wi + 1 == n {
            w_pitch += 8.0;
        }
        let w_energy = syms
            .iter()
            .zip(f)
            .filter(|(s, _)| **s != SEP_INNER)
            .map(|(&s, &fr)| log_energy(s, fr))
            .fold(0.0f32, f32::max);
        let mut word = Vec::with_capacity(syms.len());
        for (k, (&s, &fr)) in syms.iter().zip(f).enumerate() {
            let mut v = [0.0f32; PROSODY_DIM];
            v[px::SENTENCE + px::DURATION] = s_dur;
            v[px::SENTENCE + px::PITCH] = pitch;
            v[px::SENTENCE + px::ENERGY] = s_energy;
            v[px::WORD + px::DURATION] = w_dur as f32;
            v[px::WORD + px::PITCH] = w_pitch;
            v[px::WORD + px::ENERGY] = w_energy;
            if s != SEP_INNER {
                v[px::PHONE + px::DURATION] = fr as f32;
                v[px::PHONE + px::PITCH] = w_pitch + if is_vowel(s) { 4.0 } else { 0.0 } - 0.5 * k as f32;
                v[px::PHONE + px::ENERGY] = log_energy(s, fr);
            }
            word.push((s, v, fr));
        }
        out.push(word);
    }
    (out, phrase)
}

/// Separator prosody: sentence and word levels of the word it ends, phone level zero.
fn terminator_prosody(last: &ProsodyVector) -> ProsodyVector {
    let mut v = *last;
    for d in 0..3 {
        v[px::PHONE + d] = 0.0;
    }
    v
}

/// Full label sequence: per word its phones (with inner separators), then a
/// regular separator between words and eos after the last word.
pub fn teacher_labels(t2pred: &[Vec<String>], context: &[String]) -> (Vec<PnpToken>, Vec<WordTags>) {
    let prons = teacher_g2p(t2pred, context);
    let total_words = prons.len();
    let mut labels = Vec::new();
    let mut tags = Vec::with_capacity(total_words);
    let mut offset = 0;
    for sentence in t2pred {
        let sp = &prons[offset..offset + sentence.len()];
        let (words, phrase) = teacher_prosody(sp, sentence);
        for (k, word) in words.into_iter().enumerate() {
            let word_index = offset + k;
            let last = word.last().map(|t| t.1).unwrap_or([0.0; PROSODY_DIM]);
            for (symbol, prosody, frames) in word {
                labels.push(PnpToken {
                    symbol,
                    prosody,
                    frames,
                    phrase,
                    word_index,
                });
            }
            labels.push(PnpToken {
                symbol: if word_index + 1 == total_words { EOS } else { SEP_REGULAR },
                prosody: terminator_prosody(&last),
                frames: 0,
                phrase,
                word_index,
            });
            tags.push(sp[k].tags);
        }
        offset += sentence.len();
    }
    (labels, tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textdata::phones::{PnpKind, PHONES};

    fn sent(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn names(p: &WordPronunciation) -> String {
        p.symbols().iter().map(|&i| if i == SEP_INNER { "-" } else { PHONES[i] }).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn flap_rule() {
        let p = teacher_g2p(&[sent("sit at")], &[]);
        assert_eq!(names(&p[0]), "S IH DX");
        assert!(p[0].tags.flap_site);
        let p = teacher_g2p(&[sent("sit down")], &[]);
        assert_eq!(names(&p[0]), "S IH T");
        assert!(p[0].tags.flap_site);
        let p = teacher_g2p(&[sent("sit")], &[]);
        assert_eq!(names(&p[0]), "S IH T");
        assert!(!p[0].tags.flap_site);
        // no flap across sentences
        let p = teacher_g2p(&[sent("we sit."), sent("at home.")], &[]);
        assert_eq!(names(&p[1]), "S IH T");
    }

    #[test]
    fn heteronyms() {
        let p = teacher_g2p(&[sent("we will record the song.")], &[]);
        assert_eq!(names(&p[2]), "R IH K AA R D");
        let p = teacher_g2p(&[sent("we will record today.")], &[]);
        assert_eq!(names(&p[2]), "R EH K ER D");
        let ctx = sent("the river and the lake.");
        let p = teacher_g2p(&[sent("we saw the wind.")], &ctx);
        assert_eq!(names(&p[3]), "W IH N D");
        let ctx = sent("the tools and the drill.");
        let p = teacher_g2p(&[sent("we saw the wind.")], &ctx);
        assert_eq!(names(&p[3]), "W AY N D");
        let p = teacher_g2p(&[sent("we read the list yesterday.")], &[]);
        assert_eq!(names(&p[1]), "R EH D");
        let p = teacher_g2p(&[sent("we read the list today.")], &[]);
        assert_eq!(names(&p[1]), "R IY D");
    }

    #[test]
    fn numbers_use_inner_separators() {
        let p = teacher_g2p(&[sent("we saw 23 cars.")], &[]);
        assert_eq!(names(&p[2]), "T W EH N T IY - T R IY");
        assert!(p[2].tags.normalized);
        // a vowel-initial number triggers the flap on the word before it
        let p = teacher_g2p(&[sent("get 8")], &[]);
        assert_eq!(names(&p[0]), "K EH DX");
    }

    #[test]
    fn prosody_rules() {
        let s = sent("we sit at home.");
        let (words, phrase) = teacher_prosody(&teacher_g2p(&[s.clone()], &[]), &s);
        assert_eq!(phrase, PhraseType::Declarative);
        // "we": W (consonant) 4 frames, IY (vowel) 8 frames
        assert_eq!(words[0][0].2, 4);
        assert_eq!(words[0][1].2, 8);
        // sentence-final word stretched
        assert!(words[3].iter().all(|t| t.2 == 6 || t.2 == 12));
        assert_eq!(phrase_type(&sent("did we go?")), PhraseType::YesnoQuestion);
        assert_eq!(phrase_type(&sent("where did we go?")), PhraseType::WhQuestion);
        assert_eq!(phrase_type(&sent("what a day!")), PhraseType::Exclamation);
        let again = teacher_prosody(&teacher_g2p(&[s.clone()], &[]), &s);
        assert_eq!(again.0, words);
    }

    #[test]
    fn labels_structure() {
        let t2 = vec![sent("we saw 23 cars."), sent("did they sit at home?")];
        let (labels, tags) = teacher_labels(&t2, &[]);
        assert_eq!(tags.len(), 9);
        assert_eq!(labels.last().unwrap().kind(), PnpKind::Eos);
        let regular = labels.iter().filter(|l| l.symbol == SEP_REGULAR).count();
        assert_eq!(regular, 8);
        let mut words: Vec<usize> = labels.iter().filter(|l| l.is_phone()).map(|l| l.word_index).collect();
        words.dedup();
        assert_eq!(words, (0..9).collect::<Vec<_>>());
        for l in &labels {
            assert_eq!(l.frames >= 1, l.is_phone());
            assert!(l.prosody.iter().all(|v| v.is_finite()));
        }
        assert!(labels.windows(2).all(|w| w[0].word_index <= w[1].word_index));
        assert_eq!(labels.iter().filter(|l| l.symbol == SEP_INNER).count(), 1);
    }
}
