//! Word error rate of greedy decoding against the teacher, with subsets.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::llm2pnp::{greedy_decode, EncoderInput, PnpModel};
use crate::tensor::Scalar;
use crate::textdata::dataset::Sample;
use crate::textdata::phones::{is_terminator, PnpToken};
use crate::textdata::tokenize::split_punct;
use crate::{Limit, Result};

/// Share of eval-set word occurrences covered by the rare subset.
pub const RARE_COVERAGE: f64 = 0.2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SubsetStats {
    pub words: usize,
    pub errors: usize,
}

impl SubsetStats {
    /// Percentage; 0 for an empty subset.
    pub fn wer(&self) -> f64 {
        if self.words == 0 {
            0.0
        } else {
            100.0 * self.errors as f64 / self.words as f64
        }
    }

    fn add(&mut self, error: bool) {
        self.words += 1;
        self.errors += usize::from(error);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub all: SubsetStats,
    pub rare: SubsetStats,
    pub norm: SubsetStats,
    pub oov: SubsetStats,
    /// Flap sites and heteronyms resolved by the following word.
    pub lookahead: SubsetStats,
    /// Heteronyms resolved by the paragraph topic.
    pub context: SubsetStats,
    /// Heteronyms resolved by a later tense marker in the sentence.
    pub tense: SubsetStats,
    /// Words whose decoding hit the per-word cap.
    pub capped_words: usize,
}

impl EvalReport {
    pub fn subsets(&self) -> [(&'static str, SubsetStats); 7] {
        [
            ("all", self.all),
            ("rare", self.rare),
            ("norm", self.norm),
            ("oov", self.oov),
            ("lookahead", self.lookahead),
            ("context", self.context),
            ("tense", self.tense),
        ]
    }

    pub fn csv_header() -> String {
        let mut s = String::new();
        for (name, _) in Self::default().subsets() {
            let _ = write!(s, "{name}_wer,{name}_words,");
        }
        s.push_str("capped_words");
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        for (_, st) in self.subsets() {
            let _ = write!(s, "{:.4},{},", st.wer(), st.words);
        }
        let _ = write!(s, "{}", self.capped_words);
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (name, st) in self.subsets() {
            let _ = writeln!(s, "{name:>10}: {:6.2}% of {} words", st.wer(), st.words);
        }
        s
    }
}

fn word_key(w: &str) -> String {
    split_punct(w).0.to_lowercase()
}

/// Least frequent word types of `samples`, taken in ascending frequency
/// (ties by spelling) until they cover [`RARE_COVERAGE`] of all occurrences.
pub fn rare_words(samples: &[Sample]) -> HashSet<String> {
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for w in samples.iter().flat_map(|s| s.t2pred.iter().flatten()) {
        *freq.entry(word_key(w)).or_default() += 1;
    }
    let total: usize = freq.values().sum();
    let mut types: Vec<(String, usize)> = freq.into_iter().collect();
    types.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut out = HashSet::new();
    let mut covered = 0usize;
    for (w, c) in types {
        if covered as f64 >= RARE_COVERAGE * total as f64 {
            break;
        }
        covered += c;
        out.insert(w);
    }
    out
}

/// Symbols of each word between terminators (inner separators kept).
pub fn word_segments(pnp: &[PnpToken], words: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); words];
    for p in pnp {
        if !is_terminator(p.symbol) && p.word_index < words {
            out[p.word_index].push(p.symbol);
        }
    }
    out
}

/// Scores predicted PnP sequences (one per sample) against the teacher labels.
pub fn score_predictions(samples: &[Sample], predictions: &[Vec<PnpToken>]) -> EvalReport {
    let rare = rare_words(samples);
    let mut r = EvalReport::default();
    for (s, pred) in samples.iter().zip(predictions) {
        let n = s.word_count();
        let gold = word_segments(&s.labels, n);
        let got = word_segments(pred, n);
        for (i, w) in s.text_words().iter().enumerate() {
            let err = gold[i] != got[i];
            let info = s.words[i];
            r.all.add(err);
            if rare.contains(&word_key(w)) {
                r.rare.add(err);
            }
            if info.tags.normalized {
                r.norm.add(err);
            }
            if info.oov {
                r.oov.add(err);
            }
            if info.tags.lookahead_site() {
                r.lookahead.add(err);
            }
            if info.tags.context_heteronym {
                r.context.add(err);
            }
            if info.tags.tense_heteronym {
                r.tense.add(err);
            }
        }
    }
    r
}

/// Greedy-decodes every sample under lookahead `L` and scores it.
pub fn eval_wer<T: Scalar>(model: &PnpModel<T>, samples: &[Sample], lookahead: Limit) -> Result<EvalReport> {
    let mut preds = Vec::with_capacity(samples.len());
    let mut capped = 0;
    for s in samples {
        let input = EncoderInput::new(&s.tokens, Some(&s.embeddings), &model.config)?;
        let d = greedy_decode(model, &input, lookahead)?;
        capped += d.capped_words.len();
        preds.push(d.pnp);
    }
    let mut r = score_predictions(samples, &preds);
    r.capped_words = capped;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textdata::{build_dataset, gen_corpus, HashEmbedder, DEFAULT_LAYER_IDS};

    #[test]
    fn teacher_predictions_score_zero_and_subsets_are_consistent() {
        let corpus = gen_corpus(8, 120).unwrap();
        let data = build_dataset(&corpus, 8, &HashEmbedder::default(), &DEFAULT_LAYER_IDS).unwrap();
        let samples = &data.train;
        let gold: Vec<Vec<PnpToken>> = samples.iter().map(|s| s.labels.clone()).collect();
        let r = score_predictions(samples, &gold);
        for (_, st) in r.subsets() {
            assert_eq!(st.errors, 0);
            assert!(st.words <= r.all.words);
        }
        assert!(r.rare.words > 0 && r.norm.words > 0 && r.lookahead.words > 0 && r.context.words > 0);

        // dropping every phone makes every word wrong
        let empty: Vec<Vec<PnpToken>> = samples.iter().map(|_| Vec::new()).collect();
        let r = score_predictions(samples, &empty);
        assert_eq!(r.all.errors, r.all.words);
        assert_eq!(r.all.wer(), 100.0);
    }

    #[test]
    fn rare_subset_covers_about_a_fifth() {
        let corpus = gen_corpus(9, 200).unwrap();
        let data = build_dataset(&corpus, 9, &HashEmbedder::default(), &DEFAULT_LAYER_IDS).unwrap();
        let rare = rare_words(&data.train);
        let words: Vec<String> = data.train.iter().flat_map(|s| s.text_words()).map(|w| word_key(&w)).collect();
        let covered = words.iter().filter(|w| rare.contains(*w)).count() as f64 / words.len() as f64;
        assert!((0.2..0.3).contains(&covered), "{covered}");
    }
}
