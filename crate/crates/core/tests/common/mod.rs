//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pnpstream")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).output().expect("spawn pnpstream")
}

/// One small invocation per subcommand, run in order inside `dir`.
pub const PIPELINE: &[&[&str]] = &[
    &["gen-corpus", "--seed", "5", "--paragraphs", "48", "--out", "corpus.jsonl"],
    &["build-dataset", "--seed", "5", "--corpus", "corpus.jsonl", "--out", "data"],
    &["train", "--seed", "5", "--data", "data", "--steps", "4", "--set", "batch_size=4", "--out", "run"],
    &["eval-g2p", "--data", "data", "--model", "run/model.weights", "--out", "eval.csv"],
    &[
        "ablate", "--seed", "5", "--data", "data", "--steps", "2", "--set", "batch_size=4", "--lookaheads", "0,inf",
        "--embeddings", "true,false", "--out", "ablation.csv",
    ],
    &["stream", "--seed", "5", "--out", "stream"],
    &["stream", "--model", "run/model.weights", "--text", "the bass was loud today", "--out", "stream_trained"],
    &["check-equivalence", "--seed", "5", "--sentences", "3", "--out", "equivalence.csv"],
    &["delay-report", "--out", "delay.txt"],
];

/// Runs [`PIPELINE`] in `dir`; returns the subcommands that exited non-zero.
pub fn run_pipeline(dir: &Path) -> Vec<String> {
    let mut failed = Vec::new();
    for args in PIPELINE {
        let out = run_in(dir, args);
        if !out.status.success() {
            failed.push(format!("{} -> {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
    }
    failed
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, at: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(at).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Files that differ (or exist on one side only) between two snapshots.
pub fn differing(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>) -> Vec<PathBuf> {
    a.keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect()
}

use pnpstream::textdata::normalize::normalize;
use pnpstream::textdata::phones::SEP_INNER;
use pnpstream::textdata::tokenize::split_punct;
use pnpstream::textdata::{build_dataset, gen_corpus, HashEmbedder, DEFAULT_LAYER_IDS};

/// Outcome of [`dataset_contract`].
pub struct ContractReport {
    pub samples: usize,
    pub expansions: usize,
    pub oov_words: usize,
    pub violations: Vec<String>,
}

/// Builds a dataset from `paragraphs` generated paragraphs and checks the
/// sample contract: 1 to 5 sentences to predict, one inner separator between
/// the parts of every numeral expansion, and OOV flags that agree with the
/// training text.
pub fn dataset_contract(seed: u64, paragraphs: usize) -> ContractReport {
    let corpus = gen_corpus(seed, paragraphs).unwrap();
    let data = build_dataset(&corpus, seed, &HashEmbedder::default(), &DEFAULT_LAYER_IDS).unwrap();
    let core = |w: &str| split_punct(w).0.to_string();
    let train_words: std::collections::HashSet<String> =
        data.train.iter().flat_map(|s| s.text_words()).map(|w| core(&w)).collect();
    let mut r = ContractReport {
        samples: data.train.len() + data.valid.len(),
        expansions: 0,
        oov_words: 0,
        violations: Vec::new(),
    };
    for (split, samples) in [("train", &data.train), ("valid", &data.valid)] {
        for s in samples {
            let id = format!("{split} paragraph {}", s.paragraph);
            if !(1..=5).contains(&s.t2pred.len()) {
                r.violations.push(format!("{id}: {} sentences to predict", s.t2pred.len()));
            }
            for (i, w) in s.text_words().iter().enumerate() {
                let parts = normalize(&core(w)).parts.len();
                let inner = s.labels.iter().filter(|t| t.word_index == i && t.symbol == SEP_INNER).count();
                if parts > 1 {
                    r.expansions += 1;
                }
                if inner != parts - 1 {
                    r.violations.push(format!("{id}: {w:?} has {parts} parts but {inner} inner separators"));
                }
                let flagged = s.words[i].oov;
                if split == "train" && flagged {
                    r.violations.push(format!("{id}: training word {w:?} flagged OOV"));
                }
                if split == "valid" {
                    let unseen = !train_words.contains(&core(w));
                    r.oov_words += usize::from(flagged);
                    if flagged != unseen {
                        r.violations.push(format!("{id}: {w:?} OOV flag {flagged}, unseen in training {unseen}"));
                    }
                }
            }
        }
    }
    r
}
