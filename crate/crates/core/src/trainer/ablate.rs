//! Lookahead and embedding ablations: one model per training configuration,
//! each scored at its own lookahead, and the unrestricted model additionally
//! scored under every finite decoding mask.

use std::fmt::Write as _;

use super::eval::{eval_wer, EvalReport};
use super::train::{train, TrainConfig};
use crate::textdata::dataset::Sample;
use crate::{Limit, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub train_lookahead: Limit,
    pub eval_lookahead: Limit,
    pub embeddings: bool,
    pub report: EvalReport,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn find(&self, train_lookahead: Limit, eval_lookahead: Limit, embeddings: bool) -> Option<&EvalReport> {
        self.rows
            .iter()
            .find(|r| r.train_lookahead == train_lookahead && r.eval_lookahead == eval_lookahead && r.embeddings == embeddings)
            .map(|r| &r.report)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("train_lookahead,eval_lookahead,embeddings,{}\n", EvalReport::csv_header());
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.train_lookahead, r.eval_lookahead, r.embeddings, r.report.csv_row());
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:>7} {:>7} {:>5} {:>8} {:>8} {:>10} {:>8} {:>8}\n",
            "train_L", "eval_L", "emb", "all", "rare", "lookahead", "context", "tense"
        );
        for r in &self.rows {
            let p = &r.report;
            let _ = writeln!(
                s,
                "{:>7} {:>7} {:>5} {:>7.2}% {:>7.2}% {:>9.2}% {:>7.2}% {:>7.2}%",
                r.train_lookahead.to_string(),
                r.eval_lookahead.to_string(),
                r.embeddings,
                p.all.wer(),
                p.rare.wer(),
                p.lookahead.wer(),
                p.context.wer(),
                p.tense.wer()
            );
        }
        s
    }
}

/// Trains one f32 model per `(lookahead, embeddings)` pair, all from the
/// same seed, and scores each on `eval`. `base.model.layer_ids` is the
/// embedding setting used when embeddings are on.
pub fn run_ablation(
    train_set: &[Sample],
    eval: &[Sample],
    base: &TrainConfig,
    seed: u64,
    lookaheads: &[Limit],
    embeddings: &[bool],
    mut progress: impl FnMut(&AblationRow),
) -> Result<AblationTable> {
    let mut table = AblationTable::default();
    for &emb in embeddings {
        for &l in lookaheads {
            let mut cfg = base.clone();
            cfg.model.lookahead = l;
            if !emb {
                cfg.model.layer_ids.clear();
            }
            let outcome = train::<f32>(train_set, eval, &cfg, seed, None)?;
            let mut evals = vec![l];
            if l == Limit::Infinite {
                evals.extend(lookaheads.iter().copied().filter(|x| x.is_finite()));
            }
            for e in evals {
                let row = AblationRow {
                    train_lookahead: l,
                    eval_lookahead: e,
                    embeddings: emb,
                    report: eval_wer(&outcome.model, eval, e)?,
                };
                progress(&row);
                table.rows.push(row);
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm2pnp::PnpModelConfig;
    use crate::textdata::{build_dataset, gen_corpus, HashEmbedder, DEFAULT_LAYER_IDS};

    #[test]
    fn tiny_ablation_is_deterministic_and_complete() {
        let corpus = gen_corpus(4, 60).unwrap();
        let data = build_dataset(&corpus, 4, &HashEmbedder::default(), &DEFAULT_LAYER_IDS).unwrap();
        let mut cfg = TrainConfig::new(PnpModelConfig::micro(data.vocab.len()));
        cfg.steps = 3;
        cfg.batch_size = 4;
        cfg.eval_every = 0;
        let ls = [Limit::Finite(0), Limit::Infinite];
        let run = || run_ablation(&data.train, &data.valid[..2], &cfg, 1, &ls, &[true, false], |_| {}).unwrap();
        let a = run();
        // per embedding setting: L=0, L=inf, L=inf evaluated at 0
        assert_eq!(a.rows.len(), 6);
        assert!(a.find(Limit::Infinite, Limit::Finite(0), false).is_some());
        assert_eq!(a.to_csv(), run().to_csv());
        assert_eq!(a.to_csv().lines().count(), 7);
    }
}
