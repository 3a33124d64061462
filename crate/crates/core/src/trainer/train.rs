//! Mini-batch Adam training with periodic validation and checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::config::KvConfig;
use crate::llm2pnp::{PnpModel, PnpModelConfig};
use crate::rng::derived;
use crate::tensor::Scalar;
use crate::textdata::dataset::Sample;
use crate::textdata::phones::PROSODY_DIM;
use crate::{Error, Limit, Result};

use super::loss::{batch_loss, LossBreakdown, LossWeights, Prepared};
use super::optim::Adam;

/// Loss above this (or non-finite) aborts training.
pub const DIVERGENCE_LOSS: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: PnpModelConfig,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weights: LossWeights,
    /// Validation every this many steps (0: only at start and end).
    pub eval_every: usize,
    /// Checkpoint every this many steps (0: final weights only).
    pub checkpoint_every: usize,
    /// Cap on validation samples used for the loss curve (0: all).
    pub valid_limit: usize,
}

pub const TRAIN_KEYS: &[&str] = &[
    "steps",
    "batch_size",
    "lr",
    "lambda_phone",
    "lambda_prosody",
    "lambda_phrase",
    "eval_every",
    "checkpoint_every",
    "valid_limit",
];

impl TrainConfig {
    pub fn new(model: PnpModelConfig) -> Self {
        Self {
            model,
            steps: 500,
            batch_size: 16,
            lr: 1e-3,
            weights: LossWeights::default(),
            eval_every: 100,
            checkpoint_every: 0,
            valid_limit: 0,
        }
    }

    pub fn from_kv(kv: &KvConfig, vocab_size: usize) -> Result<Self> {
        let mut kv_model = kv.clone();
        kv_model.set("vocab_size", vocab_size);
        let d = Self::new(PnpModelConfig::from_kv(&kv_model)?);
        let c = Self {
            steps: kv.get_or("steps", d.steps)?,
            batch_size: kv.get_or("batch_size", d.batch_size)?,
            lr: kv.get_or("lr", d.lr)?,
            weights: LossWeights {
                phone: kv.get_or("lambda_phone", d.weights.phone)?,
                prosody: kv.get_or("lambda_prosody", d.weights.prosody)?,
                phrase: kv.get_or("lambda_phrase", d.weights.phrase)?,
            },
            eval_every: kv.get_or("eval_every", d.eval_every)?,
            checkpoint_every: kv.get_or("checkpoint_every", d.checkpoint_every)?,
            valid_limit: kv.get_or("valid_limit", d.valid_limit)?,
            ..d
        };
        if c.batch_size == 0 || !(c.lr > 0.0) {
            return Err(Error::Config("batch_size and lr must be positive".into()));
        }
        Ok(c)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = self.model.to_kv();
        kv.set("steps", self.steps);
        kv.set("batch_size", self.batch_size);
        kv.set("lr", self.lr);
        kv.set("lambda_phone", self.weights.phone);
        kv.set("lambda_prosody", self.weights.prosody);
        kv.set("lambda_phrase", self.weights.phrase);
        kv.set("eval_every", self.eval_every);
        kv.set("checkpoint_every", self.checkpoint_every);
        kv.set("valid_limit", self.valid_limit);
        kv
    }
}

/// Per-dimension mean and deviation of the training prosody targets.
pub fn prosody_stats(samples: &[Sample]) -> (Vec<f64>, Vec<f64>) {
    let mut sum = [0.0f64; PROSODY_DIM];
    let mut sq = [0.0f64; PROSODY_DIM];
    let mut n = 0usize;
    for l in samples.iter().flat_map(|s| &s.labels) {
        for d in 0..PROSODY_DIM {
            let v = f64::from(l.prosody[d]);
            sum[d] += v;
            sq[d] += v * v;
        }
        n += 1;
    }
    let n = n.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let var = (q / n - m * m).max(0.0);
            if var.sqrt() < 1e-3 {
                1.0
            } else {
                var.sqrt()
            }
        })
        .collect();
    (mean, std)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub train: LossBreakdown,
    pub valid: Option<LossBreakdown>,
}

pub struct TrainOutcome<T: Scalar> {
    pub model: PnpModel<T>,
    pub curve: Vec<CurvePoint>,
    pub initial_valid: LossBreakdown,
    pub final_valid: LossBreakdown,
    pub checkpoints: Vec<PathBuf>,
}

impl<T: Scalar> TrainOutcome<T> {
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("step,train_total,train_phone,train_prosody,train_phrase,valid_total,valid_phone,valid_prosody,valid_phrase\n");
        for p in &self.curve {
            let v = p.valid.map_or_else(
                || ",,,".to_string(),
                |v| format!("{:.6},{:.6},{:.6},{:.6}", v.total, v.phone, v.prosody, v.phrase),
            );
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6},{v}",
                p.step, p.train.total, p.train.phone, p.train.prosody, p.train.phrase
            );
        }
        s
    }
}

/// Mean loss over `samples` in chunks of `batch`.
pub fn evaluate_loss<T: Scalar>(
    model: &PnpModel<T>,
    samples: &[Prepared<T>],
    lookahead: Limit,
    weights: LossWeights,
    batch: usize,
) -> Result<LossBreakdown> {
    let mut parts = Vec::new();
    for chunk in samples.chunks(batch.max(1)) {
        let refs: Vec<&Prepared<T>> = chunk.iter().collect();
        parts.push(batch_loss(model, &refs, lookahead, weights, None)?);
    }
    Ok(LossBreakdown::pooled(&parts))
}

/// Trains from a fresh initialization; deterministic in `(train, valid, config, seed)`.
/// With `out_dir`, checkpoints are written there as `step_<n>.weights`.
pub fn train<T: Scalar>(
    train: &[Sample],
    valid: &[Sample],
    config: &TrainConfig,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome<T>> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut model = PnpModel::<T>::init(config.model.clone(), seed)?;
    let (mean, std) = prosody_stats(train);
    model.set_prosody_stats(&mean, &std)?;
    let lookahead = config.model.lookahead;
    let prepared: Vec<Prepared<T>> = train.iter().map(|s| Prepared::new(s, &model)).collect::<Result<_>>()?;
    let valid_n = if config.valid_limit == 0 { valid.len() } else { config.valid_limit.min(valid.len()) };
    let valid_prep: Vec<Prepared<T>> =
        valid[..valid_n].iter().map(|s| Prepared::new(s, &model)).collect::<Result<_>>()?;
    let eval = |m: &PnpModel<T>| -> Result<Option<LossBreakdown>> {
        if valid_prep.is_empty() {
            return Ok(None);
        }
        evaluate_loss(m, &valid_prep, lookahead, config.weights, config.batch_size).map(Some)
    };
    let initial_valid = eval(&model)?;
    let mut curve = vec![CurvePoint {
        step: 0,
        train: LossBreakdown::default(),
        valid: initial_valid,
    }];
    let mut opt = Adam::new(&model.params, config.lr);
    let mut order: Vec<usize> = Vec::new();
    let mut epoch = 0u64;
    let mut checkpoints = Vec::new();
    let mut window = Vec::new();
    for step in 1..=config.steps {
        if order.len() < config.batch_size {
            let mut fresh: Vec<usize> = (0..prepared.len()).collect();
            fresh.shuffle(&mut derived(seed, &format!("epoch-{epoch}")));
            epoch += 1;
            order.extend(fresh);
        }
        let take = config.batch_size.min(order.len());
        let idx: Vec<usize> = order.drain(..take).collect();
        let batch: Vec<&Prepared<T>> = idx.iter().map(|&i| &prepared[i]).collect();
        let mut grads = model.params.zeros_like();
        let loss = match batch_loss(&model, &batch, lookahead, config.weights, Some(&mut grads)) {
            Ok(l) => l,
            Err(Error::NonFinite(what)) => {
                return Err(Error::Diverged {
                    step,
                    loss: f64::NAN,
                    detail: format!("non-finite {what}"),
                })
            }
            Err(e) => return Err(e),
        };
        if !(loss.total <= DIVERGENCE_LOSS) {
            return Err(Error::Diverged {
                step,
                loss: loss.total,
                detail: format!(
                    "phone {:.3}, prosody {:.3}, phrase {:.3}, samples {idx:?}",
                    loss.phone, loss.prosody, loss.phrase
                ),
            });
        }
        opt.step(&mut model.params, &grads);
        window.push(loss);
        let at_eval = step == config.steps || (config.eval_every > 0 && step % config.eval_every == 0);
        if at_eval {
            curve.push(CurvePoint {
                step,
                train: LossBreakdown::pooled(&window),
                valid: eval(&model)?,
            });
            window.clear();
        }
        if let Some(dir) = out_dir {
            if config.checkpoint_every > 0 && step % config.checkpoint_every == 0 {
                let path = dir.join(format!("step_{step}.weights"));
                model.save(&path)?;
                checkpoints.push(path);
            }
        }
    }
    let final_valid = curve.last().and_then(|c| c.valid).unwrap_or_default();
    Ok(TrainOutcome {
        model,
        curve,
        initial_valid: initial_valid.unwrap_or_default(),
        final_valid,
        checkpoints,
    })
}
