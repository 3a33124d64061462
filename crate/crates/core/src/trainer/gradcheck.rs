//! Central finite-difference verification of the analytic gradient.

use rand::Rng as _;

use crate::llm2pnp::PnpModel;
use crate::rng::derived;
use crate::{Limit, Result};

use super::loss::{batch_loss, LossWeights, Prepared};

#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateCheck {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub eps: f64,
    pub checks: Vec<CoordinateCheck>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.checks.iter().map(|c| c.rel_err).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&CoordinateCheck> {
        self.checks.iter().max_by(|a, b| a.rel_err.total_cmp(&b.rel_err))
    }
}

/// `|a − n| / max(|a|, |n|)`, zero when both vanish.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Compares the analytic gradient of the total loss with central differences
/// `(L(θ+ε) − L(θ−ε)) / 2ε` on `coords` trainable coordinates drawn uniformly.
pub fn finite_difference_check(
    model: &mut PnpModel<f64>,
    batch: &[&Prepared<f64>],
    lookahead: Limit,
    weights: LossWeights,
    coords: usize,
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut grads = model.params.zeros_like();
    batch_loss(model, batch, lookahead, weights, Some(&mut grads))?;

    let trainable: Vec<(usize, usize)> = (0..model.params.len())
        .filter(|&i| model.params.is_trainable(i))
        .map(|i| (i, model.params.get(i).as_slice().len()))
        .collect();
    let total: usize = trainable.iter().map(|t| t.1).sum();
    let mut rng = derived(seed, "gradcheck");
    let mut checks = Vec::with_capacity(coords);
    for _ in 0..coords {
        let mut flat = rng.random_range(0..total);
        let &(id, _) = trainable
            .iter()
            .find(|(_, n)| {
                if flat < *n {
                    true
                } else {
                    flat -= n;
                    false
                }
            })
            .expect("index within total");
        let orig = model.params.get(id).as_slice()[flat];
        model.params.get_mut(id).as_mut_slice()[flat] = orig + eps;
        let up = batch_loss(model, batch, lookahead, weights, None)?.total;
        model.params.get_mut(id).as_mut_slice()[flat] = orig - eps;
        let down = batch_loss(model, batch, lookahead, weights, None)?.total;
        model.params.get_mut(id).as_mut_slice()[flat] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let analytic = grads[id].as_slice()[flat];
        checks.push(CoordinateCheck {
            param: model.params.name(id).to_string(),
            index: flat,
            analytic,
            numeric,
            rel_err: relative_error(analytic, numeric),
        });
    }
    Ok(GradCheckReport { eps, checks })
}
