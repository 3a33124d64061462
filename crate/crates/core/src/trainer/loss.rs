//! Distillation loss: phone cross-entropy, prosody squared error in
//! standardized units and phrase-type cross-entropy, pooled over all steps.

use crate::autodiff::Tape;
use crate::llm2pnp::{DecoderInput, EncoderInput, PnpModel};
use crate::tensor::{Matrix, Scalar};
use crate::textdata::dataset::Sample;
use crate::textdata::phones::PROSODY_DIM;
use crate::{Error, Limit, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub phone: f64,
    pub prosody: f64,
    pub phrase: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            phone: 1.0,
            prosody: 1.0,
            phrase: 0.5,
        }
    }
}

/// Per-step means of each term and their weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub phone: f64,
    pub prosody: f64,
    pub phrase: f64,
    pub total: f64,
    pub steps: usize,
}

impl LossBreakdown {
    /// Step-weighted average of several breakdowns.
    pub fn pooled(parts: &[LossBreakdown]) -> Self {
        let steps: usize = parts.iter().map(|p| p.steps).sum();
        if steps == 0 {
            return Self::default();
        }
        let avg = |f: fn(&LossBreakdown) -> f64| parts.iter().map(|p| f(p) * p.steps as f64).sum::<f64>() / steps as f64;
        Self {
            phone: avg(|p| p.phone),
            prosody: avg(|p| p.prosody),
            phrase: avg(|p| p.phrase),
            total: avg(|p| p.total),
            steps,
        }
    }
}

/// A sample converted to model inputs and standardized targets.
#[derive(Clone, Debug)]
pub struct Prepared<T> {
    pub enc: EncoderInput<T>,
    pub dec: DecoderInput,
    pub phones: Vec<usize>,
    pub prosody: Matrix<T>,
    pub phrases: Vec<usize>,
}

impl<T: Scalar> Prepared<T> {
    pub fn new(sample: &Sample, model: &PnpModel<T>) -> Result<Self> {
        let enc = EncoderInput::new(&sample.tokens, Some(&sample.embeddings), &model.config)?;
        let dec = DecoderInput::gold(&sample.labels)?;
        let mut pros = Vec::with_capacity(sample.labels.len() * PROSODY_DIM);
        for l in &sample.labels {
            pros.extend(model.standardize(&l.prosody));
        }
        Ok(Self {
            enc,
            dec,
            phones: sample.labels.iter().map(|l| l.symbol).collect(),
            prosody: Matrix::from_vec(sample.labels.len(), PROSODY_DIM, pros)?,
            phrases: sample.labels.iter().map(|l| l.phrase.id()).collect(),
        })
    }

    pub fn steps(&self) -> usize {
        self.phones.len()
    }
}

/// Loss of `batch` and, when `grads` is given, its gradient accumulated there.
pub fn batch_loss<T: Scalar>(
    model: &PnpModel<T>,
    batch: &[&Prepared<T>],
    lookahead: Limit,
    weights: LossWeights,
    mut grads: Option<&mut [Matrix<T>]>,
) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::Empty("loss over an empty batch"));
    }
    let steps: usize = batch.iter().map(|p| p.steps()).sum();
    let inv = T::from_f64(1.0 / steps as f64);
    let w = [
        T::from_f64(weights.phone),
        T::from_f64(weights.prosody / PROSODY_DIM as f64),
        T::from_f64(weights.phrase),
    ];
    let (mut ce, mut se, mut pe) = (0.0, 0.0, 0.0);
    for p in batch {
        let mut tape = Tape::new(&model.params);
        let f = model.forward_tape(&mut tape, &p.enc, &p.dec, lookahead)?;
        let c = tape.softmax_xent(f.phone, &p.phones)?;
        let s = tape.squared_error(f.prosody, p.prosody.clone())?;
        let r = tape.softmax_xent(f.phrase, &p.phrases)?;
        let total = tape.weighted_sum(&[(c, w[0]), (s, w[1]), (r, w[2])])?;
        let t = tape.value(total).get(0, 0);
        if !t.is_finite() {
            let at = tape.first_non_finite().unwrap_or_default();
            return Err(Error::NonFinite(format!("loss ({at})")));
        }
        ce += tape.value(c).get(0, 0).as_f64();
        se += tape.value(s).get(0, 0).as_f64();
        pe += tape.value(r).get(0, 0).as_f64();
        if let Some(g) = grads.as_deref_mut() {
            tape.backward(total, inv, g)?;
        }
    }
    let n = steps as f64;
    let (phone, prosody, phrase) = (ce / n, se / (n * PROSODY_DIM as f64), pe / n);
    Ok(LossBreakdown {
        phone,
        prosody,
        phrase,
        total: weights.phone * phone + weights.prosody * prosody + weights.phrase * phrase,
        steps,
    })
}
