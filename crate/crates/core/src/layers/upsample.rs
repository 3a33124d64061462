//! Duration-driven Gaussian upsampling from phone encodings to frames.
//!
//! Phone `i` spans frames `[s_i, s_i + d_i)` and is centred at
//! `c_i = s_i + d_i / 2`. Frame `t` is sampled at `t + 0.5` and mixes phone
//! encodings with normalized weights `exp(-(t + 0.5 - c_i)^2 / (2 sigma_i^2))`.
//! The streaming form restricts the mix to phones within a guardband of the
//! frame's owning phone and renormalizes over that window.

use std::collections::VecDeque;

use crate::tensor::Matrix;
use crate::{Error, Limit, Result};

/// Default width when no sigma is predicted: `max(0.1, d / 3)`.
pub fn default_sigmas(durations: &[usize]) -> Vec<f32> {
    durations.iter().map(|&d| (d as f32 / 3.0).max(0.1)).collect()
}

#[derive(Clone, Debug)]
struct PhoneSlot {
    enc: Vec<f32>,
    start: usize,
    duration: usize,
    center: f32,
    sigma: f32,
}

fn check(enc: &Matrix<f32>, durations: &[usize], sigmas: &[f32]) -> Result<()> {
    if enc.rows() != durations.len() || sigmas.len() != durations.len() {
        return Err(Error::Shape(format!(
            "{} encodings, {} durations, {} sigmas",
            enc.rows(),
            durations.len(),
            sigmas.len()
        )));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::Invalid(format!("sigma {s} must be positive and finite")));
    }
    Ok(())
}

/// Mixes the window for frame `t`. Slots are visited in phone order so the
/// offline and streaming paths sum identically.
fn mix(t: usize, window: &[&PhoneSlot], dim: usize) -> Vec<f32> {
    let pos = t as f32 + 0.5;
    // log-weights shifted by their max so narrow windows never underflow to 0/0
    let logw: Vec<f32> = window
        .iter()
        .map(|p| {
            let z = pos - p.center;
            -(z * z) / (2.0 * p.sigma * p.sigma)
        })
        .collect();
    let top = logw.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let weights: Vec<f32> = logw.iter().map(|&l| (l - top).exp()).collect();
    let total: f32 = weights.iter().sum();
    let mut out = vec![0.0f32; dim];
    if total > 0.0 {
        for (p, w) in window.iter().zip(&weights) {
            let a = w / total;
            for (o, &e) in out.iter_mut().zip(&p.enc) {
                *o += a * e;
            }
        }
    }
    out
}

fn slots(enc: &Matrix<f32>, durations: &[usize], sigmas: &[f32], start: usize) -> Vec<PhoneSlot> {
    let mut s = start;
    durations
        .iter()
        .zip(sigmas)
        .enumerate()
        .map(|(i, (&d, &sigma))| {
            let slot = PhoneSlot {
                enc: enc.row(i).to_vec(),
                start: s,
                duration: d,
                center: s as f32 + d as f32 / 2.0,
                sigma,
            };
            s += d;
            slot
        })
        .collect()
}

/// Offline upsampling over every phone. Output has `Σ durations` rows.
pub fn gaussian_upsample(enc: &Matrix<f32>, durations: &[usize], sigmas: &[f32]) -> Result<Matrix<f32>> {
    check(enc, durations, sigmas)?;
    let all = slots(enc, durations, sigmas, 0);
    let window: Vec<&PhoneSlot> = all.iter().collect();
    let total: usize = durations.iter().sum();
    let mut out = Matrix::empty(enc.cols());
    for t in 0..total {
        out.push_row(&mix(t, &window, enc.cols()))?;
    }
    Ok(out)
}

/// The `frames x phones` weight matrix used by [`gaussian_upsample`].
pub fn upsample_weights(durations: &[usize], sigmas: &[f32]) -> Result<Matrix<f32>> {
    let n = durations.len();
    let mut eye = Matrix::zeros(n, n);
    for i in 0..n {
        eye.set(i, i, 1.0);
    }
    gaussian_upsample(&eye, durations, sigmas)
}

/// Streaming upsampler. The guardband counts only entries with a nonzero
/// duration; zero-duration entries (separators) lying inside the window are
/// mixed in but do not use up guardband. Frames of phone `i` are released once
/// the `g`-th phone after it has been pushed (or at flush) and mix every entry
/// from the `g`-th phone before it to the `g`-th phone after it.
#[derive(Clone, Debug)]
pub struct UpsampleStream {
    guardband: Limit,
    dim: usize,
    slots: VecDeque<PhoneSlot>,
    /// Phone index of `slots[0]`.
    first: usize,
    received: usize,
    /// Next phone whose frames are still owed.
    next_owner: usize,
    frame_cursor: usize,
    /// First frame of the next pushed phone.
    next_start: usize,
    flushed: bool,
}

impl UpsampleStream {
    pub fn new(dim: usize, guardband: Limit) -> Self {
        Self {
            guardband,
            dim,
            slots: VecDeque::new(),
            first: 0,
            received: 0,
            next_owner: 0,
            frame_cursor: 0,
            next_start: 0,
            flushed: false,
        }
    }

    pub fn buffered(&self) -> usize {
        self.slots.len()
    }

    /// Buffered entries with a nonzero duration.
    pub fn buffered_phones(&self) -> usize {
        self.slots.iter().filter(|s| s.duration > 0).count()
    }

    pub fn frames_emitted(&self) -> usize {
        self.frame_cursor
    }

    pub fn push(&mut self, enc: &Matrix<f32>, durations: &[usize], sigmas: &[f32]) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("upsampler stream"));
        }
        check(enc, durations, sigmas)?;
        if !enc.is_empty() && enc.cols() != self.dim {
            return Err(Error::Shape(format!("encoding width {} != {}", enc.cols(), self.dim)));
        }
        self.slots.extend(slots(enc, durations, sigmas, self.next_start));
        self.next_start += durations.iter().sum::<usize>();
        self.received += durations.len();
        self.release(false)
    }

    pub fn flush(&mut self) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("upsampler stream"));
        }
        self.flushed = true;
        let out = self.release(true)?;
        self.slots.clear();
        self.first = self.received;
        Ok(out)
    }

    fn slot(&self, i: usize) -> &PhoneSlot {
        &self.slots[i - self.first]
    }

    /// Index of the `g`-th phone after `o`, if received.
    fn upper(&self, o: usize, g: usize) -> Option<usize> {
        if g == 0 {
            return Some(o);
        }
        let mut seen = 0;
        (o + 1..self.received).find(|&i| {
            seen += usize::from(self.slot(i).duration > 0);
            seen == g
        })
    }

    /// Index of the `g`-th phone before `o`, or the oldest retained entry.
    fn lower(&self, o: usize, g: usize) -> usize {
        let mut seen = 0;
        let mut lo = o;
        while lo > self.first && seen < g {
            lo -= 1;
            seen += usize::from(self.slot(lo).duration > 0);
        }
        lo
    }

    fn release(&mut self, flushing: bool) -> Result<Matrix<f32>> {
        let mut out = Matrix::empty(self.dim);
        while self.next_owner < self.received {
            let o = self.next_owner;
            let window = match self.guardband {
                Limit::Infinite if !flushing => break,
                Limit::Infinite => (0, self.received - 1),
                Limit::Finite(g) => match self.upper(o, g) {
                    Some(hi) => (self.lower(o, g), hi),
                    None if flushing => (self.lower(o, g), self.received - 1),
                    None => break,
                },
            };
            let (lo, hi) = window;
            let mixed: Vec<&PhoneSlot> = (lo..=hi).map(|i| self.slot(i)).collect();
            let owner = self.slot(o);
            for t in owner.start..owner.start + owner.duration {
                out.push_row(&mix(t, &mixed, self.dim))?;
            }
            self.frame_cursor = owner.start + owner.duration;
            self.next_owner += 1;
            if let Limit::Finite(g) = self.guardband {
                let keep_from = self.lower(self.next_owner, g);
                while self.first < keep_from {
                    self.slots.pop_front();
                    self.first += 1;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normal};
    use rand::Rng as _;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f32> {
        let mut rng = seeded(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| standard_normal(&mut rng) as f32).collect()).unwrap()
    }

    #[test]
    fn single_phone_is_repeated() {
        let enc = random(1, 3, 1);
        let y = gaussian_upsample(&enc, &[4], &default_sigmas(&[4])).unwrap();
        assert_eq!(y.rows(), 4);
        for t in 0..4 {
            for c in 0..3 {
                assert!((y.get(t, c) - enc.get(0, c)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn narrow_gaussians_concentrate_weight() {
        let w = upsample_weights(&[2, 2], &[0.5, 0.5]).unwrap();
        // frame 0 at 0.5: distance 0.5 to centre 1, 2.5 to centre 3
        let a = (-0.25f64 / 0.5).exp();
        let b = (-6.25f64 / 0.5).exp();
        assert!((f64::from(w.get(0, 0)) - a / (a + b)).abs() < 1e-6);
        assert!(w.get(0, 0) > 0.95);
    }

    #[test]
    fn zero_duration_phone_emits_no_frames() {
        let enc = random(2, 2, 3);
        let y = gaussian_upsample(&enc, &[0, 3], &default_sigmas(&[0, 3])).unwrap();
        assert_eq!(y.rows(), 3);
        assert!(gaussian_upsample(&enc.slice_rows(0, 0), &[], &[]).unwrap().is_empty());
    }

    #[test]
    fn weight_rows_sum_to_one() {
        let d = [3usize, 0, 7, 1, 5];
        let w = upsample_weights(&d, &default_sigmas(&d)).unwrap();
        for t in 0..w.rows() {
            let s: f32 = w.row(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn guardband_zero_small_sigma_repeats_by_duration() {
        let enc = random(3, 2, 4);
        let d = [2usize, 3, 1];
        let mut st = UpsampleStream::new(2, Limit::Finite(0));
        let y = st.push(&enc, &d, &[0.01, 0.01, 0.01]).unwrap();
        let owners = [0, 0, 1, 1, 1, 2];
        assert_eq!(y.rows(), 6);
        for (t, &o) in owners.iter().enumerate() {
            assert_eq!(y.row(t), enc.row(o));
        }
    }

    #[test]
    fn guardband_two_waits_for_two_phones() {
        let enc = random(4, 2, 5);
        let d = [2usize, 2, 2, 2];
        let s = default_sigmas(&d);
        let mut st = UpsampleStream::new(2, Limit::Finite(2));
        assert_eq!(st.push(&enc.slice_rows(0, 2), &d[..2], &s[..2]).unwrap().rows(), 0);
        assert_eq!(st.push(&enc.slice_rows(2, 3), &d[2..3], &s[2..3]).unwrap().rows(), 2);
        assert_eq!(st.push(&enc.slice_rows(3, 4), &d[3..], &s[3..]).unwrap().rows(), 2);
        assert_eq!(st.flush().unwrap().rows(), 4);
        assert_eq!(st.buffered(), 0);
        assert!(st.flush().is_err());
    }

    #[test]
    fn infinite_guardband_is_bit_equal() {
        let mut rng = seeded(8);
        for trial in 0..20 {
            let n = rng.random_range(1..30);
            let d: Vec<usize> = (0..n).map(|_| rng.random_range(0..12)).collect();
            let s = default_sigmas(&d);
            let enc = random(n, 4, trial);
            let offline = gaussian_upsample(&enc, &d, &s).unwrap();
            let mut st = UpsampleStream::new(4, Limit::Infinite);
            let mut got = Matrix::empty(4);
            for i in 0..n {
                got.append(&st.push(&enc.slice_rows(i, i + 1), &d[i..i + 1], &s[i..i + 1]).unwrap()).unwrap();
            }
            got.append(&st.flush().unwrap()).unwrap();
            assert_eq!(got, offline);
        }
    }

    /// Durations shaped like teacher output: words of 1-4 phones at 4 or 8
    /// frames, zero-length separators, final word of a sentence stretched 1.5x.
    fn word_shaped_durations(rng: &mut crate::rng::Rng, words: usize) -> Vec<usize> {
        let mut d = Vec::new();
        for w in 0..words {
            let stretch = w + 1 == words || rng.random_bool(0.15);
            for _ in 0..rng.random_range(1..=4) {
                let base = if rng.random_bool(0.4) { 8 } else { 4 };
                d.push(if stretch { base * 3 / 2 } else { base });
            }
            d.push(0);
        }
        d
    }

    /// Independent f64 evaluation of the guardband rule: owner by span, window
    /// from the g-th phone before to the g-th phone after, zero-length entries free.
    fn windowed_oracle(enc: &Matrix<f32>, d: &[usize], g: usize) -> Vec<Vec<f64>> {
        let n = d.len();
        let mut start = vec![0usize; n];
        for i in 1..n {
            start[i] = start[i - 1] + d[i - 1];
        }
        let mut frames = Vec::new();
        for o in 0..n {
            let (mut lo, mut hi, mut seen) = (o, o, 0);
            while hi + 1 < n && seen < g {
                hi += 1;
                seen += usize::from(d[hi] > 0);
            }
            seen = 0;
            while lo > 0 && seen < g {
                lo -= 1;
                seen += usize::from(d[lo] > 0);
            }
            for t in start[o]..start[o] + d[o] {
                let logw: Vec<f64> = (lo..=hi)
                    .map(|i| {
                        let c = start[i] as f64 + d[i] as f64 / 2.0;
                        let s = (d[i] as f64 / 3.0).max(0.1);
                        -(t as f64 + 0.5 - c).powi(2) / (2.0 * s * s)
                    })
                    .collect();
                let top = logw.iter().cloned().fold(f64::MIN, f64::max);
                let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
                let z: f64 = w.iter().sum();
                frames.push(
                    (0..enc.cols())
                        .map(|c| (lo..=hi).zip(&w).map(|(i, wi)| wi / z * f64::from(enc.get(i, c))).sum())
                        .collect(),
                );
            }
        }
        frames
    }

    fn stream_all(enc: &Matrix<f32>, d: &[usize], g: Limit) -> Matrix<f32> {
        let s = default_sigmas(d);
        let mut st = UpsampleStream::new(enc.cols(), g);
        let mut got = Matrix::empty(enc.cols());
        for i in 0..d.len() {
            got.append(&st.push(&enc.slice_rows(i, i + 1), &d[i..i + 1], &s[i..i + 1]).unwrap()).unwrap();
            if let Limit::Finite(g) = g {
                assert!(st.buffered_phones() <= 2 * g + 1);
            }
        }
        got.append(&st.flush().unwrap()).unwrap();
        assert_eq!(st.buffered(), 0);
        got
    }

    #[test]
    fn finite_guardband_follows_window_rule() {
        let mut rng = seeded(9);
        for trial in 0..100 {
            let words = rng.random_range(1..12);
            let d = word_shaped_durations(&mut rng, words);
            let enc = random(d.len(), 3, 100 + trial).map(f32::tanh);
            for g in [0usize, 1, 2, 3] {
                let got = stream_all(&enc, &d, Limit::Finite(g));
                let want = windowed_oracle(&enc, &d, g);
                assert_eq!(got.rows(), want.len());
                for (t, row) in want.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        assert!((f64::from(got.get(t, c)) - v).abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn two_phone_guardband_is_within_tolerance_for_unstretched_words() {
        let mut rng = seeded(10);
        for trial in 0..200 {
            let n = rng.random_range(1..64);
            let d: Vec<usize> = (0..n).map(|_| [0usize, 4, 4, 8][rng.random_range(0..4)]).collect();
            let enc = random(n, 3, 500 + trial).map(f32::tanh);
            let offline = gaussian_upsample(&enc, &d, &default_sigmas(&d)).unwrap();
            let got = stream_all(&enc, &d, Limit::Finite(2));
            assert!(got.max_abs_diff(&offline).unwrap() <= 1e-3);
        }
    }
}
