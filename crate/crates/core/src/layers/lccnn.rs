//! Lookahead-constrained convolution stacks.
//!
//! A stack of odd-width 1-D convolutions whose kernels are skewed so that the
//! total right receptive extent never exceeds a budget. Layer `l` reads inputs
//! `t - left_l ..= t + right_l` with `left_l + right_l = k_l - 1`.

use std::collections::VecDeque;

use crate::tensor::Matrix;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, v: f32) -> f32 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewAllocation {
    kernels: Vec<usize>,
    right: Vec<usize>,
}

impl SkewAllocation {
    pub fn kernels(&self) -> &[usize] {
        &self.kernels
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn left(&self, layer: usize) -> usize {
        self.kernels[layer] - 1 - self.right[layer]
    }

    pub fn total_right(&self) -> usize {
        self.right.iter().sum()
    }

    pub fn total_left(&self) -> usize {
        (0..self.kernels.len()).map(|l| self.left(l)).sum()
    }

    pub fn layers(&self) -> usize {
        self.kernels.len()
    }
}

fn check_kernels(kernels: &[usize]) -> Result<()> {
    if let Some(k) = kernels.iter().find(|&&k| k == 0 || k % 2 == 0) {
        return Err(Error::Invalid(format!("kernel width {k} must be odd and >= 1")));
    }
    Ok(())
}

/// Greedy front-to-back allocation: each layer takes as much of the remaining
/// right-extent budget as its symmetric half-width allows.
pub fn allocate_skew(kernels: &[usize], budget: usize) -> Result<SkewAllocation> {
    check_kernels(kernels)?;
    let mut remaining = budget;
    let right = kernels
        .iter()
        .map(|&k| {
            let r = ((k - 1) / 2).min(remaining);
            remaining -= r;
            r
        })
        .collect();
    Ok(SkewAllocation {
        kernels: kernels.to_vec(),
        right,
    })
}

/// One convolution layer. Taps are stored as a `(kernel * in) x out` matrix;
/// row `m * in + c` holds the weights from input channel `c` at tap `m`.
#[derive(Clone, Debug)]
pub struct ConvLayer {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub taps: Matrix<f32>,
    pub bias: Option<Vec<f32>>,
    pub activation: Activation,
}

impl ConvLayer {
    pub fn new(taps: Matrix<f32>, kernel: usize, bias: Option<Vec<f32>>, activation: Activation) -> Result<Self> {
        check_kernels(&[kernel])?;
        if taps.rows() % kernel != 0 {
            return Err(Error::Shape(format!(
                "{} tap rows is not a multiple of kernel {kernel}",
                taps.rows()
            )));
        }
        let out_channels = taps.cols();
        if bias.as_ref().is_some_and(|b| b.len() != out_channels) {
            return Err(Error::Shape("conv bias length".into()));
        }
        Ok(Self {
            kernel,
            in_channels: taps.rows() / kernel,
            out_channels,
            taps,
            bias,
            activation,
        })
    }

    /// Output at one position given the tap inputs (`None` = zero padding).
    fn point<'a>(&self, inputs: impl Iterator<Item = Option<&'a [f32]>>) -> Vec<f32> {
        let mut acc = self
            .bias
            .clone()
            .unwrap_or_else(|| vec![0.0; self.out_channels]);
        for (m, x) in inputs.enumerate() {
            let Some(x) = x else { continue };
            for (c, &xv) in x.iter().enumerate() {
                let w = self.taps.row(m * self.in_channels + c);
                for (a, &wv) in acc.iter_mut().zip(w) {
                    *a += xv * wv;
                }
            }
        }
        for a in &mut acc {
            *a = self.activation.apply(*a);
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct LcCnn {
    pub layers: Vec<ConvLayer>,
    pub allocation: SkewAllocation,
}

impl LcCnn {
    pub fn new(layers: Vec<ConvLayer>, allocation: SkewAllocation) -> Result<Self> {
        if layers.len() != allocation.layers() {
            return Err(Error::Shape(format!(
                "{} layers for an allocation over {}",
                layers.len(),
                allocation.layers()
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.kernel != allocation.kernels()[l] {
                return Err(Error::Shape(format!("layer {l} kernel differs from allocation")));
            }
            if l > 0 && layers[l - 1].out_channels != layer.in_channels {
                return Err(Error::Shape(format!("layer {l} input channels")));
            }
        }
        Ok(Self { layers, allocation })
    }

    pub fn in_channels(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_channels)
    }

    pub fn out_channels(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_channels)
    }

    /// Offline evaluation over the whole sequence with zero padding.
    pub fn forward(&self, x: &Matrix<f32>) -> Result<Matrix<f32>> {
        if x.cols() != self.in_channels() && !x.is_empty() {
            return Err(Error::Shape(format!(
                "input has {} channels, stack expects {}",
                x.cols(),
                self.in_channels()
            )));
        }
        let mut cur = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let left = self.allocation.left(l) as isize;
            let n = cur.rows() as isize;
            let mut out = Matrix::empty(layer.out_channels);
            for t in 0..n {
                let taps = (0..layer.kernel as isize).map(|m| {
                    let idx = t - left + m;
                    (0..n).contains(&idx).then(|| cur.row(idx as usize))
                });
                out.push_row(&layer.point(taps))?;
            }
            cur = out;
        }
        Ok(cur)
    }

    pub fn stream(&self) -> LcCnnStream {
        LcCnnStream {
            buffers: (0..self.layers.len()).map(|_| LayerBuffer::default()).collect(),
            flushed: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct LayerBuffer {
    inputs: VecDeque<Vec<f32>>,
    /// Global index of `inputs[0]`.
    first: usize,
    received: usize,
    emitted: usize,
}

impl LayerBuffer {
    fn ready(&self, right: usize, flushing: bool) -> bool {
        self.emitted < self.received && (flushing || self.emitted + right < self.received)
    }

    fn get(&self, idx: isize) -> Option<&[f32]> {
        if idx < self.first as isize || idx >= self.received as isize {
            return None;
        }
        Some(&self.inputs[idx as usize - self.first])
    }
}

/// Streaming state of an [`LcCnn`]. Holds at most `left_l + right_l + 1`
/// inputs per layer.
#[derive(Clone, Debug)]
pub struct LcCnnStream {
    buffers: Vec<LayerBuffer>,
    flushed: bool,
}

impl LcCnnStream {
    /// Pushes new input rows; returns every output position that has become
    /// computable (position `t` needs input `t + total_right`).
    pub fn push(&mut self, cnn: &LcCnn, inputs: &Matrix<f32>) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("LC-CNN stream"));
        }
        if !inputs.is_empty() && inputs.cols() != cnn.in_channels() {
            return Err(Error::Shape(format!(
                "input has {} channels, stack expects {}",
                inputs.cols(),
                cnn.in_channels()
            )));
        }
        self.run(cnn, inputs.iter_rows().map(<[f32]>::to_vec).collect(), false)
    }

    /// Ends the stream: emits the remaining outputs with zero right padding.
    pub fn flush(&mut self, cnn: &LcCnn) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("LC-CNN stream"));
        }
        self.flushed = true;
        self.run(cnn, Vec::new(), true)
    }

    pub fn is_flushed(&self) -> bool {
        self.flushed
    }

    /// Rows currently held across all layer buffers.
    pub fn buffered(&self) -> usize {
        self.buffers.iter().map(|b| b.inputs.len()).sum()
    }

    fn run(&mut self, cnn: &LcCnn, mut carry: Vec<Vec<f32>>, flushing: bool) -> Result<Matrix<f32>> {
        for (l, layer) in cnn.layers.iter().enumerate() {
            let right = cnn.allocation.right()[l];
            let left = cnn.allocation.left(l);
            let buf = &mut self.buffers[l];
            for row in carry.drain(..) {
                buf.inputs.push_back(row);
                buf.received += 1;
            }
            let mut produced = Vec::new();
            while buf.ready(right, flushing) {
                let t = buf.emitted as isize;
                let taps = (0..layer.kernel as isize).map(|m| buf.get(t - left as isize + m));
                produced.push(layer.point(taps));
                buf.emitted += 1;
            }
            // keep only what the next output still reads on the left
            let keep_from = buf.emitted.saturating_sub(left);
            while buf.first < keep_from {
                buf.inputs.pop_front();
                buf.first += 1;
            }
            if flushing {
                buf.inputs.clear();
                buf.first = buf.received;
            }
            carry = produced;
        }
        let mut out = Matrix::empty(cnn.out_channels());
        for row in carry {
            out.push_row(&row)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normal};
    use proptest::prelude::*;

    fn random_stack(kernels: &[usize], budget: usize, channels: usize, seed: u64, act: Activation) -> LcCnn {
        let alloc = allocate_skew(kernels, budget).unwrap();
        let mut rng = seeded(seed);
        let layers = kernels
            .iter()
            .map(|&k| {
                let data = (0..k * channels * channels)
                    .map(|_| standard_normal(&mut rng) as f32 * 0.5)
                    .collect();
                let taps = Matrix::from_vec(k * channels, channels, data).unwrap();
                ConvLayer::new(taps, k, None, act).unwrap()
            })
            .collect();
        LcCnn::new(layers, alloc).unwrap()
    }

    #[test]
    fn greedy_allocation_examples() {
        assert_eq!(allocate_skew(&[3, 3], 1).unwrap().right(), &[1, 0]);
        assert_eq!(allocate_skew(&[5, 5, 5], 2).unwrap().right(), &[2, 0, 0]);
        assert_eq!(allocate_skew(&[3], 5).unwrap().right(), &[1]);
        assert_eq!(allocate_skew(&[5, 5, 5, 5, 5], 2).unwrap().right(), &[2, 0, 0, 0, 0]);
        assert_eq!(allocate_skew(&[5, 5, 5], 6).unwrap().right(), &[2, 2, 2]);
        assert!(allocate_skew(&[4], 1).is_err());
        assert!(allocate_skew(&[0], 0).is_err());
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let alloc = allocate_skew(&[3, 5], 1).unwrap();
        let layers = (0..2)
            .map(|l| {
                let k = alloc.kernels()[l];
                let mut taps = Matrix::zeros(k * 2, 2);
                let centre = alloc.left(l);
                taps.set(centre * 2, 0, 1.0);
                taps.set(centre * 2 + 1, 1, 1.0);
                ConvLayer::new(taps, k, None, Activation::Identity).unwrap()
            })
            .collect();
        let cnn = LcCnn::new(layers, alloc).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![7.0, 0.0]]).unwrap();
        assert_eq!(cnn.forward(&x).unwrap(), x);
    }

    #[test]
    fn impulse_spreads_over_skewed_field() {
        let cnn = random_stack(&[3, 3], 1, 1, 4, Activation::Identity);
        assert_eq!(cnn.allocation.right(), &[1, 0]);
        let n = 12;
        let t = 6;
        let mut x = Matrix::zeros(n, 1);
        x.set(t, 0, 1.0);
        let y = cnn.forward(&x).unwrap();
        for s in 0..n {
            let nonzero = y.get(s, 0) != 0.0;
            // output s reads inputs s-3 ..= s+1, so an impulse at t reaches s in t-1 ..= t+3
            assert_eq!(nonzero, (t - 1..=t + 3).contains(&s), "position {s}");
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let cnn = random_stack(&[5, 3], 2, 3, 9, Activation::Tanh);
        let y = cnn.forward(&Matrix::zeros(7, 3)).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let cnn = random_stack(&[3], 1, 2, 1, Activation::Identity);
        assert!(cnn.forward(&Matrix::zeros(4, 3)).is_err());
        assert!(cnn.stream().push(&cnn, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn streaming_delay_rule() {
        // Σr = 1: nothing after the first push, one output after the second
        let cnn = random_stack(&[3, 3], 1, 2, 2, Activation::Identity);
        let mut st = cnn.stream();
        let row = Matrix::from_rows(&[vec![0.3, -0.1]]).unwrap();
        assert_eq!(st.push(&cnn, &row).unwrap().rows(), 0);
        assert_eq!(st.push(&cnn, &row).unwrap().rows(), 1);
        assert_eq!(st.push(&cnn, &row).unwrap().rows(), 1);
        assert_eq!(st.flush(&cnn).unwrap().rows(), 1);
        assert!(matches!(st.push(&cnn, &row), Err(Error::PushAfterFlush(_))));
    }

    #[test]
    fn streamed_equals_offline_bitwise() {
        let cnn = random_stack(&[5, 3, 5], 3, 3, 11, Activation::Tanh);
        let mut rng = seeded(5);
        let n = 23;
        let data = (0..n * 3).map(|_| standard_normal(&mut rng) as f32).collect();
        let x = Matrix::from_vec(n, 3, data).unwrap();
        let offline = cnn.forward(&x).unwrap();
        let mut st = cnn.stream();
        let mut streamed = Matrix::empty(3);
        let mut i = 0;
        for chunk in [1usize, 4, 2, 7, 3, 6] {
            let end = (i + chunk).min(n);
            streamed.append(&st.push(&cnn, &x.slice_rows(i, end)).unwrap()).unwrap();
            i = end;
        }
        streamed.append(&st.flush(&cnn).unwrap()).unwrap();
        assert_eq!(streamed, offline);
        assert_eq!(st.buffered(), 0);
    }

    proptest! {
        #[test]
        fn allocation_is_greedy_and_bounded(kernels in prop::collection::vec((0usize..4).prop_map(|h| 2 * h + 1), 1..6),
                                            budget in 0usize..12) {
            let a = allocate_skew(&kernels, budget).unwrap();
            let capacity: usize = kernels.iter().map(|k| (k - 1) / 2).sum();
            prop_assert_eq!(a.total_right(), budget.min(capacity));
            for (l, &k) in kernels.iter().enumerate() {
                prop_assert!(a.right()[l] <= (k - 1) / 2);
                prop_assert_eq!(a.left(l) + a.right()[l] + 1, k);
                // a later layer only gets budget once every earlier one is full
                if a.right()[l] < (k - 1) / 2 {
                    prop_assert!(a.right()[l + 1..].iter().all(|&r| r == 0));
                }
            }
        }

        #[test]
        fn any_chunking_matches_offline(kernels in prop::collection::vec((0usize..3).prop_map(|h| 2 * h + 1), 1..4),
                                        budget in 0usize..5, n in 1usize..20, seed in 0u64..1000,
                                        chunks in prop::collection::vec(1usize..5, 1..20)) {
            let cnn = random_stack(&kernels, budget, 2, seed, Activation::Tanh);
            let mut rng = seeded(seed + 1);
            let data = (0..n * 2).map(|_| standard_normal(&mut rng) as f32).collect();
            let x = Matrix::from_vec(n, 2, data).unwrap();
            let mut st = cnn.stream();
            let mut streamed = Matrix::empty(2);
            let mut i = 0;
            for c in chunks.iter().cycle() {
                if i == n {
                    break;
                }
                let end = (i + c).min(n);
                streamed.append(&st.push(&cnn, &x.slice_rows(i, end)).unwrap()).unwrap();
                // never more outputs than inputs minus the right budget
                prop_assert!(streamed.rows() <= end.saturating_sub(cnn.allocation.total_right()));
                i = end;
            }
            streamed.append(&st.flush(&cnn).unwrap()).unwrap();
            prop_assert_eq!(streamed, cnn.forward(&x).unwrap());
        }
    }
}
