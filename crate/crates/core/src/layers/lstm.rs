//! Unidirectional LSTM and the chunked bidirectional variant.
//!
//! In the chunked BLSTM the forward direction carries state across the whole
//! sequence while the backward direction restarts from zero at every chunk
//! boundary and reads only inside its chunk, so no output depends on inputs
//! past the end of its own chunk.

use crate::tensor::{sigmoid, vecmat, Matrix};
use crate::{Error, Limit, Result};

/// Gate layout along the `4 * hidden` axis: input, forget, cell, output.
#[derive(Clone, Debug)]
pub struct LstmWeights {
    pub w_x: Matrix<f32>,
    pub w_h: Matrix<f32>,
    pub bias: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f32>,
    pub c: Vec<f32>,
}

impl LstmWeights {
    pub fn new(w_x: Matrix<f32>, w_h: Matrix<f32>, bias: Vec<f32>) -> Result<Self> {
        let hidden = w_h.rows();
        if w_h.cols() != 4 * hidden || w_x.cols() != 4 * hidden || bias.len() != 4 * hidden {
            return Err(Error::Shape(format!(
                "LSTM weights x {:?}, h {:?}, bias {}",
                w_x.shape(),
                w_h.shape(),
                bias.len()
            )));
        }
        Ok(Self { w_x, w_h, bias })
    }

    pub fn input_size(&self) -> usize {
        self.w_x.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w_h.rows()
    }

    pub fn zero_state(&self) -> LstmState {
        LstmState {
            h: vec![0.0; self.hidden()],
            c: vec![0.0; self.hidden()],
        }
    }

    pub fn step(&self, state: &mut LstmState, x: &[f32]) {
        let hd = self.hidden();
        let mut z = self.bias.clone();
        vecmat(x, &self.w_x, &mut z);
        vecmat(&state.h, &self.w_h, &mut z);
        for j in 0..hd {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[hd + j]);
            let g = z[2 * hd + j].tanh();
            let o = sigmoid(z[3 * hd + j]);
            state.c[j] = f * state.c[j] + i * g;
            state.h[j] = o * state.c[j].tanh();
        }
    }

    /// Runs over `rows` in order from a zero state.
    pub fn run<'a>(&self, rows: impl Iterator<Item = &'a [f32]>) -> Vec<Vec<f32>> {
        let mut st = self.zero_state();
        rows.map(|x| {
            self.step(&mut st, x);
            st.h.clone()
        })
        .collect()
    }
}

pub fn lstm_forward(weights: &LstmWeights, x: &Matrix<f32>) -> Result<Matrix<f32>> {
    check_input(weights, x)?;
    Matrix::from_rows(&weights.run(x.iter_rows())).or_else(|_| Ok(Matrix::empty(weights.hidden())))
}

fn check_input(weights: &LstmWeights, x: &Matrix<f32>) -> Result<()> {
    if !x.is_empty() && x.cols() != weights.input_size() {
        return Err(Error::Shape(format!(
            "LSTM input has {} features, expects {}",
            x.cols(),
            weights.input_size()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct BlstmWeights {
    pub forward: LstmWeights,
    pub backward: LstmWeights,
}

impl BlstmWeights {
    pub fn output_size(&self) -> usize {
        self.forward.hidden() + self.backward.hidden()
    }

    pub fn input_size(&self) -> usize {
        self.forward.input_size()
    }
}

fn chunk_len(chunk: Limit, n: usize) -> Result<usize> {
    match chunk {
        Limit::Finite(0) => Err(Error::Invalid("chunk size must be >= 1".into())),
        Limit::Finite(c) => Ok(c),
        Limit::Infinite => Ok(n.max(1)),
    }
}

/// Backward direction over one chunk, restarted from zero state.
fn backward_chunk(weights: &LstmWeights, rows: &[Vec<f32>]) -> Vec<Vec<f32>> {
    let mut out = weights.run(rows.iter().rev().map(Vec::as_slice));
    out.reverse();
    out
}

fn concat(fwd: &[Vec<f32>], bwd: &[Vec<f32>], out: &mut Matrix<f32>) -> Result<()> {
    for (f, b) in fwd.iter().zip(bwd) {
        let mut row = f.clone();
        row.extend_from_slice(b);
        out.push_row(&row)?;
    }
    Ok(())
}

pub fn chunked_blstm_forward(weights: &BlstmWeights, x: &Matrix<f32>, chunk: Limit) -> Result<Matrix<f32>> {
    check_input(&weights.forward, x)?;
    let n = x.rows();
    let c = chunk_len(chunk, n)?;
    let rows: Vec<Vec<f32>> = x.iter_rows().map(<[f32]>::to_vec).collect();
    let fwd = weights.forward.run(rows.iter().map(Vec::as_slice));
    let mut out = Matrix::empty(weights.output_size());
    for (ci, block) in rows.chunks(c).enumerate() {
        let bwd = backward_chunk(&weights.backward, block);
        concat(&fwd[ci * c..ci * c + block.len()], &bwd, &mut out)?;
    }
    Ok(out)
}

/// Streaming state: the forward LSTM state plus the inputs of the chunk
/// currently being filled (never more than `chunk` rows).
#[derive(Clone, Debug)]
pub struct ChunkedBlstmStream {
    chunk: Limit,
    forward: LstmState,
    pending: Vec<Vec<f32>>,
    flushed: bool,
}

impl ChunkedBlstmStream {
    pub fn new(weights: &BlstmWeights, chunk: Limit) -> Result<Self> {
        chunk_len(chunk, 1)?;
        Ok(Self {
            chunk,
            forward: weights.forward.zero_state(),
            pending: Vec::new(),
            flushed: false,
        })
    }

    pub fn buffered(&self) -> usize {
        self.pending.len()
    }

    fn emit(&mut self, weights: &BlstmWeights, out: &mut Matrix<f32>) -> Result<()> {
        let block = std::mem::take(&mut self.pending);
        let fwd: Vec<Vec<f32>> = block
            .iter()
            .map(|x| {
                weights.forward.step(&mut self.forward, x);
                self.forward.h.clone()
            })
            .collect();
        let bwd = backward_chunk(&weights.backward, &block);
        concat(&fwd, &bwd, out)
    }

    pub fn push(&mut self, weights: &BlstmWeights, inputs: &Matrix<f32>) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("chunked BLSTM stream"));
        }
        check_input(&weights.forward, inputs)?;
        let mut out = Matrix::empty(weights.output_size());
        for row in inputs.iter_rows() {
            self.pending.push(row.to_vec());
            if Some(self.pending.len()) == self.chunk.finite() {
                self.emit(weights, &mut out)?;
            }
        }
        Ok(out)
    }

    pub fn flush(&mut self, weights: &BlstmWeights) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("chunked BLSTM stream"));
        }
        self.flushed = true;
        let mut out = Matrix::empty(weights.output_size());
        if !self.pending.is_empty() {
            self.emit(weights, &mut out)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normal};

    fn random_lstm(input: usize, hidden: usize, rng: &mut crate::rng::Rng) -> LstmWeights {
        let mut m = |r: usize, c: usize| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| standard_normal(rng) as f32 * 0.4).collect()).unwrap()
        };
        let w_x = m(input, 4 * hidden);
        let w_h = m(hidden, 4 * hidden);
        let bias = m(1, 4 * hidden).into_vec();
        LstmWeights::new(w_x, w_h, bias).unwrap()
    }

    fn random_blstm(input: usize, hidden: usize, seed: u64) -> BlstmWeights {
        let mut rng = seeded(seed);
        BlstmWeights {
            forward: random_lstm(input, hidden, &mut rng),
            backward: random_lstm(input, hidden, &mut rng),
        }
    }

    fn random_input(n: usize, d: usize, seed: u64) -> Matrix<f32> {
        let mut rng = seeded(seed);
        Matrix::from_vec(n, d, (0..n * d).map(|_| standard_normal(&mut rng) as f32).collect()).unwrap()
    }

    /// Unrestricted BLSTM written directly from the recurrence.
    fn full_blstm(w: &BlstmWeights, x: &Matrix<f32>) -> Matrix<f32> {
        let fwd = w.forward.run(x.iter_rows());
        let mut bwd = w.backward.run((0..x.rows()).rev().map(|i| x.row(i)));
        bwd.reverse();
        let rows: Vec<Vec<f32>> = fwd.into_iter().zip(bwd).map(|(mut f, b)| {
            f.extend(b);
            f
        }).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_chunk_is_unrestricted_blstm() {
        let w = random_blstm(3, 4, 1);
        let x = random_input(6, 3, 2);
        let want = full_blstm(&w, &x);
        assert_eq!(chunked_blstm_forward(&w, &x, Limit::Finite(6)).unwrap(), want);
        assert_eq!(chunked_blstm_forward(&w, &x, Limit::Finite(50)).unwrap(), want);
        assert_eq!(chunked_blstm_forward(&w, &x, Limit::Infinite).unwrap(), want);
    }

    #[test]
    fn chunks_isolate_future_inputs() {
        let w = random_blstm(3, 4, 3);
        let x = random_input(10, 3, 4);
        let base = chunked_blstm_forward(&w, &x, Limit::Finite(4)).unwrap();
        let mut y = x.clone();
        y.set(5, 1, 9.0);
        let moved = chunked_blstm_forward(&w, &y, Limit::Finite(4)).unwrap();
        for t in 0..4 {
            assert_eq!(base.row(t), moved.row(t));
        }
        assert_ne!(base.row(4), moved.row(4));
    }

    #[test]
    fn unit_chunks_make_backward_pointwise() {
        let w = random_blstm(2, 3, 5);
        let x = random_input(5, 2, 6);
        let y = chunked_blstm_forward(&w, &x, Limit::Finite(1)).unwrap();
        for t in 0..5 {
            let single = w.backward.run(std::iter::once(x.row(t)));
            assert_eq!(&y.row(t)[3..], single[0].as_slice());
        }
    }

    #[test]
    fn streaming_buffers_until_chunk_completes() {
        let w = random_blstm(2, 3, 7);
        let x = random_input(6, 2, 8);
        let mut st = ChunkedBlstmStream::new(&w, Limit::Finite(4)).unwrap();
        assert_eq!(st.push(&w, &x.slice_rows(0, 3)).unwrap().rows(), 0);
        assert_eq!(st.push(&w, &x.slice_rows(3, 4)).unwrap().rows(), 4);
        assert_eq!(st.push(&w, &x.slice_rows(4, 6)).unwrap().rows(), 0);
        assert_eq!(st.flush(&w).unwrap().rows(), 2);
        assert!(st.push(&w, &x.slice_rows(0, 1)).is_err());
    }

    #[test]
    fn streamed_equals_offline() {
        let w = random_blstm(3, 5, 9);
        for n in [1usize, 4, 7, 13] {
            let x = random_input(n, 3, n as u64);
            for chunk in [Limit::Finite(1), Limit::Finite(4), Limit::Infinite] {
                let offline = chunked_blstm_forward(&w, &x, chunk).unwrap();
                let mut st = ChunkedBlstmStream::new(&w, chunk).unwrap();
                let mut got = Matrix::empty(10);
                for i in 0..n {
                    got.append(&st.push(&w, &x.slice_rows(i, i + 1)).unwrap()).unwrap();
                    assert!(st.buffered() <= chunk.finite().unwrap_or(usize::MAX));
                }
                got.append(&st.flush(&w).unwrap()).unwrap();
                assert_eq!(got, offline, "n={n} chunk={chunk}");
            }
        }
    }

    #[test]
    fn zero_chunk_is_rejected() {
        let w = random_blstm(2, 2, 1);
        assert!(chunked_blstm_forward(&w, &random_input(3, 2, 1), Limit::Finite(0)).is_err());
    }
}
