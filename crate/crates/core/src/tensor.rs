//! Row-major dense matrices and the handful of kernels the models need.
//!
//! Every kernel computes each output row independently and accumulates in
//! ascending index order. Evaluating a single row therefore gives bit-identical
//! results to evaluating it as part of a larger batch, which is what lets the
//! streaming paths be compared exactly against the offline ones.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

use crate::{Error, Result};

pub trait Scalar: Float + Sum + Debug + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Matrix<T = f32> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} values, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn empty(cols: usize) -> Self {
        Self::zeros(0, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        if row.len() != self.cols {
            return Err(Error::Shape(format!(
                "pushing a row of {} into a matrix with {} columns",
                row.len(),
                self.cols
            )));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn append(&mut self, other: &Matrix<T>) -> Result<()> {
        if other.rows == 0 {
            return Ok(());
        }
        if self.rows == 0 && self.cols == 0 {
            self.cols = other.cols;
        }
        if other.cols != self.cols {
            return Err(Error::Shape(format!(
                "appending {} columns to {}",
                other.cols, self.cols
            )));
        }
        self.data.extend_from_slice(&other.data);
        self.rows += other.rows;
        Ok(())
    }

    /// Rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix<T> {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> Option<T> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}

fn check_inner<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, what: &str) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "{what}: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// `a · b`.
pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    check_inner(a, b, "matmul")?;
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let o = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a_row.iter().enumerate() {
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (oj, &bkj) in o.iter_mut().zip(b_row) {
                *oj = *oj + aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `vec · b` for a single row.
pub fn vecmat<T: Scalar>(v: &[T], b: &Matrix<T>, out: &mut [T]) {
    debug_assert_eq!(v.len(), b.rows);
    debug_assert_eq!(out.len(), b.cols);
    for (k, &vk) in v.iter().enumerate() {
        let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
        for (oj, &bkj) in out.iter_mut().zip(b_row) {
            *oj = *oj + vk * bkj;
        }
    }
}

/// `aᵀ · b`, accumulated into `out`.
pub fn matmul_tn_acc<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    debug_assert_eq!(a.rows, b.rows);
    debug_assert_eq!(out.shape(), (a.cols, b.cols));
    for i in 0..a.rows {
        let b_row = b.row(i);
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            let o = &mut out.data[k * b.cols..(k + 1) * b.cols];
            for (oj, &bij) in o.iter_mut().zip(b_row) {
                *oj = *oj + aik * bij;
            }
        }
    }
}

/// `a · bᵀ`.
pub fn matmul_nt<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    debug_assert_eq!(a.cols, b.cols);
    let mut out = Matrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(a_row, b.row(j));
        }
    }
    out
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn add<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("add {:?} + {:?}", a.shape(), b.shape())));
    }
    Ok(Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect(),
    })
}

/// Adds a `1 x cols` bias to every row.
pub fn add_row<T: Scalar>(a: &Matrix<T>, bias: &Matrix<T>) -> Result<Matrix<T>> {
    if bias.rows != 1 || bias.cols != a.cols {
        return Err(Error::Shape(format!(
            "row bias {:?} for {:?}",
            bias.shape(),
            a.shape()
        )));
    }
    let mut out = a.clone();
    for i in 0..out.rows {
        for (o, &b) in out.row_mut(i).iter_mut().zip(bias.as_slice()) {
            *o = *o + b;
        }
    }
    Ok(out)
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-row layer normalization; returns `(output, normalized, inverse std)`.
pub fn layer_norm<T: Scalar>(
    x: &Matrix<T>,
    gamma: &Matrix<T>,
    beta: &Matrix<T>,
) -> Result<(Matrix<T>, Matrix<T>, Vec<T>)> {
    if gamma.shape() != (1, x.cols) || beta.shape() != (1, x.cols) {
        return Err(Error::Shape(format!(
            "layer norm gain {:?} / bias {:?} for {:?}",
            gamma.shape(),
            beta.shape(),
            x.shape()
        )));
    }
    let n = T::from_f64(x.cols as f64);
    let eps = T::from_f64(LAYER_NORM_EPS);
    let mut out = Matrix::zeros(x.rows, x.cols);
    let mut xhat = Matrix::zeros(x.rows, x.cols);
    let mut inv_std = Vec::with_capacity(x.rows);
    for i in 0..x.rows {
        let row = x.row(i);
        let mean = row.iter().fold(T::zero(), |a, &v| a + v) / n;
        let var = row.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
        let inv = T::one() / (var + eps).sqrt();
        inv_std.push(inv);
        for j in 0..x.cols {
            let h = (row[j] - mean) * inv;
            xhat.data[i * x.cols + j] = h;
            out.data[i * x.cols + j] = h * gamma.data[j] + beta.data[j];
        }
    }
    Ok((out, xhat, inv_std))
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// Tanh-approximated GELU.
pub fn gelu<T: Scalar>(x: T) -> T {
    let c = T::from_f64(GELU_C);
    let k = T::from_f64(0.044_715);
    let half = T::from_f64(0.5);
    half * x * (T::one() + (c * (x + k * x * x * x)).tanh())
}

pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::from_f64(GELU_C);
    let k = T::from_f64(0.044_715);
    let half = T::from_f64(0.5);
    let three = T::from_f64(3.0);
    let inner = c * (x + k * x * x * x);
    let t = inner.tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + three * k * x * x)
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Numerically stable log-softmax of one row.
pub fn log_softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let sum = row.iter().fold(T::zero(), |a, &v| a + (v - max).exp());
    let lse = max + sum.ln();
    row.iter().map(|&v| v - lse).collect()
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn matmul_small() {
        let a = m(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let b = m(3, 2, &[7., 8., 9., 10., 11., 12.]);
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[58., 64., 139., 154.]);
        assert!(matmul(&a, &a).is_err());
    }

    #[test]
    fn single_row_matches_batch_bitwise() {
        let a = m(3, 4, &[0.1, -0.3, 0.7, 1.1, 2.2, 0.5, -0.9, 0.33, 0.01, 0.02, 0.03, 0.04]);
        let b = m(4, 2, &[0.3, -0.7, 1.9, 0.4, -0.2, 0.8, 0.6, 0.55]);
        let full = matmul(&a, &b).unwrap();
        for i in 0..3 {
            let one = matmul(&a.slice_rows(i, i + 1), &b).unwrap();
            assert_eq!(one.row(0), full.row(i));
        }
    }

    #[test]
    fn transposed_products_agree() {
        let a = m(3, 2, &[1., 2., 3., 4., 5., 6.]);
        let b = m(3, 2, &[0.5, 1.5, -1., 2., 0., 1.]);
        let mut tn = Matrix::zeros(2, 2);
        matmul_tn_acc(&a, &b, &mut tn);
        // aᵀb by hand
        assert_eq!(tn.as_slice(), &[-2.5, 12.5, -3.0, 17.0]);
        let nt = matmul_nt(&a, &b);
        assert_eq!(nt.get(0, 0), 3.5);
        assert_eq!(nt.get(2, 1), 7.0);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = m(2, 4, &[1., 2., 3., 4., -1., 0., 0., 5.]);
        let g = m(1, 4, &[1.; 4]);
        let b = m(1, 4, &[0.; 4]);
        let (y, _, _) = layer_norm(&x, &g, &b).unwrap();
        for r in y.iter_rows() {
            let mean: f64 = r.iter().sum::<f64>() / 4.0;
            let var: f64 = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn gelu_derivative_matches_differences() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0f32]), 0);
    }
}
