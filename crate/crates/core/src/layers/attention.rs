//! Masked multi-head scaled dot-product attention.

use crate::mask::AttentionMask;
use crate::tensor::{matmul, Matrix, Scalar};
use crate::{Error, Result};

/// Learned additive score bias indexed by a per-(row, col) bucket.
#[derive(Clone, Copy)]
pub struct ScoreBias<'a, T> {
    /// `heads x buckets`
    pub table: &'a Matrix<T>,
    /// Bucket of each `(row, col)` pair, row-major.
    pub bucket: &'a [usize],
}

/// Result of [`attend`]: the merged head outputs plus the per-head attention
/// probabilities (`heads` blocks of `rows x cols`, zero where masked), which
/// the backward pass needs.
pub struct Attended<T> {
    pub output: Matrix<T>,
    pub probs: Vec<T>,
}

/// Core attention without projections. `q` is `n x d`, `k` and `v` are
/// `m x d`; each head works on a contiguous `d / heads` slice. Disallowed keys
/// are skipped entirely (the `-inf` score convention), so a row's result only
/// ever reads the keys it is allowed to see.
pub fn attend<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    heads: usize,
    mask: &AttentionMask,
    bias: Option<ScoreBias<'_, T>>,
) -> Result<Attended<T>> {
    let (n, d) = q.shape();
    let m = k.rows();
    if k.cols() != d || v.shape() != (m, d) {
        return Err(Error::Shape(format!(
            "attention q {:?}, k {:?}, v {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    if heads == 0 || d % heads != 0 {
        return Err(Error::Invalid(format!("{d} channels do not split into {heads} heads")));
    }
    if mask.rows() != n || mask.cols() != m {
        return Err(Error::Shape(format!(
            "mask {}x{} for {n} queries and {m} keys",
            mask.rows(),
            mask.cols()
        )));
    }
    if let Some(b) = &bias {
        if b.table.rows() != heads || b.bucket.len() != n * m {
            return Err(Error::Shape("score bias table/buckets".into()));
        }
    }
    if let Some(row) = mask.first_empty_row() {
        return Err(Error::EmptyMaskRow { row });
    }

    let dh = d / heads;
    let scale = T::one() / T::from_f64(dh as f64).sqrt();
    let mut output = Matrix::zeros(n, d);
    let mut probs = vec![T::zero(); heads * n * m];
    let mut scores = vec![T::zero(); m];
    for h in 0..heads {
        let lo = h * dh;
        let hi = lo + dh;
        for i in 0..n {
            let qi = &q.row(i)[lo..hi];
            let allow = mask.row(i);
            let mut max = T::neg_infinity();
            for j in 0..m {
                if !allow[j] {
                    continue;
                }
                let mut s = crate::tensor::dot(qi, &k.row(j)[lo..hi]) * scale;
                if let Some(b) = &bias {
                    s = s + b.table.get(h, b.bucket[i * m + j]);
                }
                scores[j] = s;
                if s > max {
                    max = s;
                }
            }
            let mut sum = T::zero();
            for j in 0..m {
                if allow[j] {
                    let e = (scores[j] - max).exp();
                    scores[j] = e;
                    sum = sum + e;
                }
            }
            let p_row = &mut probs[(h * n + i) * m..(h * n + i + 1) * m];
            let out = &mut output.row_mut(i)[lo..hi];
            for j in 0..m {
                if !allow[j] {
                    continue;
                }
                let p = scores[j] / sum;
                p_row[j] = p;
                for (o, &vj) in out.iter_mut().zip(&v.row(j)[lo..hi]) {
                    *o = *o + p * vj;
                }
            }
        }
    }
    Ok(Attended { output, probs })
}

/// Projection weights for a full multi-head attention block (no biases).
#[derive(Clone, Debug)]
pub struct AttentionWeights<T> {
    pub wq: Matrix<T>,
    pub wk: Matrix<T>,
    pub wv: Matrix<T>,
    pub wo: Matrix<T>,
    pub heads: usize,
}

impl<T: Scalar> AttentionWeights<T> {
    pub fn identity(dim: usize, heads: usize) -> Self {
        let mut eye = Matrix::zeros(dim, dim);
        for i in 0..dim {
            eye.set(i, i, T::one());
        }
        Self {
            wq: eye.clone(),
            wk: eye.clone(),
            wv: eye.clone(),
            wo: eye,
            heads,
        }
    }
}

/// Projects queries/keys/values, attends under `mask`, merges heads and
/// applies the output projection.
pub fn masked_attention<T: Scalar>(
    queries: &Matrix<T>,
    keys: &Matrix<T>,
    values: &Matrix<T>,
    mask: &AttentionMask,
    weights: &AttentionWeights<T>,
) -> Result<Matrix<T>> {
    let q = matmul(queries, &weights.wq)?;
    let k = matmul(keys, &weights.wk)?;
    let v = matmul(values, &weights.wv)?;
    let ctx = attend(&q, &k, &v, weights.heads, mask, None)?;
    matmul(&ctx.output, &weights.wo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{build_causal_mask, build_encoder_mask};
    use crate::rng::{seeded, standard_normal};

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f32> {
        let mut rng = seeded(seed);
        let data = (0..rows * cols).map(|_| standard_normal(&mut rng) as f32).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn random_weights(d: usize, heads: usize, seed: u64) -> AttentionWeights<f32> {
        AttentionWeights {
            wq: random(d, d, seed),
            wk: random(d, d, seed + 1),
            wv: random(d, d, seed + 2),
            wo: random(d, d, seed + 3),
            heads,
        }
    }

    /// Plain softmax attention over every key, written independently.
    fn reference(q: &Matrix<f32>, k: &Matrix<f32>, v: &Matrix<f32>, heads: usize) -> Matrix<f32> {
        let (n, d) = q.shape();
        let dh = d / heads;
        let mut out = Matrix::zeros(n, d);
        for h in 0..heads {
            for i in 0..n {
                let s: Vec<f64> = (0..k.rows())
                    .map(|j| {
                        (0..dh)
                            .map(|c| f64::from(q.get(i, h * dh + c)) * f64::from(k.get(j, h * dh + c)))
                            .sum::<f64>()
                            / (dh as f64).sqrt()
                    })
                    .collect();
                let mx = s.iter().cloned().fold(f64::MIN, f64::max);
                let z: f64 = s.iter().map(|x| (x - mx).exp()).sum();
                for c in 0..dh {
                    let val: f64 = (0..k.rows())
                        .map(|j| (s[j] - mx).exp() / z * f64::from(v.get(j, h * dh + c)))
                        .sum();
                    out.set(i, h * dh + c, val as f32);
                }
            }
        }
        out
    }

    #[test]
    fn all_true_mask_is_standard_attention() {
        let x = random(5, 8, 1);
        let w = random_weights(8, 2, 10);
        let mask = build_encoder_mask(&[0; 5]).unwrap();
        let got = masked_attention(&x, &x, &x, &mask, &w).unwrap();
        let q = matmul(&x, &w.wq).unwrap();
        let k = matmul(&x, &w.wk).unwrap();
        let v = matmul(&x, &w.wv).unwrap();
        let want = matmul(&reference(&q, &k, &v, 2), &w.wo).unwrap();
        assert!(got.max_abs_diff(&want).unwrap() < 1e-4);
    }

    #[test]
    fn diagonal_mask_returns_values() {
        let x = random(4, 6, 3);
        let w = AttentionWeights::identity(6, 3);
        let rows: Vec<Vec<bool>> = (0..4).map(|i| (0..4).map(|j| i == j).collect()).collect();
        let diag = AttentionMask::from_rows(&rows).unwrap();
        let out = masked_attention(&x, &x, &x, &diag, &w).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn masked_keys_do_not_leak() {
        let q = random(3, 4, 5);
        let k = random(3, 4, 6);
        let mut v = random(3, 4, 7);
        let mask = build_causal_mask(3);
        let a = attend(&q, &k, &v, 2, &mask, None).unwrap().output;
        // key 2 is only visible to row 2
        for c in 0..4 {
            v.set(2, c, 0.0);
        }
        let b = attend(&q, &k, &v, 2, &mask, None).unwrap().output;
        assert_eq!(a.row(0), b.row(0));
        assert_eq!(a.row(1), b.row(1));
    }

    #[test]
    fn rows_without_keys_are_rejected() {
        let q = random(1, 4, 1);
        let rows = vec![vec![false, false]];
        let mask = AttentionMask::from_rows(&rows).unwrap();
        let k = random(2, 4, 2);
        assert!(matches!(
            attend(&q, &k, &k, 2, &mask, None),
            Err(Error::EmptyMaskRow { row: 0 })
        ));
    }
}
