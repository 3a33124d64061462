//! A small reverse-mode tape over [`Matrix`] values.
//!
//! Forward values are produced by the same kernels the inference paths use,
//! so a tape forward pass and a hand-rolled incremental pass agree bit for bit.

use std::collections::HashMap;

use crate::layers::attention::{attend, ScoreBias};
use crate::layers::weights::TensorFile;
use crate::mask::AttentionMask;
use crate::tensor::{add, add_row, gelu, gelu_grad, layer_norm, log_softmax, matmul, matmul_nt, matmul_tn_acc, Matrix, Scalar};
use crate::{Error, Result};

pub type ParamId = usize;

/// Named parameter matrices. Non-trainable entries are stored and saved with
/// the rest but never receive gradient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    values: Vec<Matrix<T>>,
    trainable: Vec<bool>,
    index: HashMap<String, ParamId>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            trainable: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, value: Matrix<T>, trainable: bool) -> ParamId {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        let id = self.values.len();
        self.names.push(name.to_string());
        self.values.push(value);
        self.trainable.push(trainable);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Matrix<T> {
        &self.values[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.values[id]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.trainable[id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total scalar count of trainable parameters.
    pub fn trainable_size(&self) -> usize {
        (0..self.len())
            .filter(|&i| self.trainable[i])
            .map(|i| self.values[i].as_slice().len())
            .sum()
    }

    pub fn zeros_like(&self) -> Vec<Matrix<T>> {
        self.values.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect()
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            values: self.values.iter().map(Matrix::cast).collect(),
            trainable: self.trainable.clone(),
            index: self.index.clone(),
        }
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut file = TensorFile::default();
        for (name, value) in self.names.iter().zip(&self.values) {
            file.insert(name.as_str(), value.cast()).expect("parameter names are unique and whitespace-free");
        }
        file
    }

    /// Overwrites every parameter from `file`, checking names and shapes.
    pub fn load_tensor_file(&mut self, file: &TensorFile) -> Result<()> {
        for i in 0..self.len() {
            let (r, c) = self.values[i].shape();
            let m = file.get_shaped(&self.names[i], r, c)?;
            self.values[i] = m.cast();
        }
        if file.len() != self.len() {
            return Err(Error::format("weight file", format!("{} tensors, expected {}", file.len(), self.len())));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> Option<&str> {
        (0..self.len()).find(|&i| !self.values[i].all_finite()).map(|i| self.names[i].as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    Param(ParamId),
    Node(usize),
}

enum Op<T> {
    Leaf,
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Matrix<T>,
        inv_std: Vec<T>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        mask: AttentionMask,
        bias: Option<(Var, Vec<usize>)>,
        probs: Vec<T>,
    },
    /// Summed negative log-likelihood; stores the softmax.
    SoftmaxXent {
        logits: Var,
        targets: Vec<usize>,
        probs: Matrix<T>,
    },
    /// Summed squared error against a constant target.
    SquaredError {
        pred: Var,
        target: Matrix<T>,
    },
    WeightedSum(Vec<(Var, T)>),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "constant",
            Op::Gather { .. } => "gather",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Gelu(_) => "gelu",
            Op::LayerNorm { .. } => "layer_norm",
            Op::Attention { .. } => "attention",
            Op::SoftmaxXent { .. } => "softmax_xent",
            Op::SquaredError { .. } => "squared_error",
            Op::WeightedSum(_) => "weighted_sum",
        }
    }
}

struct Node<T> {
    value: Matrix<T>,
    op: Op<T>,
}

pub struct Tape<'p, T: Scalar> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        match v {
            Var::Param(id) => self.params.get(id),
            Var::Node(i) => &self.nodes[i].value,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var::Node(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, m: Matrix<T>) -> Var {
        self.push(m, Op::Leaf)
    }

    /// Rows `ids` of `table`.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let mut out = Matrix::zeros(ids.len(), t.cols());
        for (r, &id) in ids.iter().enumerate() {
            if id >= t.rows() {
                return Err(Error::Invalid(format!("gather index {id} beyond {} rows", t.rows())));
            }
            out.row_mut(r).copy_from_slice(t.row(id));
        }
        Ok(self.push(out, Op::Gather { table, ids: ids.to_vec() }))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = add(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let out = add_row(self.value(a), self.value(bias))?;
        Ok(self.push(out, Op::AddRow(a, bias)))
    }

    /// `x · w + b`
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let h = self.matmul(x, w)?;
        self.add_row(h, b)
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(gelu);
        self.push(out, Op::Gelu(a))
    }

    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let (out, xhat, inv_std) = layer_norm(self.value(x), self.value(gamma), self.value(beta))?;
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        ))
    }

    /// Masked multi-head attention core with an optional learned score bias
    /// (`heads x buckets` table, one bucket per `(row, col)`).
    pub fn attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        mask: &AttentionMask,
        bias: Option<(Var, Vec<usize>)>,
    ) -> Result<Var> {
        let attended = {
            let sb = bias.as_ref().map(|(t, b)| ScoreBias {
                table: self.value(*t),
                bucket: b,
            });
            attend(self.value(q), self.value(k), self.value(v), heads, mask, sb)?
        };
        Ok(self.push(
            attended.output,
            Op::Attention {
                q,
                k,
                v,
                heads,
                mask: mask.clone(),
                bias,
                probs: attended.probs,
            },
        ))
    }

    /// `Σ_i −log softmax(logits_i)[targets_i]` as a `1 x 1` value.
    pub fn softmax_xent(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let l = self.value(logits);
        if l.rows() != targets.len() || targets.iter().any(|&t| t >= l.cols()) {
            return Err(Error::Shape(format!("{} targets for logits {:?}", targets.len(), l.shape())));
        }
        let mut probs = Matrix::zeros(l.rows(), l.cols());
        let mut total = T::zero();
        for (i, &t) in targets.iter().enumerate() {
            let ls = log_softmax(l.row(i));
            total = total - ls[t];
            for (p, v) in probs.row_mut(i).iter_mut().zip(ls) {
                *p = v.exp();
            }
        }
        let out = Matrix::from_vec(1, 1, vec![total])?;
        Ok(self.push(
            out,
            Op::SoftmaxXent {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    /// `Σ (pred − target)²` as a `1 x 1` value.
    pub fn squared_error(&mut self, pred: Var, target: Matrix<T>) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(Error::Shape(format!("squared error {:?} vs {:?}", p.shape(), target.shape())));
        }
        let total = p
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .fold(T::zero(), |a, (&x, &y)| a + (x - y) * (x - y));
        let out = Matrix::from_vec(1, 1, vec![total])?;
        Ok(self.push(out, Op::SquaredError { pred, target }))
    }

    /// `Σ w_i · s_i` over `1 x 1` values.
    pub fn weighted_sum(&mut self, terms: &[(Var, T)]) -> Result<Var> {
        let mut total = T::zero();
        for &(v, w) in terms {
            let m = self.value(v);
            if m.shape() != (1, 1) {
                return Err(Error::Shape(format!("weighted sum of {:?}", m.shape())));
            }
            total = total + w * m.get(0, 0);
        }
        let out = Matrix::from_vec(1, 1, vec![total])?;
        Ok(self.push(out, Op::WeightedSum(terms.to_vec())))
    }

    /// Describes the first node holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<String> {
        self.nodes
            .iter()
            .position(|n| !n.value.all_finite())
            .map(|i| format!("node {i} ({})", self.nodes[i].op.name()))
    }

    /// Back-propagates `seed · d(output)` and accumulates parameter gradients
    /// into `grads` (indexed by [`ParamId`]). Non-trainable parameters are skipped.
    pub fn backward(&self, output: Var, seed: T, grads: &mut [Matrix<T>]) -> Result<()> {
        let Var::Node(top) = output else {
            return Err(Error::Invalid("backward from a parameter".into()));
        };
        if self.nodes[top].value.shape() != (1, 1) {
            return Err(Error::Shape("backward needs a scalar output".into()));
        }
        let mut g: Vec<Option<Matrix<T>>> = (0..=top).map(|_| None).collect();
        g[top] = Some(Matrix::from_vec(1, 1, vec![seed])?);

        for idx in (0..=top).rev() {
            let Some(dout) = g[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Gather { table, ids } => {
                    let t = self.value(*table);
                    let mut dt = Matrix::zeros(t.rows(), t.cols());
                    for (r, &id) in ids.iter().enumerate() {
                        for (d, &x) in dt.row_mut(id).iter_mut().zip(dout.row(r)) {
                            *d = *d + x;
                        }
                    }
                    self.accumulate(&mut g, grads, *table, dt);
                }
                Op::MatMul(a, b) => {
                    if self.wants(*a) {
                        let da = matmul_nt(&dout, self.value(*b));
                        self.accumulate(&mut g, grads, *a, da);
                    }
                    if self.wants(*b) {
                        let av = self.value(*a);
                        let mut db = Matrix::zeros(av.cols(), dout.cols());
                        matmul_tn_acc(av, &dout, &mut db);
                        self.accumulate(&mut g, grads, *b, db);
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut g, grads, *b, dout.clone());
                    self.accumulate(&mut g, grads, *a, dout);
                }
                Op::AddRow(a, bias) => {
                    let mut db = Matrix::zeros(1, dout.cols());
                    for r in dout.iter_rows() {
                        for (d, &x) in db.row_mut(0).iter_mut().zip(r) {
                            *d = *d + x;
                        }
                    }
                    self.accumulate(&mut g, grads, *bias, db);
                    self.accumulate(&mut g, grads, *a, dout);
                }
                Op::Gelu(a) => {
                    let x = self.value(*a);
                    let mut dx = dout;
                    for (d, &xv) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        *d = *d * gelu_grad(xv);
                    }
                    self.accumulate(&mut g, grads, *a, dx);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let gm = self.value(*gamma);
                    let (rows, cols) = dout.shape();
                    let n = T::from_f64(cols as f64);
                    let mut dg = Matrix::zeros(1, cols);
                    let mut db = Matrix::zeros(1, cols);
                    let mut dx = Matrix::zeros(rows, cols);
                    for i in 0..rows {
                        let dy = dout.row(i);
                        let xh = xhat.row(i);
                        let mut sum_dh = T::zero();
                        let mut sum_dh_xh = T::zero();
                        for j in 0..cols {
                            let dh = dy[j] * gm.get(0, j);
                            sum_dh = sum_dh + dh;
                            sum_dh_xh = sum_dh_xh + dh * xh[j];
                            dg.row_mut(0)[j] = dg.get(0, j) + dy[j] * xh[j];
                            db.row_mut(0)[j] = db.get(0, j) + dy[j];
                        }
                        let dxr = dx.row_mut(i);
                        for j in 0..cols {
                            let dh = dy[j] * gm.get(0, j);
                            dxr[j] = inv_std[i] * (dh - sum_dh / n - xh[j] * sum_dh_xh / n);
                        }
                    }
                    self.accumulate(&mut g, grads, *gamma, dg);
                    self.accumulate(&mut g, grads, *beta, db);
                    self.accumulate(&mut g, grads, *x, dx);
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    heads,
                    mask,
                    bias,
                    probs,
                } => {
                    let (qv, kv, vv) = (self.value(*q), self.value(*k), self.value(*v));
                    let (n, d) = qv.shape();
                    let m = kv.rows();
                    let dh = d / heads;
                    let scale = T::one() / T::from_f64(dh as f64).sqrt();
                    let mut dq = Matrix::zeros(n, d);
                    let mut dk = Matrix::zeros(m, d);
                    let mut dv = Matrix::zeros(m, d);
                    let mut dbias = bias.as_ref().map(|(t, _)| {
                        let tv = self.value(*t);
                        Matrix::zeros(tv.rows(), tv.cols())
                    });
                    let mut dp = vec![T::zero(); m];
                    for h in 0..*heads {
                        let (lo, hi) = (h * dh, (h + 1) * dh);
                        for i in 0..n {
                            let allow = mask.row(i);
                            let p = &probs[(h * n + i) * m..(h * n + i + 1) * m];
                            let go = &dout.row(i)[lo..hi];
                            let mut inner = T::zero();
                            for j in 0..m {
                                if !allow[j] {
                                    continue;
                                }
                                let x = crate::tensor::dot(go, &vv.row(j)[lo..hi]);
                                dp[j] = x;
                                inner = inner + p[j] * x;
                                for (dvc, &gc) in dv.row_mut(j)[lo..hi].iter_mut().zip(go) {
                                    *dvc = *dvc + p[j] * gc;
                                }
                            }
                            for j in 0..m {
                                if !allow[j] {
                                    continue;
                                }
                                let ds = p[j] * (dp[j] - inner);
                                if let (Some(db), Some((_, buckets))) = (dbias.as_mut(), bias.as_ref()) {
                                    let b = buckets[i * m + j];
                                    db.row_mut(h)[b] = db.get(h, b) + ds;
                                }
                                let s = ds * scale;
                                let kj = &kv.row(j)[lo..hi];
                                for (dqc, &kc) in dq.row_mut(i)[lo..hi].iter_mut().zip(kj) {
                                    *dqc = *dqc + s * kc;
                                }
                                let qi = &qv.row(i)[lo..hi];
                                for (dkc, &qc) in dk.row_mut(j)[lo..hi].iter_mut().zip(qi) {
                                    *dkc = *dkc + s * qc;
                                }
                            }
                        }
                    }
                    if let (Some(db), Some((t, _))) = (dbias, bias.as_ref()) {
                        self.accumulate(&mut g, grads, *t, db);
                    }
                    self.accumulate(&mut g, grads, *q, dq);
                    self.accumulate(&mut g, grads, *k, dk);
                    self.accumulate(&mut g, grads, *v, dv);
                }
                Op::SoftmaxXent { logits, targets, probs } => {
                    let s = dout.get(0, 0);
                    let mut dl = probs.clone();
                    for (i, &t) in targets.iter().enumerate() {
                        let row = dl.row_mut(i);
                        row[t] = row[t] - T::one();
                        for x in row.iter_mut() {
                            *x = *x * s;
                        }
                    }
                    self.accumulate(&mut g, grads, *logits, dl);
                }
                Op::SquaredError { pred, target } => {
                    let s = dout.get(0, 0) * T::from_f64(2.0);
                    let p = self.value(*pred);
                    let data = p.as_slice().iter().zip(target.as_slice()).map(|(&x, &y)| s * (x - y)).collect();
                    let dp = Matrix::from_vec(p.rows(), p.cols(), data)?;
                    self.accumulate(&mut g, grads, *pred, dp);
                }
                Op::WeightedSum(terms) => {
                    let s = dout.get(0, 0);
                    for &(v, w) in terms {
                        self.accumulate(&mut g, grads, v, Matrix::from_vec(1, 1, vec![s * w])?);
                    }
                }
            }
        }
        for (i, gr) in grads.iter().enumerate() {
            if !gr.all_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", self.params.name(i))));
            }
        }
        Ok(())
    }

    fn wants(&self, v: Var) -> bool {
        match v {
            Var::Param(id) => self.params.is_trainable(id),
            Var::Node(i) => !matches!(self.nodes[i].op, Op::Leaf),
        }
    }

    fn accumulate(&self, g: &mut [Option<Matrix<T>>], grads: &mut [Matrix<T>], v: Var, d: Matrix<T>) {
        if !self.wants(v) {
            return;
        }
        let slot = match v {
            Var::Param(id) => &mut grads[id],
            Var::Node(i) => match &mut g[i] {
                Some(m) => m,
                empty => {
                    *empty = Some(d);
                    return;
                }
            },
        };
        for (a, &b) in slot.as_mut_slice().iter_mut().zip(d.as_slice()) {
            *a = *a + b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::build_causal_mask;
    use crate::rng::{seeded, standard_normal};

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = seeded(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| standard_normal(&mut rng)).collect()).unwrap()
    }

    /// A little network touching every op; returns the scalar loss.
    fn build(tape: &mut Tape<'_, f64>, p: &[ParamId]) -> Var {
        let ids = [0, 2, 1, 2];
        let x = tape.gather(Var::Param(p[0]), &ids).unwrap();
        let c = tape.constant(random(4, 4, 99));
        let x = tape.add(x, c).unwrap();
        let x = tape.layer_norm(x, Var::Param(p[1]), Var::Param(p[2])).unwrap();
        let q = tape.matmul(x, Var::Param(p[3])).unwrap();
        let mask = build_causal_mask(4);
        let buckets: Vec<usize> = (0..16usize).map(|k| (k / 4).abs_diff(k % 4).min(2)).collect();
        let a = tape.attention(q, x, x, 2, &mask, Some((Var::Param(p[4]), buckets))).unwrap();
        let h = tape.gelu(a);
        let logits = tape.affine(h, Var::Param(p[5]), Var::Param(p[6])).unwrap();
        let ce = tape.softmax_xent(logits, &[1, 0, 2, 1]).unwrap();
        let se = tape.squared_error(h, random(4, 4, 98)).unwrap();
        tape.weighted_sum(&[(ce, 1.0), (se, 0.3)]).unwrap()
    }

    fn store() -> (ParamStore<f64>, Vec<ParamId>) {
        let mut s = ParamStore::new();
        let ids = vec![
            s.add("emb", random(3, 4, 1), true),
            s.add("g", random(1, 4, 2), true),
            s.add("b", random(1, 4, 3), true),
            s.add("wq", random(4, 4, 4), true),
            s.add("rel", random(2, 3, 5), true),
            s.add("wo", random(4, 3, 6), true),
            s.add("bo", random(1, 3, 7), true),
        ];
        (s, ids)
    }

    #[test]
    fn gradients_match_central_differences() {
        let (mut s, ids) = store();
        let mut grads = s.zeros_like();
        {
            let mut tape = Tape::new(&s);
            let loss = build(&mut tape, &ids);
            tape.backward(loss, 1.0, &mut grads).unwrap();
        }
        let eps = 1e-5;
        for &id in &ids {
            for e in 0..s.get(id).as_slice().len() {
                let orig = s.get(id).as_slice()[e];
                s.get_mut(id).as_mut_slice()[e] = orig + eps;
                let up = {
                    let mut t = Tape::new(&s);
                    let l = build(&mut t, &ids);
                    t.value(l).get(0, 0)
                };
                s.get_mut(id).as_mut_slice()[e] = orig - eps;
                let down = {
                    let mut t = Tape::new(&s);
                    let l = build(&mut t, &ids);
                    t.value(l).get(0, 0)
                };
                s.get_mut(id).as_mut_slice()[e] = orig;
                let fd = (up - down) / (2.0 * eps);
                let an = grads[id].as_slice()[e];
                assert!((fd - an).abs() <= 1e-6 * (1.0 + fd.abs()), "{} [{e}]: fd {fd} vs {an}", s.name(id));
            }
        }
    }

    #[test]
    fn always_masked_bias_bucket_gets_zero_gradient() {
        let (s, ids) = store();
        let mut grads = s.zeros_like();
        let mut tape = Tape::new(&s);
        let x = tape.gather(Var::Param(ids[0]), &[0, 1, 2]).unwrap();
        // bucket 2 only on future (masked) pairs
        let buckets: Vec<usize> = (0..9).map(|k| if k % 3 > k / 3 { 2 } else { k % 2 }).collect();
        let a = tape
            .attention(x, x, x, 2, &build_causal_mask(3), Some((Var::Param(ids[4]), buckets)))
            .unwrap();
        let loss = tape.squared_error(a, Matrix::zeros(3, 4)).unwrap();
        tape.backward(loss, 1.0, &mut grads).unwrap();
        let rel = &grads[ids[4]];
        assert_eq!(rel.get(0, 2), 0.0);
        assert_eq!(rel.get(1, 2), 0.0);
        assert!(rel.get(0, 0) != 0.0);
    }

    #[test]
    fn frozen_parameters_receive_nothing() {
        let mut s = ParamStore::new();
        let w = s.add("w", random(2, 2, 1), true);
        let f = s.add("f", random(2, 2, 2), false);
        let mut grads = s.zeros_like();
        let mut tape = Tape::new(&s);
        let h = tape.matmul(Var::Param(w), Var::Param(f)).unwrap();
        let l = tape.squared_error(h, Matrix::zeros(2, 2)).unwrap();
        tape.backward(l, 1.0, &mut grads).unwrap();
        assert!(grads[f].as_slice().iter().all(|&x| x == 0.0));
        assert!(grads[w].as_slice().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn store_round_trips_through_weight_file() {
        let (s, _) = store();
        let s32: ParamStore<f32> = s.cast();
        let file = s32.to_tensor_file();
        let mut back = s32.clone();
        for i in 0..back.len() {
            back.get_mut(i).as_mut_slice().fill(0.0);
        }
        back.load_tensor_file(&file).unwrap();
        assert_eq!(back, s32);
    }
}
