use crate::autodiff::ParamStore;
use crate::tensor::{Matrix, Scalar};

/// Adam with bias-corrected moments and a constant step size.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ParamStore<T>, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &[Matrix<T>]) {
        self.t += 1;
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let c1 = T::from_f64(1.0 - self.beta1.powi(self.t));
        let c2 = T::from_f64(1.0 - self.beta2.powi(self.t));
        let lr = T::from_f64(self.lr);
        let eps = T::from_f64(self.eps);
        for id in 0..params.len() {
            if !params.is_trainable(id) {
                continue;
            }
            let p = params.get_mut(id).as_mut_slice();
            let m = self.m[id].as_mut_slice();
            let v = self.v[id].as_mut_slice();
            for (((pi, &gi), mi), vi) in p.iter_mut().zip(grads[id].as_slice()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *pi = *pi - lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}
