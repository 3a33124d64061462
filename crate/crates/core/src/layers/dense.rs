//! Affine maps applied row by row.

use crate::tensor::{vecmat, Matrix, Scalar};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Affine<T = f32> {
    /// `in x out`
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Affine<T> {
    pub fn new(weight: Matrix<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(Error::Shape(format!(
                "affine bias {} for weight {:?}",
                bias.len(),
                weight.shape()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Matrix::zeros(input, output),
            bias: vec![T::zero(); output],
        }
    }

    pub fn input_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn apply_row(&self, x: &[T]) -> Vec<T> {
        let mut out = self.bias.clone();
        vecmat(x, &self.weight, &mut out);
        out
    }

    pub fn apply(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if !x.is_empty() && x.cols() != self.input_size() {
            return Err(Error::Shape(format!(
                "affine input {:?} for weight {:?}",
                x.shape(),
                self.weight.shape()
            )));
        }
        let mut out = Matrix::empty(self.output_size());
        for row in x.iter_rows() {
            out.push_row(&self.apply_row(row))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_hand_computation() {
        let w = Matrix::from_rows(&[vec![1.0f32, 2.0], vec![-1.0, 0.5]]).unwrap();
        let a = Affine::new(w, vec![0.25, -0.25]).unwrap();
        assert_eq!(a.apply_row(&[2.0, 4.0]), vec![2.0 - 4.0 + 0.25, 4.0 + 2.0 - 0.25]);
        assert!(a.apply(&Matrix::zeros(1, 3)).is_err());
        assert!(Affine::new(Matrix::<f32>::zeros(2, 2), vec![0.0]).is_err());
    }
}
