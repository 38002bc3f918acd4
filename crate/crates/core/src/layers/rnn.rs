use super::{add_into, mat_vec_acc, outer_acc, vec_mat_acc};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Single-layer recurrent cell `y_t = tanh(x_t·W_x + y_{t-1}·W_y + b)`.
///
/// Not part of the Pixel R-CNN pipeline; kept as the reference recurrent unit.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicRnnCell<T: Real = f32> {
    pub w_x: Tensor<T>,
    pub w_y: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> BasicRnnCell<T> {
    pub fn zeros(bands: usize, units: usize) -> Self {
        BasicRnnCell {
            w_x: Tensor::zeros(&[bands, units]),
            w_y: Tensor::zeros(&[units, units]),
            bias: Tensor::zeros(&[units]),
        }
    }

    pub fn units(&self) -> usize {
        self.w_y.rows()
    }

    pub fn step(&self, x: &[T], y_prev: &[T]) -> Result<Vec<T>> {
        if x.len() != self.w_x.rows() || y_prev.len() != self.units() {
            return Err(Error::shape(format!(
                "rnn step expects x:{} y:{}, got x:{} y:{}",
                self.w_x.rows(),
                self.units(),
                x.len(),
                y_prev.len()
            )));
        }
        let mut z = self.bias.data().to_vec();
        vec_mat_acc(x, &self.w_x, &mut z);
        vec_mat_acc(y_prev, &self.w_y, &mut z);
        Ok(z.into_iter().map(T::tanh).collect())
    }

    /// Outputs for every row of a `t × b` sequence, starting from `y_0 = 0`.
    pub fn forward_sequence(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 2 {
            return Err(Error::shape("rnn expects a t × b sequence"));
        }
        if x.rows() == 0 {
            return Err(Error::EmptySequence);
        }
        let u = self.units();
        let mut out = Vec::with_capacity(x.rows() * u);
        let mut y = vec![T::zero(); u];
        for r in 0..x.rows() {
            y = self.step(x.row(r), &y)?;
            out.extend_from_slice(&y);
        }
        Tensor::new(vec![x.rows(), u], out)
    }

    /// Gradients of a loss with respect to the parameters and inputs, given
    /// the forward outputs `y` and the loss gradient `d_y` for every row.
    pub fn backward_sequence(&self, x: &Tensor<T>, y: &Tensor<T>, d_y: &Tensor<T>) -> Result<(Self, Tensor<T>)> {
        y.check_same_shape(d_y)?;
        let u = self.units();
        let mut grads = Self::zeros(self.w_x.rows(), u);
        let mut d_x = Tensor::zeros(x.shape());
        let mut carry = vec![T::zero(); u];
        let zero = vec![T::zero(); u];
        for r in (0..x.rows()).rev() {
            let dz: Vec<T> = (0..u)
                .map(|j| {
                    let yj = y.row(r)[j];
                    (d_y.row(r)[j] + carry[j]) * (T::one() - yj * yj)
                })
                .collect();
            let y_prev = if r == 0 { &zero[..] } else { y.row(r - 1) };
            outer_acc(&mut grads.w_x, x.row(r), &dz);
            outer_acc(&mut grads.w_y, y_prev, &dz);
            add_into(grads.bias.data_mut(), &dz);
            carry.iter_mut().for_each(|v| *v = T::zero());
            mat_vec_acc(&self.w_y, &dz, &mut carry);
            mat_vec_acc(&self.w_x, &dz, d_x.row_mut(r));
        }
        Ok((grads, d_x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::testutil::{max_relative_error, random_tensor};
    use crate::tensor::RngState;

    fn random_cell(seed: u64, b: usize, u: usize) -> BasicRnnCell<f64> {
        let mut rng = RngState::new(seed);
        BasicRnnCell {
            w_x: random_tensor(&mut rng, &[b, u], 0.8),
            w_y: random_tensor(&mut rng, &[u, u], 0.8),
            bias: random_tensor(&mut rng, &[u], 0.5),
        }
    }

    #[test]
    fn zero_cell_outputs_zero() {
        let cell = BasicRnnCell::<f64>::zeros(3, 3);
        assert_eq!(cell.step(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_input_weights_linearize() {
        let mut cell = BasicRnnCell::<f64>::zeros(3, 3);
        cell.w_x = Tensor::eye(3);
        let x = [1e-4, -2e-4, 3e-4];
        let y = cell.step(&x, &[0.9, -0.9, 0.1]).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn matches_scalar_oracle() {
        let cell = random_cell(6, 4, 3);
        let x = [0.4, -1.0, 0.25, 0.8];
        let y_prev = [0.1, -0.6, 0.3];
        let y = cell.step(&x, &y_prev).unwrap();
        for j in 0..3 {
            let mut s = cell.bias.data()[j];
            for k in 0..4 {
                s += x[k] * cell.w_x.at2(k, j);
            }
            for k in 0..3 {
                s += y_prev[k] * cell.w_y.at2(k, j);
            }
            assert!((y[j] - s.tanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch() {
        let cell = BasicRnnCell::<f32>::zeros(2, 2);
        assert!(matches!(cell.step(&[1.0], &[0.0, 0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..5u64 {
            let cell = random_cell(seed, 3, 4);
            let mut rng = RngState::new(seed + 50);
            let x: Tensor<f64> = random_tensor(&mut rng, &[6, 3], 1.0);
            let w: Tensor<f64> = random_tensor(&mut rng, &[6, 4], 1.0);
            let loss = |c: &BasicRnnCell<f64>, x: &Tensor<f64>| {
                let y = c.forward_sequence(x).unwrap();
                y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum::<f64>()
            };
            let y = cell.forward_sequence(&x).unwrap();
            let (g, d_x) = cell.backward_sequence(&x, &y, &w).unwrap();

            let mut p = cell.w_x.clone();
            let err = max_relative_error(&mut p, &g.w_x, |t| {
                loss(&BasicRnnCell { w_x: t.clone(), ..cell.clone() }, &x)
            });
            assert!(err < 1e-4);
            let mut p = cell.w_y.clone();
            let err = max_relative_error(&mut p, &g.w_y, |t| {
                loss(&BasicRnnCell { w_y: t.clone(), ..cell.clone() }, &x)
            });
            assert!(err < 1e-4);
            let mut p = cell.bias.clone();
            let err = max_relative_error(&mut p, &g.bias, |t| {
                loss(&BasicRnnCell { bias: t.clone(), ..cell.clone() }, &x)
            });
            assert!(err < 1e-4);
            let mut xp = x.clone();
            assert!(max_relative_error(&mut xp, &d_x, |t| loss(&cell, t)) < 1e-4);
        }
    }
}
