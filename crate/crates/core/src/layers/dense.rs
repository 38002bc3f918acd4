use super::{add_into, mat_vec_acc, outer_acc, relu, vec_mat_acc};
use crate::error::{Error, Result};
use crate::tensor::{seeded_init, InitKind, Real, RngState, Tensor};

/// One affine map `row·W + B` applied to every time step with shared weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDistributedDense<T: Real = f32> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Real> TimeDistributedDense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        TimeDistributedDense { w: Tensor::zeros(&[inputs, outputs]), b: Tensor::zeros(&[outputs]) }
    }

    pub fn init(rng: &mut RngState, inputs: usize, outputs: usize) -> Result<Self> {
        Ok(TimeDistributedDense {
            w: seeded_init(rng, InitKind::glorot(inputs, outputs), &[inputs, outputs])?,
            b: Tensor::zeros(&[outputs]),
        })
    }

    pub fn outputs(&self) -> usize {
        self.w.cols()
    }

    /// `t × inputs` to `t × outputs`. With `relu` the rows are rectified.
    pub fn forward(&self, y: &Tensor<T>, relu_out: bool) -> Result<Tensor<T>> {
        if y.rank() != 2 || y.cols() != self.w.rows() {
            return Err(Error::shape(format!(
                "time-distributed dense expects t × {}, got {:?}",
                self.w.rows(),
                y.shape()
            )));
        }
        let d = self.outputs();
        let mut out = Tensor::zeros(&[y.rows(), d]);
        for r in 0..y.rows() {
            let o = out.row_mut(r);
            o.copy_from_slice(self.b.data());
            vec_mat_acc(y.row(r), &self.w, o);
            if relu_out {
                o.iter_mut().for_each(|v| *v = relu(*v));
            }
        }
        Ok(out)
    }

    /// Given the input `y`, the forward output and its gradient, returns
    /// parameter gradients and the input gradient.
    pub fn backward(&self, y: &Tensor<T>, out: &Tensor<T>, d_out: &Tensor<T>, relu_out: bool) -> Result<(Self, Tensor<T>)> {
        out.check_same_shape(d_out)?;
        let mut grads = Self::zeros(self.w.rows(), self.outputs());
        let mut d_y = Tensor::zeros(y.shape());
        for r in 0..y.rows() {
            let mut dz = d_out.row(r).to_vec();
            if relu_out {
                for (g, &o) in dz.iter_mut().zip(out.row(r)) {
                    if o <= T::zero() {
                        *g = T::zero();
                    }
                }
            }
            outer_acc(&mut grads.w, y.row(r), &dz);
            add_into(grads.b.data_mut(), &dz);
            mat_vec_acc(&self.w, &dz, d_y.row_mut(r));
        }
        Ok((grads, d_y))
    }
}

/// Numerically stable softmax: `exp(s_k − max s) / Σ_j exp(s_j − max s)`.
pub fn softmax<T: Real>(scores: &[T]) -> Result<Vec<T>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("non-finite class score in {scores:?}")));
    }
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Final fully connected layer with softmax output over `K` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSoftmaxHead<T: Real = f32> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Real> DenseSoftmaxHead<T> {
    pub fn zeros(inputs: usize, classes: usize) -> Self {
        DenseSoftmaxHead { w: Tensor::zeros(&[inputs, classes]), b: Tensor::zeros(&[classes]) }
    }

    pub fn init(rng: &mut RngState, inputs: usize, classes: usize) -> Result<Self> {
        Ok(DenseSoftmaxHead {
            w: seeded_init(rng, InitKind::glorot(inputs, classes), &[inputs, classes])?,
            b: Tensor::zeros(&[classes]),
        })
    }

    pub fn classes(&self) -> usize {
        self.w.cols()
    }

    pub fn scores(&self, features: &[T]) -> Result<Vec<T>> {
        if features.len() != self.w.rows() {
            return Err(Error::shape(format!(
                "softmax head expects {} features, got {}",
                self.w.rows(),
                features.len()
            )));
        }
        let mut s = self.b.data().to_vec();
        vec_mat_acc(features, &self.w, &mut s);
        Ok(s)
    }

    pub fn forward(&self, features: &[T]) -> Result<Vec<T>> {
        softmax(&self.scores(features)?)
    }

    /// Cross-entropy backward: the score gradient is `p̂ − onehot(label)`.
    pub fn backward(&self, features: &[T], probs: &[T], label: usize) -> (Self, Vec<T>) {
        let mut ds = probs.to_vec();
        ds[label] = ds[label] - T::one();
        let mut grads = Self::zeros(self.w.rows(), self.classes());
        outer_acc(&mut grads.w, features, &ds);
        grads.b.data_mut().copy_from_slice(&ds);
        let mut d_features = vec![T::zero(); features.len()];
        mat_vec_acc(&self.w, &ds, &mut d_features);
        (grads, d_features)
    }
}
