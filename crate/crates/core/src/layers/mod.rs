//! Network layers with hand-written forward and backward passes.
//!
//! Every layer is generic over [`Real`] so the same code runs in `f32` for
//! training and in `f64` for finite-difference gradient checks.

mod checkpoint;
mod conv;
mod dense;
mod dropout;
mod lstm;
mod model;
mod rnn;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use conv::{Conv2d, ConvCache};
pub use dense::{softmax, DenseSoftmaxHead, TimeDistributedDense};
pub use dropout::{dropout_apply, Mode};
pub use lstm::{Gate, LstmCache, LstmCell, LstmStep};
pub use model::{ForwardCache, ModelConfig, Params, PixelRcnn};
pub(crate) use model::sample_loss;
pub use rnn::BasicRnnCell;

use crate::tensor::{Real, Tensor};

#[inline]
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

#[inline]
pub(crate) fn relu<T: Real>(x: T) -> T {
    x.max(T::zero())
}

/// `out += x · w` for a row vector `x` and matrix `w` (`len(x) × len(out)`).
#[inline]
pub(crate) fn vec_mat_acc<T: Real>(x: &[T], w: &Tensor<T>, out: &mut [T]) {
    let n = out.len();
    debug_assert_eq!(w.shape(), [x.len(), n]);
    let wd = w.data();
    for (l, &xl) in x.iter().enumerate() {
        if xl == T::zero() {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&wd[l * n..(l + 1) * n]) {
            *o = *o + xl * wv;
        }
    }
}

/// `out += w · d`, i.e. `out[i] += Σ_j w[i, j] d[j]`.
#[inline]
pub(crate) fn mat_vec_acc<T: Real>(w: &Tensor<T>, d: &[T], out: &mut [T]) {
    let n = d.len();
    debug_assert_eq!(w.shape(), [out.len(), n]);
    let wd = w.data();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &wd[i * n..(i + 1) * n];
        let mut acc = T::zero();
        for (&wv, &dv) in row.iter().zip(d) {
            acc = acc + wv * dv;
        }
        *o = *o + acc;
    }
}

/// `g[i, j] += x[i] · d[j]`.
#[inline]
pub(crate) fn outer_acc<T: Real>(g: &mut Tensor<T>, x: &[T], d: &[T]) {
    let n = d.len();
    let gd = g.data_mut();
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for (gv, &dv) in gd[i * n..(i + 1) * n].iter_mut().zip(d) {
            *gv = *gv + xi * dv;
        }
    }
}

#[inline]
pub(crate) fn add_into<T: Real>(acc: &mut [T], v: &[T]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a = *a + b;
    }
}
