use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Decay rates and the denominator offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmsGradConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AmsGradConfig {
    fn default() -> Self {
        AmsGradConfig { beta1: 0.86, beta2: 0.98, eps: 1e-9 }
    }
}

impl AmsGradConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.beta1) || !unit(self.beta2) || !(self.eps > 0.0) {
            return Err(Error::param(format!(
                "need 0 < beta1, beta2 < 1 and eps > 0, got {} {} {}",
                self.beta1, self.beta2, self.eps
            )));
        }
        Ok(())
    }
}

/// First and second moments plus the running maximum `v̂`, one set per
/// parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AmsGradState<T: Real = f32> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub v_hat: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Real> AmsGradState<T> {
    pub fn new(params: &[&Tensor<T>]) -> Self {
        let zeros = || params.iter().map(|p| p.zeros_like()).collect::<Vec<_>>();
        AmsGradState { m: zeros(), v: zeros(), v_hat: zeros(), step: 0 }
    }
}

/// One update without bias correction:
///
/// ```text
/// m ← β₁m + (1−β₁)g
/// v ← β₂v + (1−β₂)g²
/// v̂ ← max(v̂, v)
/// θ ← θ − lr·m / √(v̂ + ε)
/// ```
///
/// Gradients are checked before anything is touched; a non-finite entry
/// aborts the step with a numeric error.
pub fn amsgrad_step<T: Real>(
    state: &mut AmsGradState<T>,
    params: &mut [&mut Tensor<T>],
    grads: &[&Tensor<T>],
    lr: f64,
    cfg: &AmsGradConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(format!(
            "{} parameters, {} gradients, {} optimizer slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        p.check_same_shape(g)?;
        p.check_same_shape(m)?;
    }
    if !(lr > 0.0) {
        return Err(Error::param(format!("learning rate must be positive, got {lr}")));
    }
    if let Some(k) = grads.iter().position(|g| !g.all_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient in parameter tensor {k}")));
    }

    let (b1, b2, eps, lr) = (T::of(cfg.beta1), T::of(cfg.beta2), T::of(cfg.eps), T::of(lr));
    let one = T::one();
    for (k, p) in params.iter_mut().enumerate() {
        let g = grads[k].data();
        let m = state.m[k].data_mut();
        let v = state.v[k].data_mut();
        let vh = state.v_hat[k].data_mut();
        for (j, theta) in p.data_mut().iter_mut().enumerate() {
            m[j] = b1 * m[j] + (one - b1) * g[j];
            v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
            vh[j] = vh[j].max(v[j]);
            *theta = *theta - lr * m[j] / (vh[j] + eps).sqrt();
        }
    }
    state.step += 1;
    Ok(())
}
