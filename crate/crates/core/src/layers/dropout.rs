use crate::error::{Error, Result};
use crate::tensor::{Real, RngState, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout.
///
/// In training mode each element is kept with probability `1 − p` and scaled
/// by `1 / (1 − p)`; in evaluation mode the input passes through unchanged.
/// The returned mask holds the per-element multiplier (`0` or `1 / (1 − p)`).
pub fn dropout_apply<T: Real>(x: &Tensor<T>, p: f64, mode: Mode, rng: &mut RngState) -> Result<(Tensor<T>, Tensor<T>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::param(format!("dropout probability must be in [0, 1), got {p}")));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((x.clone(), Tensor::full(x.shape(), T::one())));
    }
    let keep = T::of(1.0 / (1.0 - p));
    let mask = Tensor::from_fn(x.shape(), |_| if rng.uniform(0.0, 1.0) < p { T::zero() } else { keep });
    let out = Tensor::from_fn(x.shape(), |k| x.data()[k] * mask.data()[k]);
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::from_fn(&[4, 3], |k| k as f32);
        let (y, mask) = dropout_apply(&x, 0.0, Mode::Train, &mut RngState::new(1)).unwrap();
        assert_eq!(y, x);
        assert!(mask.data().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn eval_is_identity() {
        let x = Tensor::from_fn(&[4, 3], |k| k as f32);
        let (y, _) = dropout_apply(&x, 0.7, Mode::Eval, &mut RngState::new(1)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn preserves_expectation() {
        let x = Tensor::full(&[1_000_000], 1.0f64);
        let (y, _) = dropout_apply(&x, 0.2, Mode::Train, &mut RngState::new(7)).unwrap();
        let mean = y.data().iter().sum::<f64>() / 1e6;
        assert!((0.99..=1.01).contains(&mean), "{mean}");
    }

    #[test]
    fn rejects_rate_of_one() {
        let x = Tensor::full(&[3], 1.0f32);
        assert!(matches!(dropout_apply(&x, 1.0, Mode::Train, &mut RngState::new(1)), Err(Error::Parameter(_))));
    }
}
