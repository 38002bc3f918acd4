use super::{Real, RngState, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitKind {
    /// Uniform in `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Matrix with orthonormal columns (tall) or rows (wide).
    Orthogonal,
}

impl InitKind {
    /// Glorot-uniform bounds `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(fan_in: usize, fan_out: usize) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        InitKind::Uniform { lo: -limit, hi: limit }
    }
}

/// Draws a tensor of `shape` from `rng`. The result depends only on the seed
/// and on how many values were drawn from `rng` before.
pub fn seeded_init<T: Real>(rng: &mut RngState, kind: InitKind, shape: &[usize]) -> Result<Tensor<T>> {
    match kind {
        InitKind::Uniform { lo, hi } => {
            if !(lo < hi) {
                return Err(Error::param(format!("uniform init needs lo < hi, got [{lo}, {hi})")));
            }
            let data: Vec<T> = (0..shape.iter().product())
                .map(|_| T::of(rng.uniform(lo, hi)))
                .collect();
            Tensor::new(shape.to_vec(), data)
        }
        InitKind::Orthogonal => {
            let [rows, cols] = shape[..] else {
                return Err(Error::shape(format!("orthogonal init needs a 2-D shape, got {shape:?}")));
            };
            let q = orthonormal(rng, rows.max(cols), rows.min(cols));
            // q is tall: tall × short with orthonormal columns.
            let tall = rows >= cols;
            let short = rows.min(cols);
            Ok(Tensor::from_fn(&[rows, cols], |k| {
                let (r, c) = (k / cols, k % cols);
                let v = if tall { q[r * short + c] } else { q[c * short + r] };
                T::of(v)
            }))
        }
    }
}

/// `n × k` (n ≥ k) matrix with orthonormal columns, via modified Gram-Schmidt
/// on a Gaussian matrix with the sign convention of QR (positive R diagonal).
fn orthonormal(rng: &mut RngState, n: usize, k: usize) -> Vec<f64> {
    loop {
        let mut a: Vec<f64> = (0..n * k).map(|_| rng.normal()).collect();
        let mut ok = true;
        for j in 0..k {
            for p in 0..j {
                let dot: f64 = (0..n).map(|i| a[i * k + j] * a[i * k + p]).sum();
                for i in 0..n {
                    a[i * k + j] -= dot * a[i * k + p];
                }
            }
            let norm = (0..n).map(|i| a[i * k + j].powi(2)).sum::<f64>().sqrt();
            if norm < 1e-10 {
                ok = false;
                break;
            }
            for i in 0..n {
                a[i * k + j] /= norm;
            }
        }
        if ok {
            return a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a: Tensor<f32> = seeded_init(&mut RngState::new(5), InitKind::glorot(3, 4), &[3, 4]).unwrap();
        let b: Tensor<f32> = seeded_init(&mut RngState::new(5), InitKind::glorot(3, 4), &[3, 4]).unwrap();
        assert_eq!(a, b);
        let c: Tensor<f32> = seeded_init(&mut RngState::new(6), InitKind::glorot(3, 4), &[3, 4]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_range() {
        let t: Tensor<f64> =
            seeded_init(&mut RngState::new(1), InitKind::Uniform { lo: 0.0, hi: 1.0 }, &[10_000]).unwrap();
        assert!(t.data().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn uniform_rejects_empty_interval() {
        let r: Result<Tensor<f32>> =
            seeded_init(&mut RngState::new(1), InitKind::Uniform { lo: 1.0, hi: 1.0 }, &[2]);
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    fn gram_deviation(q: &Tensor<f64>) -> f64 {
        let g = q.transpose().unwrap().matmul(q).unwrap();
        g.max_abs_diff(&Tensor::eye(g.rows()))
    }

    #[test]
    fn orthogonal_square() {
        let q: Tensor<f64> = seeded_init(&mut RngState::new(2), InitKind::Orthogonal, &[32, 32]).unwrap();
        assert!(gram_deviation(&q) < 1e-6);
        let q32: Tensor<f32> = seeded_init(&mut RngState::new(2), InitKind::Orthogonal, &[32, 32]).unwrap();
        assert!(gram_deviation(&q32.cast()) < 1e-6);
    }

    #[test]
    fn orthogonal_rectangular() {
        let tall: Tensor<f64> = seeded_init(&mut RngState::new(4), InitKind::Orthogonal, &[7, 3]).unwrap();
        assert!(gram_deviation(&tall) < 1e-10);
        let wide: Tensor<f64> = seeded_init(&mut RngState::new(4), InitKind::Orthogonal, &[3, 7]).unwrap();
        assert!(gram_deviation(&wide.transpose().unwrap()) < 1e-10);
    }

    #[test]
    fn orthogonal_needs_matrix() {
        let r: Result<Tensor<f32>> = seeded_init(&mut RngState::new(1), InitKind::Orthogonal, &[2, 2, 2]);
        assert!(matches!(r, Err(Error::Shape(_))));
    }
}
