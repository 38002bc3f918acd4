use super::Tensor;
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric `d × d` matrix by cyclic Jacobi rotations.
///
/// Returns `(vectors, values)` with eigenvectors as columns, sorted by
/// descending eigenvalue.
pub fn symmetric_eigen(a: &Tensor<f64>) -> Result<(Tensor<f64>, Vec<f64>)> {
    let d = a.rows();
    if a.shape() != [d, d] {
        return Err(Error::shape(format!("expected a square matrix, got {:?}", a.shape())));
    }
    let mut m = a.data().to_vec();
    let mut v = Tensor::<f64>::eye(d).into_data();
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|p| (0..d).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| m[p * d + q].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * d + q] - m[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (mkp, mkq) = (m[k * d + p], m[k * d + q]);
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let (mpk, mqk) = (m[p * d + k], m[q * d + k]);
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let (vkp, vkq) = (v[k * d + p], v[k * d + q]);
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[j * d + j].total_cmp(&m[i * d + i]));
    let values = order.iter().map(|&i| m[i * d + i]).collect();
    let vectors = Tensor::from_fn(&[d, d], |k| v[(k / d) * d + order[k % d]]);
    Ok((vectors, values))
}

/// Principal axes of the rows of `x` (`n × d`).
///
/// Centers the data, then returns the eigenvectors of the sample covariance
/// (columns, orthonormal) with their eigenvalues, sorted descending and
/// clamped at zero.
pub fn svd_covariance(x: &Tensor<f64>) -> Result<(Tensor<f64>, Vec<f64>)> {
    if x.rank() != 2 {
        return Err(Error::shape(format!("expected an n × d matrix, got {:?}", x.shape())));
    }
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 samples, got {n}")));
    }
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for r in 0..n {
        for (c, (v, m)) in centered.iter_mut().zip(x.row(r).iter().zip(&mean)) {
            *c = v - m;
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1) as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let (vectors, mut values) = symmetric_eigen(&Tensor::new(vec![d, d], cov)?)?;
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok((vectors, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RngState;

    fn random(seed: u64, n: usize, d: usize) -> Tensor<f64> {
        let mut rng = RngState::new(seed);
        Tensor::from_fn(&[n, d], |_| rng.normal())
    }

    fn covariance_oracle(x: &Tensor<f64>) -> nalgebra::DMatrix<f64> {
        let (n, d) = (x.rows(), x.cols());
        let m = nalgebra::DMatrix::from_row_slice(n, d, x.data());
        let mean = m.row_mean();
        let c = nalgebra::DMatrix::from_fn(n, d, |i, j| m[(i, j)] - mean[j]);
        c.transpose() * &c / (n as f64 - 1.0)
    }

    #[test]
    fn line_in_plane_has_rank_one() {
        let x = Tensor::from_fn(&[6, 2], |k| {
            let s = (k / 2) as f64;
            if k % 2 == 0 { s } else { 2.0 * s + 1.0 }
        });
        let (_, vars) = svd_covariance(&x).unwrap();
        assert!(vars[0] > 0.0);
        assert!(vars[1].abs() < 1e-12);
    }

    #[test]
    fn components_are_orthonormal() {
        let (q, _) = svd_covariance(&random(3, 40, 6)).unwrap();
        let g = q.transpose().unwrap().matmul(&q).unwrap();
        assert!(g.max_abs_diff(&Tensor::eye(6)) < 1e-10);
    }

    #[test]
    fn matches_brute_force_eigensolver() {
        let x = random(11, 50, 4);
        let (_, vars) = svd_covariance(&x).unwrap();
        let mut expected: Vec<f64> = covariance_oracle(&x).symmetric_eigen().eigenvalues.iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in vars.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn variances_sum_to_total_variance() {
        let x = random(12, 30, 5);
        let (_, vars) = svd_covariance(&x).unwrap();
        let total = covariance_oracle(&x).trace();
        assert!((vars.iter().sum::<f64>() - total).abs() < 1e-8);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let x = random(5, 20, 7);
        let c = covariance_oracle(&x);
        let a = Tensor::new(vec![7, 7], c.transpose().as_slice().to_vec()).unwrap();
        let (v, vals) = symmetric_eigen(&a).unwrap();
        for j in 0..7 {
            let col: Vec<f64> = (0..7).map(|i| v.at2(i, j)).collect();
            for i in 0..7 {
                let av: f64 = (0..7).map(|k| a.at2(i, k) * col[k]).sum();
                assert!((av - vals[j] * col[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_single_sample() {
        assert!(matches!(svd_covariance(&random(1, 1, 3)), Err(Error::InsufficientData(_))));
    }
}
