use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Batch-mean categorical cross-entropy `−(1/n) Σᵢ ln p̂_{yᵢ}` over an
/// `n × K` matrix of probabilities. The log argument is clamped at `1e-12`.
pub fn cross_entropy<T: Real>(probs: &Tensor<T>, labels: &[usize]) -> Result<f64> {
    if probs.rank() != 2 {
        return Err(Error::shape(format!("expected an n × K probability matrix, got {:?}", probs.shape())));
    }
    let (n, k) = (probs.rows(), probs.cols());
    if labels.len() != n {
        return Err(Error::data(format!("{} labels for {n} rows", labels.len())));
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::data(format!("label {y} out of range for {k} classes")));
        }
        total -= probs.at2(i, y).as_f64().max(1e-12).ln();
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_uniform() {
        let p = Tensor::<f64>::matrix(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(cross_entropy(&p, &[0, 2]).unwrap(), 0.0);
        let u = Tensor::<f64>::full(&[4, 5], 0.2);
        assert!((cross_entropy(&u, &[0, 1, 2, 4]).unwrap() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_value() {
        let p = Tensor::<f64>::matrix(&[&[0.5, 0.5], &[0.75, 0.25]]).unwrap();
        let j = cross_entropy(&p, &[0, 1]).unwrap();
        assert!((j - 1.0397207708399179).abs() < 1e-12);
    }

    #[test]
    fn label_out_of_range() {
        let p = Tensor::<f64>::full(&[1, 2], 0.5);
        assert!(matches!(cross_entropy(&p, &[2]), Err(Error::Data(_))));
    }
}
