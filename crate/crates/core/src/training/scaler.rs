use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Per-feature standardization statistics, one entry per `(t, b)` position.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalerParams {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

pub const SCALER_MEAN: &str = "scaler.mean";
pub const SCALER_STD: &str = "scaler.std";

impl ScalerParams {
    /// Population mean and standard deviation; constant features get σ = 1.
    pub fn fit(d: &PixelDataset) -> Self {
        let (n, f) = (d.len(), d.features());
        let mut mean = vec![0f64; f];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(d.row(i)) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0f64; f];
        let mut lo = vec![f32::INFINITY; f];
        let mut hi = vec![f32::NEG_INFINITY; f];
        for i in 0..n {
            for (c, &v) in d.row(i).iter().enumerate() {
                var[c] += (v as f64 - mean[c]).powi(2);
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
        let std = (0..f)
            .map(|c| if lo[c] == hi[c] { 1.0 } else { (var[c] / n as f64).sqrt() as f32 })
            .collect();
        ScalerParams { mean: mean.into_iter().map(|m| m as f32).collect(), std }
    }

    pub fn apply(&self, d: &PixelDataset) -> Result<PixelDataset> {
        if d.features() != self.mean.len() {
            return Err(Error::shape(format!("scaler fitted on {} features, data has {}", self.mean.len(), d.features())));
        }
        let mut out = d.clone();
        let f = self.mean.len();
        for (k, v) in out.x_mut().data_mut().iter_mut().enumerate() {
            let c = k % f;
            *v = ((*v as f64 - self.mean[c] as f64) / self.std[c] as f64) as f32;
        }
        Ok(out)
    }

    /// Standardizes one flat `t·b` sample in place.
    pub fn apply_row(&self, row: &mut [f32]) {
        for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = ((*v as f64 - m as f64) / s as f64) as f32;
        }
    }

    pub fn to_extras(&self) -> Vec<(String, Tensor<f32>)> {
        vec![
            (SCALER_MEAN.to_string(), Tensor::vector(self.mean.clone())),
            (SCALER_STD.to_string(), Tensor::vector(self.std.clone())),
        ]
    }

    pub fn from_extras(extras: &[(String, Tensor<f32>)]) -> Result<Self> {
        let get = |name: &str| {
            extras
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.data().to_vec())
                .ok_or_else(|| Error::Format(format!("checkpoint lacks {name}")))
        };
        let (mean, std) = (get(SCALER_MEAN)?, get(SCALER_STD)?);
        if mean.len() != std.len() || std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Format("malformed scaler statistics".into()));
        }
        Ok(ScalerParams { mean, std })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(values: Vec<f32>, n: usize) -> PixelDataset {
        let f = values.len() / n;
        PixelDataset::new(Tensor::new(vec![n, 1, f], values).unwrap(), vec![0; n], vec!["a".into()]).unwrap()
    }

    #[test]
    fn hand_values() {
        let d = ds(vec![1.0, 5.0, 3.0, 5.0], 2);
        let s = ScalerParams::fit(&d);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        let out = s.apply(&d).unwrap();
        assert_eq!(out.x().data(), &[-1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn second_pass_is_identity() {
        let d = crate::data::synth_generate(&crate::data::SynthSpec::balanced(3, 50, 0.2, 3)).unwrap();
        let once = ScalerParams::fit(&d).apply(&d).unwrap();
        let s2 = ScalerParams::fit(&once);
        let twice = s2.apply(&once).unwrap();
        assert!(once.x().max_abs_diff(twice.x()) < 1e-6);
    }

    #[test]
    fn extras_round_trip() {
        let s = ScalerParams { mean: vec![0.5, 1.0], std: vec![2.0, 1.0] };
        assert_eq!(ScalerParams::from_extras(&s.to_extras()).unwrap(), s);
        assert!(ScalerParams::from_extras(&[]).is_err());
    }
}
