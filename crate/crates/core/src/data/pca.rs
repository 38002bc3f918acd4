use std::io::Write;

use super::PixelDataset;
use crate::error::{Error, Result};
use crate::tensor::{svd_covariance, Tensor};

/// Samples projected onto the leading principal axes of the standardized,
/// flattened features.
#[derive(Clone, Debug)]
pub struct PcaProjection {
    /// `i × n` coordinates.
    pub points: Tensor<f64>,
    /// Explained-variance ratio of the first `n` components.
    pub ratios: Vec<f64>,
    /// Ratios of every component, descending; cumulative sums give the Pareto curve.
    pub all_ratios: Vec<f64>,
    pub labels: Vec<usize>,
}

impl PcaProjection {
    pub fn cumulative(&self) -> Vec<f64> {
        self.all_ratios
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }
}

/// Per-feature z-scores of the flattened samples; constant features keep σ = 1.
fn standardized(d: &PixelDataset) -> Tensor<f64> {
    let (n, f) = (d.len(), d.features());
    let mut x = Tensor::from_fn(&[n, f], |k| d.row(k / f)[k % f] as f64);
    for c in 0..f {
        let mean = (0..n).map(|r| x.at2(r, c)).sum::<f64>() / n as f64;
        let var = (0..n).map(|r| (x.at2(r, c) - mean).powi(2)).sum::<f64>() / n as f64;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        for r in 0..n {
            let v = &mut x.row_mut(r)[c];
            *v = (*v - mean) / std;
        }
    }
    x
}

pub fn pca_project(d: &PixelDataset, n_components: usize) -> Result<PcaProjection> {
    let f = d.features();
    if n_components == 0 || n_components > f {
        return Err(Error::param(format!("n_components must be in 1..={f}, got {n_components}")));
    }
    let x = standardized(d);
    let (axes, variances) = svd_covariance(&x)?;
    let total: f64 = variances.iter().sum();
    let all_ratios: Vec<f64> =
        variances.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();

    let mean: Vec<f64> = (0..f).map(|c| (0..d.len()).map(|r| x.at2(r, c)).sum::<f64>() / d.len() as f64).collect();
    let mut points = Tensor::zeros(&[d.len(), n_components]);
    for r in 0..d.len() {
        let row = x.row(r);
        for k in 0..n_components {
            points.row_mut(r)[k] = (0..f).map(|c| (row[c] - mean[c]) * axes.at2(c, k)).sum();
        }
    }
    Ok(PcaProjection {
        points,
        ratios: all_ratios[..n_components].to_vec(),
        all_ratios,
        labels: d.labels().to_vec(),
    })
}

/// `c1,…,cn,label` rows.
pub fn write_pca_csv<W: Write>(w: &mut W, p: &PcaProjection) -> Result<()> {
    let n = p.points.cols();
    let header: Vec<String> = (1..=n).map(|k| format!("c{k}")).collect();
    writeln!(w, "{},label", header.join(","))?;
    for (r, label) in p.labels.iter().enumerate() {
        let coords: Vec<String> = p.points.row(r).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{},{label}", coords.join(","))?;
    }
    Ok(())
}

/// `component,ratio,cumulative` rows for every component.
pub fn write_ratios_csv<W: Write>(w: &mut W, p: &PcaProjection) -> Result<()> {
    writeln!(w, "component,ratio,cumulative")?;
    for (k, (r, c)) in p.all_ratios.iter().zip(p.cumulative()).enumerate() {
        writeln!(w, "{},{r},{c}", k + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthSpec};
    use crate::tensor::RngState;

    #[test]
    fn plane_data_has_two_components() {
        let mut rng = RngState::new(4);
        let n = 60;
        let mut data = Vec::new();
        for _ in 0..n {
            let (a, b) = (rng.normal(), rng.normal());
            data.extend([a as f32, b as f32, (a + b) as f32, (a - 2.0 * b) as f32]);
        }
        let d = PixelDataset::new(Tensor::new(vec![n, 2, 2], data).unwrap(), vec![0; n], vec!["a".into()]).unwrap();
        let p = pca_project(&d, 2).unwrap();
        assert!((p.ratios.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ratios_descending_and_bounded() {
        let d = synth_generate(&SynthSpec::balanced(4, 30, 0.1, 1)).unwrap();
        let p = pca_project(&d, 3).unwrap();
        assert!(p.all_ratios.windows(2).all(|w| w[0] >= w[1]));
        assert!(p.all_ratios.iter().sum::<f64>() <= 1.0 + 1e-10);
        assert_eq!(p.points.shape(), &[120, 3]);
        let mut csv = Vec::new();
        write_pca_csv(&mut csv, &p).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("c1,c2,c3,label\n"));
    }

    #[test]
    fn too_many_components() {
        let d = synth_generate(&SynthSpec::balanced(2, 5, 0.1, 1)).unwrap();
        assert!(matches!(pca_project(&d, 46), Err(Error::Parameter(_))));
    }
}
