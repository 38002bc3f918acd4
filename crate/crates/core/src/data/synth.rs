//! Synthetic phenology generator.
//!
//! Every class gets one seasonal template per raw band (B2, B3, B4, B8):
//! `a·sin(2π(j + φ)/t) + c` over the `t` acquisition dates, with `(a, φ, c)`
//! drawn once from the seed. The NDVI template is derived from the noiseless
//! B8 and B4 curves. Samples are the five templates plus independent Gaussian
//! noise, clamped to `[0, 1]` for reflectances and `[−1, 1]` for NDVI.

use serde::{Deserialize, Serialize};

use super::bands::{ndvi_value, ASSEMBLED_BANDS};
use super::PixelDataset;
use crate::error::{Error, Result};
use crate::tensor::{RngState, Tensor};

/// Land-cover classes of the 15-class reference survey with their labelled
/// pixel counts (92,116 in total).
pub const REFERENCE_LAND_COVER: [(&str, usize); 15] = [
    ("Tomatoes", 3020),
    ("Artificials", 9343),
    ("Trees", 7384),
    ("Rye", 4382),
    ("Wheat", 12826),
    ("Soya", 5836),
    ("Apple", 849),
    ("Peer", 495),
    ("Temp Grass", 1744),
    ("Water", 2451),
    ("Lucerne", 17942),
    ("Drum Wheat", 1188),
    ("Vineyard", 6110),
    ("Barley", 2549),
    ("Maize", 15997),
];

pub const REFERENCE_TOTAL: usize = 92_116;

/// Seasonal template parameters of one class and band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeasonalCurve {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
}

impl SeasonalCurve {
    pub fn at(&self, step: f64, time_steps: usize) -> f64 {
        self.amplitude * (2.0 * std::f64::consts::PI * (step + self.phase) / time_steps as f64).sin() + self.offset
    }
}

/// Generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub time_steps: usize,
    /// Samples per class; its length is the class count.
    pub counts: Vec<usize>,
    pub class_names: Vec<String>,
    /// Standard deviation of the additive reflectance noise.
    pub noise: f64,
    /// Standard deviation, in time steps, of a per-sample shift of the whole
    /// seasonal cycle (sowing-date variability). `0` disables it.
    pub phase_jitter: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec::balanced(15, 200, 0.15, 42)
    }
}

impl SynthSpec {
    /// `classes` classes of `per_class` samples each, 9 dates.
    pub fn balanced(classes: usize, per_class: usize, noise: f64, seed: u64) -> Self {
        SynthSpec {
            time_steps: 9,
            counts: vec![per_class; classes],
            class_names: (0..classes).map(|k| format!("class_{k:02}")).collect(),
            noise,
            phase_jitter: 0.75,
            seed,
        }
    }

    /// 15 classes named and sized in proportion to [`REFERENCE_LAND_COVER`]
    /// (largest-remainder rounding, so `total = 92,116` reproduces it exactly).
    pub fn reference_proportions(total: usize, noise: f64, seed: u64) -> Self {
        let shares: Vec<f64> =
            REFERENCE_LAND_COVER.iter().map(|(_, n)| *n as f64 * total as f64 / REFERENCE_TOTAL as f64).collect();
        let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
        let mut order: Vec<usize> = (0..shares.len()).collect();
        order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(a.cmp(&b)));
        let missing = total - counts.iter().sum::<usize>();
        for &k in order.iter().take(missing) {
            counts[k] += 1;
        }
        SynthSpec {
            counts,
            class_names: REFERENCE_LAND_COVER.iter().map(|(n, _)| n.to_string()).collect(),
            ..SynthSpec::balanced(15, 1, noise, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.counts.is_empty() || self.counts.contains(&0) {
            return Err(Error::param("every class needs a positive sample count"));
        }
        if self.class_names.len() != self.counts.len() {
            return Err(Error::param(format!(
                "{} class names for {} classes",
                self.class_names.len(),
                self.counts.len()
            )));
        }
        if self.time_steps == 0 {
            return Err(Error::param("time_steps must be positive"));
        }
        if !(self.noise >= 0.0) || !(self.phase_jitter >= 0.0) {
            return Err(Error::param("noise and phase jitter must be non-negative"));
        }
        Ok(())
    }

    /// Per-class templates, `[class][band]` for bands B2, B3, B4, B8.
    pub fn templates(&self) -> Vec<[SeasonalCurve; 4]> {
        let mut rng = RngState::new(self.seed);
        (0..self.counts.len())
            .map(|_| {
                [(); 4].map(|_| SeasonalCurve {
                    amplitude: rng.uniform(0.15, 0.35),
                    phase: rng.uniform(0.0, self.time_steps as f64),
                    offset: rng.uniform(0.48, 0.52),
                })
            })
            .collect()
    }

    /// Noise-free `t × 5` feature matrix of class `k` (B2, B3, B4, B8, NDVI).
    pub fn template_features(&self, k: usize) -> Vec<f32> {
        let curves = &self.templates()[k];
        render(curves, self.time_steps, 0.0, || 0.0)
    }
}

fn render(curves: &[SeasonalCurve; 4], t: usize, shift: f64, mut noise: impl FnMut() -> f64) -> Vec<f32> {
    let mut out = Vec::with_capacity(t * ASSEMBLED_BANDS);
    for j in 0..t {
        let v = curves.map(|c| c.at(j as f64 + shift, t));
        let index = ndvi_value(v[3] as f32, v[2] as f32) as f64;
        for b in v {
            out.push((b + noise()).clamp(0.0, 1.0) as f32);
        }
        out.push((index + noise()).clamp(-1.0, 1.0) as f32);
    }
    out
}

/// Generates the dataset described by `spec`, samples grouped by class.
pub fn synth_generate(spec: &SynthSpec) -> Result<PixelDataset> {
    spec.validate()?;
    let templates = spec.templates();
    let t = spec.time_steps;
    let total: usize = spec.counts.iter().sum();
    let mut rng = RngState::new(spec.seed).fork(1);
    let mut data = Vec::with_capacity(total * t * ASSEMBLED_BANDS);
    let mut labels = Vec::with_capacity(total);
    for (k, &n) in spec.counts.iter().enumerate() {
        for _ in 0..n {
            let shift = if spec.phase_jitter > 0.0 { spec.phase_jitter * rng.normal() } else { 0.0 };
            let sigma = spec.noise;
            let sample = render(&templates[k], t, shift, || if sigma > 0.0 { sigma * rng.normal() } else { 0.0 });
            data.extend(sample);
            labels.push(k);
        }
    }
    let x = Tensor::new(vec![total, t, ASSEMBLED_BANDS], data)?;
    Ok(PixelDataset::new(x, labels, spec.class_names.clone())?.with_provenance(format!(
        "synthetic phenology: {} classes, noise {}, phase jitter {}, seed {}",
        spec.counts.len(),
        spec.noise,
        spec.phase_jitter,
        spec.seed
    )))
}
