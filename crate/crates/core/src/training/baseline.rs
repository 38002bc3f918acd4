use serde::{Deserialize, Serialize};

use super::optim::{amsgrad_step, AmsGradConfig, AmsGradState};
use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::layers::DenseSoftmaxHead;
use crate::tensor::{argmax, RngState, Tensor};

/// Multinomial logistic regression on flattened `t·b` features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let o = AmsGradConfig::default();
        BaselineConfig { epochs: 100, batch: 128, lr: 0.01, beta1: o.beta1, beta2: o.beta2, eps: o.eps, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct BaselineReport {
    pub model: DenseSoftmaxHead<f32>,
    pub train_oa: f64,
    pub test_oa: Option<f64>,
}

pub fn logistic_predict(model: &DenseSoftmaxHead<f32>, data: &PixelDataset) -> Result<Vec<usize>> {
    (0..data.len()).map(|i| Ok(argmax(&model.scores(data.row(i))?))).collect()
}

fn oa(model: &DenseSoftmaxHead<f32>, data: &PixelDataset) -> Result<f64> {
    let p = logistic_predict(model, data)?;
    Ok(p.iter().zip(data.labels()).filter(|(a, b)| a == b).count() as f64 / data.len() as f64)
}

/// Trains from zero weights with AMSGrad on the mean cross-entropy.
pub fn logistic_baseline_fit(
    train: &PixelDataset,
    test: Option<&PixelDataset>,
    cfg: &BaselineConfig,
) -> Result<BaselineReport> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training split is empty".into()));
    }
    if cfg.epochs == 0 || cfg.batch == 0 {
        return Err(Error::param("epochs and batch must be positive"));
    }
    let opt = AmsGradConfig { beta1: cfg.beta1, beta2: cfg.beta2, eps: cfg.eps };
    opt.validate()?;
    let mut model = DenseSoftmaxHead::<f32>::zeros(train.features(), train.num_classes());
    let mut state = AmsGradState::new(&[&model.w, &model.b]);
    let mut rng = RngState::new(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch) {
            let mut acc = DenseSoftmaxHead::<f32>::zeros(train.features(), train.num_classes());
            for &i in batch {
                let x = train.row(i);
                let probs = model.forward(x)?;
                let (g, _) = model.backward(x, &probs, train.labels()[i]);
                acc.w.add_assign(&g.w)?;
                acc.b.add_assign(&g.b)?;
            }
            let n = 1.0 / batch.len() as f32;
            acc.w.scale(n);
            acc.b.scale(n);
            let grads: [&Tensor<f32>; 2] = [&acc.w, &acc.b];
            amsgrad_step(&mut state, &mut [&mut model.w, &mut model.b], &grads, cfg.lr, &opt)
                .map_err(|e| Error::Numeric(format!("baseline epoch {}: {e}", epoch + 1)))?;
        }
    }
    let train_oa = oa(&model, train)?;
    let test_oa = test.map(|t| oa(&model, t)).transpose()?;
    Ok(BaselineReport { model, train_oa, test_oa })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_two_class() {
        let n = 40;
        let data: Vec<f32> = (0..n).flat_map(|i| {
            let s = if i < n / 2 { -1.0 } else { 1.0 };
            [s * (1.0 + i as f32 / 100.0), 0.3 * s]
        }).collect();
        let labels = (0..n).map(|i| (i >= n / 2) as usize).collect();
        let d = PixelDataset::new(Tensor::new(vec![n, 1, 2], data).unwrap(), labels, vec!["a".into(), "b".into()]).unwrap();
        let cfg = BaselineConfig { epochs: 20, batch: 8, seed: 1, ..Default::default() };
        let r = logistic_baseline_fit(&d, Some(&d), &cfg).unwrap();
        assert_eq!(r.train_oa, 1.0);
        let again = logistic_baseline_fit(&d, Some(&d), &cfg).unwrap();
        assert_eq!(again.model, r.model);
    }
}
