use std::io::Write;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lr_finder::{lr_range_sweep, LrRangeResult};
use super::optim::{amsgrad_step, AmsGradConfig, AmsGradState};
use super::schedule::{cosine_lr, CosineSchedule};
use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::layers::{sample_loss, Mode, Params, PixelRcnn};
use crate::tensor::{argmax, RngState, Tensor};

/// Sweep used to pick `eta_max` when no schedule is configured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrSearch {
    pub lo: f64,
    pub hi: f64,
    pub iters: usize,
}

impl Default for LrSearch {
    fn default() -> Self {
        LrSearch { lo: 1e-5, hi: 0.05, iters: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(rename = "batch")]
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// `None` derives the schedule from an LR range test: `eta_max` at the
    /// suggestion, `eta_min = eta_max / 100`, period of ten epochs, cyclic.
    pub schedule: Option<CosineSchedule>,
    pub lr_search: LrSearch,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let o = AmsGradConfig::default();
        TrainConfig {
            epochs: 150,
            batch_size: 128,
            beta1: o.beta1,
            beta2: o.beta2,
            eps: o.eps,
            schedule: None,
            lr_search: LrSearch::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self) -> AmsGradConfig {
        AmsGradConfig { beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::param("epochs and batch size must be positive"));
        }
        self.optimizer().validate()?;
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self, samples: usize) -> usize {
        samples.div_ceil(self.batch_size)
    }

    /// Schedule derived from a learning-rate suggestion.
    pub fn derived_schedule(&self, eta_max: f64, samples: usize) -> CosineSchedule {
        CosineSchedule {
            eta_max,
            eta_min: eta_max / 100.0,
            period: 10 * self.steps_per_epoch(samples) as u64,
            cyclic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    /// Mean training-mode loss over the epoch's samples.
    pub train_loss: f64,
    /// Training-mode accuracy accumulated during the epoch.
    pub train_oa: f64,
    pub test_oa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochRecord>,
    pub schedule: CosineSchedule,
    pub lr_suggestion: Option<f64>,
    pub steps: u64,
    pub param_count: usize,
    /// Diagnostic when a non-finite loss or gradient stopped training.
    pub aborted: Option<String>,
}

impl TrainingReport {
    pub fn final_test_oa(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.test_oa)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,lr,train_loss,train_oa,test_oa")?;
        for e in &self.epochs {
            let test = e.test_oa.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", e.epoch, e.lr, e.train_loss, e.train_oa, test)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: &mut W) -> Result<()> {
        serde_json::to_writer_pretty(&mut *w, self).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    }
}

struct BatchOutcome {
    grads: Params<f32>,
    loss: f64,
    correct: usize,
}

/// Mean gradient and loss of one mini-batch in training mode. Samples run in
/// parallel; their gradients are summed in batch order.
fn batch_gradient(model: &PixelRcnn<f32>, data: &PixelDataset, batch: &[usize], dropout: &RngState) -> Result<BatchOutcome> {
    let per_sample: Vec<Result<(Params<f32>, f64, bool)>> = batch
        .par_iter()
        .enumerate()
        .map(|(pos, &i)| {
            let mut rng = dropout.fork(pos as u64);
            let label = data.labels()[i];
            let (probs, cache) = model.forward(&data.sample(i), Mode::Train, &mut rng)?;
            let loss = sample_loss(&probs, label) as f64;
            let grads = model.backward(&cache, label)?;
            Ok((grads, loss, argmax(&probs) == label))
        })
        .collect();
    let mut grads: Option<Params<f32>> = None;
    let (mut loss, mut correct) = (0.0, 0);
    for r in per_sample {
        let (g, l, ok) = r?;
        loss += l;
        correct += ok as usize;
        match grads.as_mut() {
            None => grads = Some(g),
            Some(acc) => acc.add_assign(&g)?,
        }
    }
    let mut grads = grads.ok_or_else(|| Error::EmptyDataset("empty batch".into()))?;
    grads.scale(1.0 / batch.len() as f32);
    Ok(BatchOutcome { grads, loss: loss / batch.len() as f64, correct })
}

fn apply_step(
    model: &mut PixelRcnn<f32>,
    state: &mut AmsGradState<f32>,
    grads: &Params<f32>,
    lr: f64,
    cfg: &AmsGradConfig,
) -> Result<()> {
    let g: Vec<&Tensor<f32>> = grads.tensors().into_iter().map(|(_, t)| t).collect();
    let mut p = model.params_mut().tensors_mut();
    amsgrad_step(state, &mut p, &g, lr, cfg)
}

fn optimizer_state(model: &PixelRcnn<f32>) -> AmsGradState<f32> {
    let tensors: Vec<&Tensor<f32>> = model.params().tensors().into_iter().map(|(_, t)| t).collect();
    AmsGradState::new(&tensors)
}

fn shuffle_rng(seed: u64) -> RngState {
    RngState::new(seed).fork(0x5348_5546)
}

fn dropout_rng(seed: u64, step: u64) -> RngState {
    RngState::new(seed).fork(0x4452_4f50_0000_0000 | step)
}

/// Learning-rate range test on a copy of `model`; the caller's model is not
/// modified. Steps draw mini-batches from seeded per-epoch permutations.
pub fn lr_range_test(
    model: &PixelRcnn<f32>,
    data: &PixelDataset,
    search: &LrSearch,
    cfg: &TrainConfig,
) -> Result<LrRangeResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset("no samples for the LR range test".into()));
    }
    let mut probe = model.clone();
    let mut state = optimizer_state(&probe);
    let opt = cfg.optimizer();
    let mut shuffler = shuffle_rng(cfg.seed ^ 0x4c52);
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut step = 0u64;
    lr_range_sweep(search.lo, search.hi, search.iters, |lr| {
        if cursor >= order.len() {
            order = (0..data.len()).collect();
            shuffler.shuffle(&mut order);
            cursor = 0;
        }
        let end = (cursor + cfg.batch_size).min(order.len());
        let out = batch_gradient(&probe, data, &order[cursor..end], &dropout_rng(cfg.seed ^ 0x4c52, step))?;
        cursor = end;
        step += 1;
        if out.loss.is_finite() {
            apply_step(&mut probe, &mut state, &out.grads, lr, &opt)?;
        }
        Ok(out.loss)
    })
}

/// Eval-mode class predictions for every sample.
pub fn predict_dataset(model: &PixelRcnn<f32>, data: &PixelDataset) -> Result<Vec<usize>> {
    (0..data.len()).into_par_iter().map(|i| model.predict(&data.sample(i))).collect()
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len().max(1) as f64
}

/// Mini-batch training with seeded per-epoch shuffling (last partial batch
/// kept), dropout, AMSGrad and a cosine-annealed learning rate.
///
/// A non-finite loss or gradient stops training; the report then carries the
/// epochs completed so far and a diagnostic in `aborted`.
pub fn fit(
    model: &mut PixelRcnn<f32>,
    train: &PixelDataset,
    test: Option<&PixelDataset>,
    cfg: &TrainConfig,
) -> Result<TrainingReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("training split is empty".into()));
    }
    let (schedule, lr_suggestion) = match cfg.schedule {
        Some(s) => (s, None),
        None => {
            let sweep = lr_range_test(model, train, &cfg.lr_search, cfg)?;
            let eta = sweep
                .suggestion
                .ok_or_else(|| Error::Numeric("LR range test diverged before producing a suggestion".into()))?;
            info!("lr range test suggests eta_max = {eta}");
            (cfg.derived_schedule(eta, train.len()), Some(eta))
        }
    };
    schedule.validate()?;

    let opt = cfg.optimizer();
    let mut state = optimizer_state(model);
    let mut shuffler = shuffle_rng(cfg.seed);
    let mut report = TrainingReport {
        epochs: Vec::with_capacity(cfg.epochs),
        schedule,
        lr_suggestion,
        steps: 0,
        param_count: model.param_count(),
        aborted: None,
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        shuffler.shuffle(&mut order);
        let (mut loss_sum, mut correct, mut lr) = (0.0, 0, schedule.eta_max);
        for batch in order.chunks(cfg.batch_size) {
            let step = report.steps;
            lr = cosine_lr(&schedule, step)?;
            let out = match batch_gradient(model, train, batch, &dropout_rng(cfg.seed, step)) {
                Ok(out) => out,
                Err(e) if e.is_numeric() => {
                    report.aborted = Some(format!("{e} at epoch {epoch}, step {step}, lr {lr}"));
                    return Ok(report);
                }
                Err(e) => return Err(e),
            };
            if !out.loss.is_finite() {
                report.aborted = Some(format!("non-finite loss at epoch {epoch}, step {step}, lr {lr}"));
                return Ok(report);
            }
            if let Err(e) = apply_step(model, &mut state, &out.grads, lr, &opt) {
                if e.is_numeric() {
                    report.aborted = Some(format!("{e} at epoch {epoch}, step {step}, lr {lr}"));
                    return Ok(report);
                }
                return Err(e);
            }
            loss_sum += out.loss * batch.len() as f64;
            correct += out.correct;
            report.steps += 1;
        }
        let test_oa = match test {
            Some(t) => Some(accuracy(&predict_dataset(model, t)?, t.labels())),
            None => None,
        };
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train.len() as f64,
            train_oa: correct as f64 / train.len() as f64,
            test_oa,
        };
        debug!("epoch {epoch}: loss {:.5} train OA {:.4} test OA {:?}", record.train_loss, record.train_oa, test_oa);
        report.epochs.push(record);
    }
    Ok(report)
}
