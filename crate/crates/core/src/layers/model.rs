use serde::{Deserialize, Serialize};

use super::{dropout_apply, Conv2d, ConvCache, DenseSoftmaxHead, LstmCache, LstmCell, Mode, TimeDistributedDense};
use crate::error::{Error, Result};
use crate::tensor::{argmax, Real, RngState, Tensor};

/// Architecture hyperparameters. Defaults are the published Pixel R-CNN
/// settings: 9 time steps of 5 bands, 32 LSTM units, a 9-wide time-distributed
/// layer, 16 filters of 3×3 then 32 filters of 7×7, 15 classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    #[serde(rename = "t")]
    pub time_steps: usize,
    #[serde(rename = "b")]
    pub bands: usize,
    #[serde(rename = "u")]
    pub lstm_units: usize,
    pub d_out: usize,
    pub n1: usize,
    pub f1: usize,
    pub n2: usize,
    pub f2: usize,
    #[serde(rename = "K")]
    pub classes: usize,
    pub peepholes: bool,
    pub dropout_p: f64,
    pub tdd_relu: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            time_steps: 9,
            bands: 5,
            lstm_units: 32,
            d_out: 9,
            n1: 16,
            f1: 3,
            n2: 32,
            f2: 7,
            classes: 15,
            peepholes: false,
            dropout_p: 0.2,
            tdd_relu: false,
        }
    }
}

impl ModelConfig {
    /// Checks that every stage of the shape chain is non-empty and returns
    /// the flattened feature size fed to the softmax head.
    pub fn validate(&self) -> Result<usize> {
        let sizes = [
            ("t", self.time_steps),
            ("b", self.bands),
            ("u", self.lstm_units),
            ("d_out", self.d_out),
            ("n1", self.n1),
            ("f1", self.f1),
            ("n2", self.n2),
            ("f2", self.f2),
            ("K", self.classes),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::shape(format!("model size {name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::param(format!("dropout_p must be in [0, 1), got {}", self.dropout_p)));
        }
        let (h1, w1) = self.conv1_dims()?;
        if h1 < self.f2 || w1 < self.f2 {
            return Err(Error::shape(format!(
                "conv1 output {h1} × {w1} is smaller than the conv2 filter {0} × {0}",
                self.f2
            )));
        }
        Ok((h1 - self.f2 + 1) * (w1 - self.f2 + 1) * self.n2)
    }

    fn conv1_dims(&self) -> Result<(usize, usize)> {
        if self.time_steps < self.f1 || self.d_out < self.f1 {
            return Err(Error::shape(format!(
                "{} × {} canvas is smaller than the conv1 filter {2} × {2}",
                self.time_steps, self.d_out, self.f1
            )));
        }
        Ok((self.time_steps - self.f1 + 1, self.d_out - self.f1 + 1))
    }

    /// Integer encoding used by checkpoints.
    pub fn to_ints(&self) -> [u32; 11] {
        [
            self.time_steps as u32,
            self.bands as u32,
            self.lstm_units as u32,
            self.d_out as u32,
            self.n1 as u32,
            self.f1 as u32,
            self.n2 as u32,
            self.f2 as u32,
            self.classes as u32,
            self.peepholes as u32,
            self.tdd_relu as u32,
        ]
    }

    pub fn from_ints(v: &[u32; 11], dropout_p: f64) -> Self {
        ModelConfig {
            time_steps: v[0] as usize,
            bands: v[1] as usize,
            lstm_units: v[2] as usize,
            d_out: v[3] as usize,
            n1: v[4] as usize,
            f1: v[5] as usize,
            n2: v[6] as usize,
            f2: v[7] as usize,
            classes: v[8] as usize,
            peepholes: v[9] != 0,
            tdd_relu: v[10] != 0,
            dropout_p,
        }
    }
}

/// All trainable tensors. Also used as the gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T: Real = f32> {
    pub lstm: LstmCell<T>,
    pub tdd: TimeDistributedDense<T>,
    pub conv1: Conv2d<T>,
    pub conv2: Conv2d<T>,
    pub head: DenseSoftmaxHead<T>,
}

impl<T: Real> Params<T> {
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        let flat = config.validate()?;
        Ok(Params {
            lstm: LstmCell::zeros(config.bands, config.lstm_units, config.peepholes),
            tdd: TimeDistributedDense::zeros(config.lstm_units, config.d_out),
            conv1: Conv2d::zeros(config.f1, 1, config.n1),
            conv2: Conv2d::zeros(config.f2, config.n1, config.n2),
            head: DenseSoftmaxHead::zeros(flat, config.classes),
        })
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out: Vec<(String, &Tensor<T>)> =
            self.lstm.tensors().into_iter().map(|(n, t)| (format!("lstm.{n}"), t)).collect();
        out.extend([
            ("tdd.w".to_string(), &self.tdd.w),
            ("tdd.b".to_string(), &self.tdd.b),
            ("conv1.w".to_string(), &self.conv1.filters),
            ("conv1.b".to_string(), &self.conv1.bias),
            ("conv2.w".to_string(), &self.conv2.filters),
            ("conv2.b".to_string(), &self.conv2.bias),
            ("head.w".to_string(), &self.head.w),
            ("head.b".to_string(), &self.head.b),
        ]);
        out
    }

    /// Same order as [`Params::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = self.lstm.tensors_mut();
        out.extend([
            &mut self.tdd.w,
            &mut self.tdd.b,
            &mut self.conv1.filters,
            &mut self.conv1.bias,
            &mut self.conv2.filters,
            &mut self.conv2.bias,
            &mut self.head.w,
            &mut self.head.b,
        ]);
        out
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Element-wise `self += other`.
    pub fn add_assign(&mut self, other: &Params<T>) -> Result<()> {
        let theirs: Vec<&Tensor<T>> = other.tensors().into_iter().map(|(_, t)| t).collect();
        let mine = self.tensors_mut();
        if mine.len() != theirs.len() {
            return Err(Error::shape("parameter sets differ"));
        }
        for (a, b) in mine.into_iter().zip(theirs) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        self.tensors_mut().into_iter().for_each(|t| t.scale(factor));
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        let lstm = LstmCell {
            w_x: self.lstm.w_x.cast(),
            w_h: self.lstm.w_h.cast(),
            bias: self.lstm.bias.cast(),
            peephole: self.lstm.peephole.as_ref().map(Tensor::cast),
        };
        Params {
            lstm,
            tdd: TimeDistributedDense { w: self.tdd.w.cast(), b: self.tdd.b.cast() },
            conv1: Conv2d { filters: self.conv1.filters.cast(), bias: self.conv1.bias.cast() },
            conv2: Conv2d { filters: self.conv2.filters.cast(), bias: self.conv2.bias.cast() },
            head: DenseSoftmaxHead { w: self.head.w.cast(), b: self.head.b.cast() },
        }
    }
}

/// Intermediate activations of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T: Real = f32> {
    version: u64,
    pub mode: Mode,
    pub lstm: LstmCache<T>,
    pub y_lstm: Tensor<T>,
    pub dropout_mask: Tensor<T>,
    pub y_dropped: Tensor<T>,
    pub y_timed: Tensor<T>,
    pub conv1: ConvCache<T>,
    pub conv2: ConvCache<T>,
    pub features: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Real> ForwardCache<T> {
    /// Shapes of every stage from the LSTM output to the class probabilities.
    pub fn stage_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            ("lstm", self.y_lstm.shape().to_vec()),
            ("time_distributed", self.y_timed.shape().to_vec()),
            ("reshape", self.conv1.input.shape().to_vec()),
            ("conv1", self.conv1.output.shape().to_vec()),
            ("conv2", self.conv2.output.shape().to_vec()),
            ("flatten", vec![self.features.len()]),
            ("softmax", vec![self.probs.len()]),
        ]
    }
}

/// LSTM → dropout → time-distributed dense → reshape → conv1 → conv2 →
/// flatten → dense softmax.
#[derive(Clone, Debug)]
pub struct PixelRcnn<T: Real = f32> {
    config: ModelConfig,
    params: Params<T>,
    version: u64,
}

impl<T: Real> PixelRcnn<T> {
    /// Seeded initialization of every layer, in pipeline order.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let flat = config.validate()?;
        let mut rng = RngState::new(seed);
        let params = Params {
            lstm: LstmCell::init(&mut rng, config.bands, config.lstm_units, config.peepholes)?,
            tdd: TimeDistributedDense::init(&mut rng, config.lstm_units, config.d_out)?,
            conv1: Conv2d::init(&mut rng, config.f1, 1, config.n1)?,
            conv2: Conv2d::init(&mut rng, config.f2, config.n1, config.n2)?,
            head: DenseSoftmaxHead::init(&mut rng, flat, config.classes)?,
        };
        Ok(PixelRcnn { config, params, version: 0 })
    }

    pub fn from_params(config: ModelConfig, params: Params<T>) -> Result<Self> {
        let expected = Params::<T>::zeros(&config)?;
        let lhs: Vec<_> = expected.tensors().iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect();
        let rhs: Vec<_> = params.tensors().iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect();
        if lhs != rhs {
            return Err(Error::shape(format!("parameters {rhs:?} do not match config {lhs:?}")));
        }
        Ok(PixelRcnn { config, params, version: 0 })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    /// Mutable parameter access. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut Params<T> {
        self.version += 1;
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    pub fn cast<U: Real>(&self) -> PixelRcnn<U> {
        PixelRcnn { config: self.config.clone(), params: self.params.cast(), version: 0 }
    }

    /// Class probabilities for one `t × b` sample. `rng` is only drawn from
    /// in training mode (dropout).
    pub fn forward(&self, x: &Tensor<T>, mode: Mode, rng: &mut RngState) -> Result<(Vec<T>, ForwardCache<T>)> {
        let c = &self.config;
        if x.shape() != [c.time_steps, c.bands] {
            return Err(Error::shape(format!(
                "model expects a {} × {} sample, got {:?}",
                c.time_steps,
                c.bands,
                x.shape()
            )));
        }
        let (y_lstm, lstm) = self.params.lstm.forward_sequence(x)?;
        let (y_dropped, dropout_mask) = dropout_apply(&y_lstm, c.dropout_p, mode, rng)?;
        let y_timed = self.params.tdd.forward(&y_dropped, c.tdd_relu)?;
        let canvas = y_timed.clone().reshape(&[c.time_steps, c.d_out, 1])?;
        let a1 = self.params.conv1.forward(&canvas)?;
        let a2 = self.params.conv2.forward(&a1)?;
        let features = a2.data().to_vec();
        let probs = self.params.head.forward(&features)?;
        let cache = ForwardCache {
            version: self.version,
            mode,
            lstm,
            y_lstm,
            dropout_mask,
            y_dropped,
            y_timed,
            conv1: ConvCache { input: canvas, output: a1.clone() },
            conv2: ConvCache { input: a1, output: a2 },
            features,
            probs: probs.clone(),
        };
        Ok((probs, cache))
    }

    /// Deterministic inference.
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.forward(x, Mode::Eval, &mut RngState::new(0))
    }

    pub fn predict_proba(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        Ok(self.forward_eval(x)?.0)
    }

    pub fn predict(&self, x: &Tensor<T>) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    /// Gradient of the single-sample cross-entropy `−ln p̂_label` with
    /// respect to every trainable parameter, reusing the cached dropout mask.
    pub fn backward(&self, cache: &ForwardCache<T>, label: usize) -> Result<Params<T>> {
        if cache.version != self.version {
            return Err(Error::Usage("forward cache is stale: parameters changed since the forward pass".into()));
        }
        let c = &self.config;
        if label >= c.classes {
            return Err(Error::data(format!("label {label} out of range for {} classes", c.classes)));
        }
        let p = &self.params;
        let (head, d_features) = p.head.backward(&cache.features, &cache.probs, label);
        let d_a2 = Tensor::new(cache.conv2.output.shape().to_vec(), d_features)?;
        let (conv2, d_a1) = p.conv2.backward(&cache.conv2, &d_a2)?;
        let (conv1, d_canvas) = p.conv1.backward(&cache.conv1, &d_a1)?;
        let d_timed = d_canvas.reshape(&[c.time_steps, c.d_out])?;
        let (tdd, d_dropped) = p.tdd.backward(&cache.y_dropped, &cache.y_timed, &d_timed, c.tdd_relu)?;
        let d_lstm = Tensor::from_fn(d_dropped.shape(), |k| d_dropped.data()[k] * cache.dropout_mask.data()[k]);
        let (lstm, _) = p.lstm.backward_sequence(&cache.lstm, &d_lstm)?;
        Ok(Params { lstm, tdd, conv1, conv2, head })
    }
}

/// Single-sample cross-entropy with the log argument clamped at `1e-12`.
pub(crate) fn sample_loss<T: Real>(probs: &[T], label: usize) -> T {
    -probs[label].max(T::of(1e-12)).ln()
}
