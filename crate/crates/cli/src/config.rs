use std::path::{Path, PathBuf};

use anyhow::Context;
use pixel_rcnn::data::SynthSpec;
use pixel_rcnn::layers::ModelConfig;
use pixel_rcnn::training::TrainConfig;
use serde::{Deserialize, Serialize};

/// Where `train`, `lr-find` and `pca` get their samples when no `--data`
/// flag is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub synth: SynthSpec,
    pub train_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { path: None, synth: SynthSpec::default(), train_fraction: 0.6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            data: DataConfig::default(),
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(pixel_rcnn::Error::from)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| pixel_rcnn::Error::Usage(format!("config {}: {e}", path.display())).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let mut back: RunConfig = serde_json::from_str(&text).unwrap();
        back.train.seed = c.train.seed;
        assert_eq!(back, c);
        assert_eq!(c.train.epochs, 150);
        assert_eq!(c.train.batch_size, 128);
    }

    #[test]
    fn partial_and_unknown_keys() {
        let c: RunConfig = serde_json::from_str(r#"{"train": {"epochs": 3}, "model": {"K": 4}}"#).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.model.classes, 4);
        assert_eq!(c.model.lstm_units, 32);
        assert!(serde_json::from_str::<RunConfig>(r#"{"trian": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"train": {"lr": 1}}"#).is_err());
    }
}
