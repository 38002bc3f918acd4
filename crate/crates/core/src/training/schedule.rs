use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-cosine decay from `eta_max` to `eta_min` over `period` steps,
/// restarting every period when `cyclic`, otherwise holding `eta_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineSchedule {
    pub eta_max: f64,
    pub eta_min: f64,
    pub period: u64,
    pub cyclic: bool,
}

impl CosineSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::param("cosine period must be positive"));
        }
        if !(self.eta_min > 0.0) || !(self.eta_max >= self.eta_min) || !self.eta_max.is_finite() {
            return Err(Error::param(format!(
                "need 0 < eta_min <= eta_max, got {} and {}",
                self.eta_min, self.eta_max
            )));
        }
        Ok(())
    }
}

pub fn cosine_lr(s: &CosineSchedule, step: u64) -> Result<f64> {
    s.validate()?;
    let phase = if s.cyclic {
        step % s.period
    } else if step >= s.period {
        return Ok(s.eta_min);
    } else {
        step
    };
    let cos = (std::f64::consts::PI * phase as f64 / s.period as f64).cos();
    let lr = s.eta_min + 0.5 * (s.eta_max - s.eta_min) * (1.0 + cos);
    Ok(lr.clamp(s.eta_min, s.eta_max))
}
