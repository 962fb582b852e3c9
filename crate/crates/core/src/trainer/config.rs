use serde::{Deserialize, Serialize};

/// Parameter update rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Learning-rate decay over the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Half-cosine from the base rate to zero over all optimizer steps.
    Cosine,
}

impl LrSchedule {
    /// Rate for optimizer step `step` of `total`.
    pub fn rate(self, base: f64, step: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => {
                let frac = step as f64 / total.max(1) as f64;
                0.5 * base * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

/// Training hyperparameters. The random seed is supplied per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    /// Lipschitz budget of the per-neighbor network.
    pub gamma_phi: f64,
    /// Lipschitz budget of the aggregate network.
    pub gamma_rho: f64,
    /// Share of time chunks held out for validation, in (0, 0.5].
    pub validation_fraction: f64,
    /// Length of the time chunks used as split units, s.
    pub chunk_seconds: f64,
    /// Reshuffle the training set every epoch; otherwise visit in order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 64,
            learning_rate: 1e-3,
            schedule: LrSchedule::Cosine,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            gamma_phi: crate::net::DEFAULT_GAMMA,
            gamma_rho: crate::net::DEFAULT_GAMMA,
            validation_fraction: 0.2,
            chunk_seconds: 5.0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs == 0 {
            return Err("train.epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return Err("train.batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return Err("train.learning_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err("train.beta1 and train.beta2 must lie in [0, 1)".into());
        }
        if !(self.gamma_phi > 0.0) {
            return Err("train.gamma_phi must be positive".into());
        }
        if !(self.gamma_rho > 0.0) {
            return Err("train.gamma_rho must be positive".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err("train.validation_fraction must lie in (0, 0.5]".into());
        }
        if !(self.chunk_seconds > 0.0) {
            return Err("train.chunk_seconds must be positive".into());
        }
        Ok(())
    }
}
