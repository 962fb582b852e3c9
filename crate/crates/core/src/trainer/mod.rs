//! Residual labels, datasets, curriculum collection and training.

mod config;
mod curriculum;
mod dataset;
mod label;
mod train;

pub use config::{LrSchedule, OptimizerKind, TrainConfig};
pub use curriculum::{collect_curriculum, run_curriculum, CurriculumRun, CurriculumStage, MAX_STAGE, MIN_STAGE};
pub use dataset::{Dataset, Sample, Standardizer, MAX_SLOTS};
pub use label::{extract_label, samples_from_log, LoggedStep};
pub use train::{evaluate, fold_standardizer, train, EpochLoss, EvalReport, SizeMetrics, TrainOutcome};

use thiserror::Error;

use crate::harness::HarnessError;
use crate::net::NetError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    Empty,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("dataset format: {0}")]
    Format(String),
    #[error("curriculum: {0}")]
    Curriculum(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
