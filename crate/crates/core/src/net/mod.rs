//! Small feed-forward network engine: ReLU MLPs with exact gradients, the
//! deep-sets composition and spectral normalization.

mod deepsets;
mod io;
mod lipschitz;
mod mlp;
mod spectral;

pub use deepsets::{DeepSetsModel, Gradients, ModelMeta, PassCounter, Workspace, DEFAULT_GAMMA, PHI_DIMS, RHO_DIMS};
pub use io::{load_model, model_from_str, model_to_string, save_model};
pub use lipschitz::{lipschitz_estimate, single_neighbor};
pub use mlp::{Dense, Mlp, MlpCache, MlpGrads};
pub use spectral::{power_iteration, spectral_normalize, SpectralState, POWER_MAX_ITERS, POWER_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Lipschitz budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}
