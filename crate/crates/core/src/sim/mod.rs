//! Rigid-body multirotor swarm dynamics and the synthetic interaction
//! force used as ground truth.

mod dynamics;
mod mixer;
mod oracle;
mod types;

pub use dynamics::{nominal_derivative, reorthonormalize, rk4_vehicle, skew, step_rk4, StateDerivative, MAX_DT};
pub use mixer::{wrench_to_motors, MotorCommand};
pub use oracle::{oracle_fa, OracleParams, ANCHOR_FORCE, ANCHOR_HEIGHT};
pub use types::{canonical_order, RelativeState, VehicleParams, VehicleState, WorldState};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("simulation diverged at t = {t:.4} s on vehicle {vehicle}: {reason}")]
    Diverged { t: f64, vehicle: usize, reason: String },
}
