use crate::net::DeepSetsModel;
use crate::sim::{oracle_fa, OracleParams, RelativeState};

/// Anything that maps a neighbor set to a predicted vertical interaction
/// force.
pub trait InteractionPredictor: Sync {
    fn predict(&self, neighbors: &[RelativeState]) -> f64;
}

/// Predicts no interaction; the baseline controller.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPredictor;

impl InteractionPredictor for ZeroPredictor {
    fn predict(&self, _neighbors: &[RelativeState]) -> f64 {
        0.0
    }
}

impl InteractionPredictor for DeepSetsModel {
    fn predict(&self, neighbors: &[RelativeState]) -> f64 {
        self.forward(neighbors)
    }
}

/// Uses the ground-truth force as the prediction.
impl InteractionPredictor for OracleParams {
    fn predict(&self, neighbors: &[RelativeState]) -> f64 {
        oracle_fa(neighbors, self)
    }
}
