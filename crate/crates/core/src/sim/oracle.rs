//! Synthetic ground-truth interaction force.
//!
//! A vehicle flying inside another vehicle's wake is pushed down. Each
//! neighbor above contributes a Gaussian lobe in the horizontal offset that
//! decays exponentially with height and is modulated by the relative
//! vertical speed. A pairwise product term partially shields stacked wakes,
//! so the total is smaller in magnitude than the plain sum.

use serde::{Deserialize, Serialize};

use super::types::{canonical_order, RelativeState};
use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleParams {
    /// Peak downwash force, N.
    #[serde(rename = "A")]
    pub amplitude: f64,
    /// Horizontal wake width, m.
    pub sigma_r: f64,
    /// Vertical decay length, m.
    pub sigma_z: f64,
    /// Neighbors higher than this do not interact, m.
    pub z_cut: f64,
    /// Velocity coupling, s/m.
    pub kv: f64,
    /// Pairwise non-additivity coefficient.
    pub beta: f64,
}

/// Downwash felt 0.3 m below a hovering 34 g vehicle: 9 grams-force.
pub const ANCHOR_FORCE: f64 = -0.009 * 9.81;
/// Vertical offset of the calibration anchor, m.
pub const ANCHOR_HEIGHT: f64 = 0.3;

impl Default for OracleParams {
    fn default() -> Self {
        let sigma_z = 0.3;
        Self {
            amplitude: -ANCHOR_FORCE * (ANCHOR_HEIGHT / sigma_z).exp(),
            sigma_r: 0.10,
            sigma_z,
            z_cut: 0.60,
            kv: 0.3,
            beta: 0.2,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("A", self.amplitude),
            ("sigma_r", self.sigma_r),
            ("sigma_z", self.sigma_z),
            ("z_cut", self.z_cut),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SimError::InvalidParams(format!("oracle.{name} must be > 0, got {value}")));
            }
        }
        for (name, value) in [("kv", self.kv), ("beta", self.beta)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SimError::InvalidParams(format!("oracle.{name} must be >= 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Single-neighbor wake term. Zero unless the neighbor is above and
    /// within `z_cut`.
    pub fn wake(&self, rel: &RelativeState) -> f64 {
        let dz = rel.dp.z;
        if !(dz > 0.0 && dz <= self.z_cut) {
            return 0.0;
        }
        let r2 = rel.dp.x * rel.dp.x + rel.dp.y * rel.dp.y;
        -self.amplitude
            * (-r2 / (2.0 * self.sigma_r * self.sigma_r)).exp()
            * (-dz.abs() / self.sigma_z).exp()
            * (1.0 + self.kv * rel.dv.z)
    }
}

/// Vertical interaction force on a vehicle with the given neighbors, N.
pub fn oracle_fa(neighbors: &[RelativeState], params: &OracleParams) -> f64 {
    let wakes: Vec<f64> = canonical_order(neighbors).iter().map(|n| params.wake(n)).collect();
    let mut total = 0.0;
    for w in &wakes {
        total += w;
    }
    let mut cross = 0.0;
    for (j, wj) in wakes.iter().enumerate() {
        for wk in &wakes[j + 1..] {
            cross += wj * wk;
        }
    }
    // Wakes are non-positive, so their products are non-negative and the
    // correction pulls the total back toward zero.
    total + params.beta * cross / params.amplitude
}
