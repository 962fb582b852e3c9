//! Decentralized integral tracking controller with learned-force
//! feed-forward, geometric attitude loop and the error-ball checker.

mod attitude;
mod error_ball;
mod gains;
mod position;
mod predictor;
mod reference;

pub use attitude::{attitude_control, attitude_errors, attitude_setpoint, vee, AttitudeSetpoint};
pub use error_ball::{error_ball_check, ErrorBallReport, TrackingSample};
pub use gains::{lambda_min, ControllerGains, ControllerState};
pub use position::{composite_variable, desired_force, Composite, ForceCommand};
pub use predictor::{InteractionPredictor, ZeroPredictor};
pub use reference::{Hover, RefPoint, ReferenceTrajectory, SampledTrajectory, VerticalSine};

use nalgebra::{Vector3, Vector4};
use thiserror::Error;

use crate::sim::{wrench_to_motors, RelativeState, VehicleParams, VehicleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

/// Everything the controller produced on one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlOutput {
    pub u: Vector4<f64>,
    pub saturated: bool,
    /// The desired force was too small to define an attitude; the previous
    /// attitude setpoint was held.
    pub degenerate: bool,
    pub s: Vector3<f64>,
    pub f_d: Vector3<f64>,
    /// Commanded collective thrust, N.
    pub thrust: f64,
    pub torque: Vector3<f64>,
    /// Predicted vertical interaction force, N.
    pub f_hat: f64,
}

/// Per-vehicle controller instance.
#[derive(Clone, Debug)]
pub struct VehicleController {
    pub gains: ControllerGains,
    pub state: ControllerState,
    pub yaw_d: f64,
}

impl VehicleController {
    pub fn new(gains: ControllerGains) -> Self {
        Self {
            gains,
            state: ControllerState::default(),
            yaw_d: 0.0,
        }
    }

    /// One control step. The controller sees its own state, its reference and
    /// the relative states of its neighbors; nothing global.
    pub fn update(
        &mut self,
        own: &VehicleState,
        reference: &RefPoint,
        neighbors: &[RelativeState],
        predictor: &dyn InteractionPredictor,
        params: &VehicleParams,
        dt: f64,
    ) -> ControlOutput {
        let f_hat = predictor.predict(neighbors);
        let cmd = desired_force(own, reference, &self.gains, &self.state, &Vector3::new(0.0, 0.0, f_hat), params);
        let (r_d, degenerate) = match attitude_setpoint(&cmd.f_d, self.yaw_d, self.gains.thrust_epsilon) {
            Some(sp) => {
                self.state.last_r_d = sp.r_d;
                (sp.r_d, false)
            }
            None => (self.state.last_r_d, true),
        };
        // Thrust acts along the current body z axis.
        let thrust = cmd.f_d.dot(&own.r.column(2)).max(0.0);
        let torque = attitude_control(own, &r_d, &Vector3::zeros(), &self.gains, params);
        let motors = wrench_to_motors(&Vector4::new(thrust, torque.x, torque.y, torque.z), params);
        self.state
            .integrate(&(own.p - reference.p), dt, self.gains.integral_limit);
        ControlOutput {
            u: motors.u,
            saturated: motors.saturated,
            degenerate,
            s: cmd.s,
            f_d: cmd.f_d,
            thrust,
            torque,
            f_hat,
        }
    }
}
