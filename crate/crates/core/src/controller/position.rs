use nalgebra::Vector3;

use crate::sim::{VehicleParams, VehicleState};

use super::gains::{ControllerGains, ControllerState};
use super::reference::RefPoint;

/// Composite tracking variable and the reference velocity it is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Composite {
    pub s: Vector3<f64>,
    pub v_r: Vector3<f64>,
}

/// `s = p̃̇ + 2Λp̃ + Λ²∫p̃` and `v_r = ṗ_d − 2Λp̃ − Λ²∫p̃`.
///
/// `p_dot_d` is the reference velocity; `s = ṗ − v_r` holds by construction.
pub fn composite_variable(
    p_err: &Vector3<f64>,
    p_err_dot: &Vector3<f64>,
    integral: &Vector3<f64>,
    p_dot_d: &Vector3<f64>,
    gains: &ControllerGains,
) -> Composite {
    let lambda = &gains.lambda;
    let correction = 2.0 * lambda * p_err + lambda * lambda * integral;
    Composite {
        s: p_err_dot + correction,
        v_r: p_dot_d - correction,
    }
}

/// Output of the position loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceCommand {
    pub f_d: Vector3<f64>,
    pub s: Vector3<f64>,
    pub v_r_dot: Vector3<f64>,
}

/// `f_d = m v̇_r − K s − m g − f̂_a`, with `v̇_r = p̈_d − 2Λ p̃̇ − Λ² p̃`.
///
/// Only the vehicle's own state, its reference and the predicted interaction
/// force enter; the prediction itself is computed from neighbor relative
/// states by the caller.
pub fn desired_force(
    state: &VehicleState,
    reference: &RefPoint,
    gains: &ControllerGains,
    ctrl: &ControllerState,
    f_hat: &Vector3<f64>,
    params: &VehicleParams,
) -> ForceCommand {
    let p_err = state.p - reference.p;
    let p_err_dot = state.v - reference.v;
    let c = composite_variable(&p_err, &p_err_dot, &ctrl.integral, &reference.v, gains);
    let lambda = &gains.lambda;
    let v_r_dot = reference.a - 2.0 * lambda * p_err_dot - lambda * lambda * p_err;
    let f_d = params.mass * v_r_dot - gains.k * c.s - params.mass * params.gravity_vector() - f_hat;
    ForceCommand { f_d, s: c.s, v_r_dot }
}
