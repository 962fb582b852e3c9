use nalgebra::{Matrix3, Vector3};

use crate::sim::{VehicleParams, VehicleState};

use super::gains::ControllerGains;

/// Inverse of the hat map.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Collective thrust and attitude realizing a desired force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeSetpoint {
    pub thrust: f64,
    pub r_d: Matrix3<f64>,
}

/// Attitude whose body z axis points along `f_d`, with heading `yaw_d`.
/// Returns `None` when `‖f_d‖ ≤ eps`.
pub fn attitude_setpoint(f_d: &Vector3<f64>, yaw_d: f64, eps: f64) -> Option<AttitudeSetpoint> {
    let norm = f_d.norm();
    if !(norm > eps) {
        return None;
    }
    let b3 = f_d / norm;
    let heading = Vector3::new(yaw_d.cos(), yaw_d.sin(), 0.0);
    let mut b2 = b3.cross(&heading);
    if b2.norm() < 1e-9 {
        // Heading parallel to thrust; fall back to the world y axis.
        b2 = b3.cross(&Vector3::y()).cross(&b3);
    }
    let b2 = b2.normalize();
    let b1 = b2.cross(&b3);
    Some(AttitudeSetpoint {
        thrust: norm,
        r_d: Matrix3::from_columns(&[b1, b2, b3]),
    })
}

/// Rotation and rate errors `e_R = ½ vee(R_dᵀR − RᵀR_d)`, `e_ω = ω − RᵀR_d ω_d`.
pub fn attitude_errors(state: &VehicleState, r_d: &Matrix3<f64>, omega_d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let r = &state.r;
    let e_r = 0.5 * vee(&(r_d.transpose() * r - r.transpose() * r_d));
    let e_w = state.omega - r.transpose() * r_d * omega_d;
    (e_r, e_w)
}

/// Geometric PD attitude law `τ = −k_R e_R − k_ω e_ω + ω × Jω`.
pub fn attitude_control(
    state: &VehicleState,
    r_d: &Matrix3<f64>,
    omega_d: &Vector3<f64>,
    gains: &ControllerGains,
    params: &VehicleParams,
) -> Vector3<f64> {
    let (e_r, e_w) = attitude_errors(state, r_d, omega_d);
    -gains.k_r.component_mul(&e_r) - gains.k_omega.component_mul(&e_w)
        + state.omega.cross(&(params.inertia * state.omega))
}
