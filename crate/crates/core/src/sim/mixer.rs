use nalgebra::Vector4;

use super::types::VehicleParams;

/// Motor command produced by [`wrench_to_motors`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotorCommand {
    /// Squared motor speeds, clamped to `[0, u_max]`.
    pub u: Vector4<f64>,
    /// True when the requested wrench was not feasible.
    pub saturated: bool,
}

/// Map a desired wrench `[T, τ]` to motor commands through the
/// pseudo-inverse of the actuation matrix.
///
/// When the unconstrained solution leaves the motor box, total thrust is
/// kept (clamped to what the motors can deliver with zero torque) and the
/// torque request is scaled down uniformly until every motor fits.
pub fn wrench_to_motors(eta: &Vector4<f64>, params: &VehicleParams) -> MotorCommand {
    let pinv = params.b0_pinv();
    let u = pinv * eta;
    let inside = |x: f64| (0.0..=params.u_max).contains(&x);
    if u.iter().all(|&x| inside(x)) {
        return MotorCommand { u, saturated: false };
    }

    let mut thrust = eta[0].max(0.0);
    let mut u_thrust = pinv * Vector4::new(thrust, 0.0, 0.0, 0.0);
    let peak = u_thrust.max();
    if peak > params.u_max {
        thrust *= params.u_max / peak;
        u_thrust = pinv * Vector4::new(thrust, 0.0, 0.0, 0.0);
    }
    let u_torque = pinv * Vector4::new(0.0, eta[1], eta[2], eta[3]);
    let mut scale: f64 = 1.0;
    for i in 0..4 {
        let (base, slope) = (u_thrust[i], u_torque[i]);
        if slope > 0.0 {
            scale = scale.min((params.u_max - base) / slope);
        } else if slope < 0.0 {
            scale = scale.min(base / -slope);
        }
    }
    let scale = scale.max(0.0);
    let u = (u_thrust + u_torque * scale).map(|x| x.clamp(0.0, params.u_max));
    MotorCommand { u, saturated: true }
}
