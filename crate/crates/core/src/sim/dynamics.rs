use nalgebra::{Matrix3, Vector3, Vector4};

use super::types::{VehicleParams, VehicleState, WorldState};
use super::SimError;

/// Time derivative of a [`VehicleState`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub p_dot: Vector3<f64>,
    pub v_dot: Vector3<f64>,
    pub r_dot: Matrix3<f64>,
    pub omega_dot: Vector3<f64>,
}

impl StateDerivative {
    fn is_finite(&self) -> bool {
        self.p_dot.iter().all(|x| x.is_finite())
            && self.v_dot.iter().all(|x| x.is_finite())
            && self.r_dot.iter().all(|x| x.is_finite())
            && self.omega_dot.iter().all(|x| x.is_finite())
    }
}

/// Skew-symmetric matrix with `skew(a) * b == a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Nominal rigid-body dynamics plus an external world-frame force.
///
/// `m v̇ = m g + R [0, 0, T] + f_ext`, `Ṙ = R S(ω)`, `J ω̇ = Jω × ω + τ`,
/// where `[T, τ] = B0 u`.
pub fn nominal_derivative(
    state: &VehicleState,
    u: &Vector4<f64>,
    params: &VehicleParams,
    f_ext: &Vector3<f64>,
) -> Result<StateDerivative, SimError> {
    if !state.is_finite() {
        return Err(SimError::NonFinite("vehicle state".into()));
    }
    if !u.iter().all(|x| x.is_finite()) {
        return Err(SimError::NonFinite("motor command".into()));
    }
    if !f_ext.iter().all(|x| x.is_finite()) {
        return Err(SimError::NonFinite("external force".into()));
    }
    let tol = 1e-9 * params.u_max;
    if u.iter().any(|&ui| ui < -tol || ui > params.u_max + tol) {
        return Err(SimError::InvalidInput(format!(
            "motor command {:?} outside [0, {}]",
            u.as_slice(),
            params.u_max
        )));
    }
    let wrench = params.wrench(u);
    let thrust = Vector3::new(0.0, 0.0, wrench[0]);
    let torque = Vector3::new(wrench[1], wrench[2], wrench[3]);
    let j_omega = params.inertia * state.omega;
    Ok(StateDerivative {
        p_dot: state.v,
        v_dot: params.gravity_vector() + (state.r * thrust + f_ext) / params.mass,
        r_dot: state.r * skew(&state.omega),
        omega_dot: params.inertia_inv() * (j_omega.cross(&state.omega) + torque),
    })
}

fn advance(state: &VehicleState, d: &StateDerivative, h: f64) -> VehicleState {
    VehicleState {
        p: state.p + d.p_dot * h,
        v: state.v + d.v_dot * h,
        r: state.r + d.r_dot * h,
        omega: state.omega + d.omega_dot * h,
    }
}

/// Nearest rotation matrix in the Frobenius sense (polar factor).
pub fn reorthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut out = u * v_t;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * v_t;
    }
    out
}

/// One classical RK4 step of a single vehicle with controls and external
/// force held over the step. The result is re-projected onto SO(3).
pub fn rk4_vehicle(
    state: &VehicleState,
    u: &Vector4<f64>,
    f_ext: &Vector3<f64>,
    params: &VehicleParams,
    dt: f64,
) -> Result<VehicleState, SimError> {
    let k1 = nominal_derivative(state, u, params, f_ext)?;
    let k2 = nominal_derivative(&advance(state, &k1, 0.5 * dt), u, params, f_ext)?;
    let k3 = nominal_derivative(&advance(state, &k2, 0.5 * dt), u, params, f_ext)?;
    let k4 = nominal_derivative(&advance(state, &k3, dt), u, params, f_ext)?;
    for k in [&k1, &k2, &k3, &k4] {
        if !k.is_finite() {
            return Err(SimError::NonFinite("state derivative".into()));
        }
    }
    let w = dt / 6.0;
    let next = VehicleState {
        p: state.p + (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot) * w,
        v: state.v + (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) * w,
        r: reorthonormalize(&(state.r + (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot) * w)),
        omega: state.omega
            + (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot) * w,
    };
    if !next.is_finite() {
        return Err(SimError::NonFinite("integrated state".into()));
    }
    Ok(next)
}

/// Largest accepted integration step, seconds.
pub const MAX_DT: f64 = 0.02;

/// Advance every vehicle of the world by `dt`.
pub fn step_rk4(
    world: &WorldState,
    controls: &[Vector4<f64>],
    interaction: &[Vector3<f64>],
    dt: f64,
) -> Result<WorldState, SimError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(SimError::InvalidInput(format!("dt must lie in (0, {MAX_DT}], got {dt}")));
    }
    let n = world.vehicles.len();
    if controls.len() != n || interaction.len() != n {
        return Err(SimError::InvalidInput(format!(
            "expected {n} controls and forces, got {} and {}",
            controls.len(),
            interaction.len()
        )));
    }
    let mut vehicles = Vec::with_capacity(n);
    for (i, state) in world.vehicles.iter().enumerate() {
        let next = rk4_vehicle(state, &controls[i], &interaction[i], &world.params, dt).map_err(
            |e| SimError::Diverged {
                t: world.t,
                vehicle: i,
                reason: e.to_string(),
            },
        )?;
        vehicles.push(next);
    }
    Ok(WorldState {
        t: world.t + dt,
        vehicles,
        params: world.params.clone(),
    })
}
