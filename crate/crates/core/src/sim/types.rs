use std::cmp::Ordering;

use nalgebra::{Matrix3, Matrix4, Rotation3, UnitQuaternion, Vector3, Vector4};

use super::SimError;

/// Full rigid-body state of one vehicle.
///
/// Position and velocity live in the world frame; `omega` is the body rate.
/// `r` maps body vectors into the world frame.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleState {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub r: Matrix3<f64>,
    pub omega: Vector3<f64>,
}

impl VehicleState {
    /// Level vehicle at rest at `p`.
    pub fn at_rest(p: Vector3<f64>) -> Self {
        Self {
            p,
            v: Vector3::zeros(),
            r: Matrix3::identity(),
            omega: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
            && self.r.iter().all(|x| x.is_finite())
            && self.omega.iter().all(|x| x.is_finite())
    }

    /// Frobenius norm of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.r.transpose() * self.r - Matrix3::identity()).norm()
    }

    /// Attitude as a unit quaternion (w, x, y, z).
    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.r))
    }

    /// Kinetic plus gravitational potential energy, with z measured upward.
    pub fn mechanical_energy(&self, params: &VehicleParams) -> f64 {
        0.5 * params.mass * self.v.norm_squared()
            + params.mass * params.gravity * self.p.z
            + 0.5 * self.omega.dot(&(params.inertia * self.omega))
    }

    /// Relative state of `other` as seen from `self`.
    pub fn relative_to(&self, other: &VehicleState) -> RelativeState {
        RelativeState {
            dp: other.p - self.p,
            dv: other.v - self.v,
        }
    }
}

/// Physical parameters shared by every vehicle of a homogeneous swarm.
///
/// The actuation matrix maps squared motor speeds (in (krad/s)²) to the
/// wrench `[T, τx, τy, τz]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub b0: Matrix4<f64>,
    pub u_max: f64,
    pub gravity: f64,
    b0_pinv: Matrix4<f64>,
    inertia_inv: Matrix3<f64>,
}

impl VehicleParams {
    pub fn new(
        mass: f64,
        inertia: Matrix3<f64>,
        b0: Matrix4<f64>,
        u_max: f64,
        gravity: f64,
    ) -> Result<Self, SimError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(SimError::InvalidParams(format!("mass must be positive, got {mass}")));
        }
        if !(u_max > 0.0 && u_max.is_finite()) {
            return Err(SimError::InvalidParams(format!("u_max must be positive, got {u_max}")));
        }
        if !(gravity.is_finite() && gravity >= 0.0) {
            return Err(SimError::InvalidParams(format!("gravity must be finite and non-negative, got {gravity}")));
        }
        if (inertia - inertia.transpose()).norm() > 1e-12 * inertia.norm() {
            return Err(SimError::InvalidParams("inertia must be symmetric".into()));
        }
        if inertia.cholesky().is_none() {
            return Err(SimError::InvalidParams("inertia must be positive definite".into()));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or_else(|| SimError::InvalidParams("inertia is singular".into()))?;
        let svd = b0.svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-12 * smax) {
            return Err(SimError::InvalidParams("actuation matrix must have full row rank".into()));
        }
        let b0_pinv = b0
            .pseudo_inverse(1e-15 * smax)
            .map_err(|e| SimError::InvalidParams(e.to_string()))?;
        Ok(Self {
            mass,
            inertia,
            b0,
            u_max,
            gravity,
            b0_pinv,
            inertia_inv,
        })
    }

    /// X-configuration quadrotor. Motors sit at 45°, 135°, 225° and 315°
    /// around body z at distance `arm`, with alternating spin directions.
    /// `kf` is thrust per unit squared speed, `km` the matching drag torque.
    pub fn quad_x(
        mass: f64,
        inertia_diag: Vector3<f64>,
        arm: f64,
        kf: f64,
        km: f64,
        u_max: f64,
        gravity: f64,
    ) -> Result<Self, SimError> {
        let mut b0 = Matrix4::zeros();
        let spins = [-1.0, 1.0, -1.0, 1.0];
        for (i, spin) in spins.iter().enumerate() {
            let angle = std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * i as f64;
            let (x, y) = (arm * angle.cos(), arm * angle.sin());
            b0[(0, i)] = kf;
            b0[(1, i)] = kf * y;
            b0[(2, i)] = -kf * x;
            b0[(3, i)] = km * spin;
        }
        Self::new(mass, Matrix3::from_diagonal(&inertia_diag), b0, u_max, gravity)
    }

    pub fn b0_pinv(&self) -> &Matrix4<f64> {
        &self.b0_pinv
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }

    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.gravity)
    }

    /// Wrench `[T, τ]` produced by motor command `u`.
    pub fn wrench(&self, u: &Vector4<f64>) -> Vector4<f64> {
        self.b0 * u
    }

    /// Largest total thrust reachable with zero torque.
    pub fn max_thrust(&self) -> f64 {
        let per_unit = self.b0_pinv * Vector4::new(1.0, 0.0, 0.0, 0.0);
        let worst = per_unit.max();
        self.u_max / worst
    }
}

/// Relative position and velocity of a neighbor, `x_j − x_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeState {
    pub dp: Vector3<f64>,
    pub dv: Vector3<f64>,
}

impl RelativeState {
    pub fn new(dp: Vector3<f64>, dv: Vector3<f64>) -> Self {
        Self { dp, dv }
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            dp: Vector3::new(x[0], x[1], x[2]),
            dv: Vector3::new(x[3], x[4], x[5]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.dp.x, self.dp.y, self.dp.z, self.dv.x, self.dv.y, self.dv.z]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Lexicographic total order over the six components.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.to_array(), other.to_array());
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Copy of `neighbors` in canonical order. Every set-sum in the crate
/// accumulates in this order so results do not depend on input order.
pub fn canonical_order(neighbors: &[RelativeState]) -> Vec<RelativeState> {
    let mut sorted = neighbors.to_vec();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    sorted
}

/// Snapshot of the whole swarm.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub t: f64,
    pub vehicles: Vec<VehicleState>,
    pub params: VehicleParams,
}

impl WorldState {
    pub fn new(vehicles: Vec<VehicleState>, params: VehicleParams) -> Result<Self, SimError> {
        if vehicles.is_empty() {
            return Err(SimError::InvalidParams("a world needs at least one vehicle".into()));
        }
        Ok(Self {
            t: 0.0,
            vehicles,
            params,
        })
    }

    /// Relative states of every other vehicle, seen from vehicle `i`.
    pub fn relative_states(&self, i: usize) -> Vec<RelativeState> {
        let me = &self.vehicles[i];
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, other)| me.relative_to(other))
            .collect()
    }

    /// Relative states of the other vehicles within `radius` on every axis.
    pub fn neighbors_within(&self, i: usize, radius: f64) -> Vec<RelativeState> {
        self.relative_states(i)
            .into_iter()
            .filter(|rel| rel.dp.iter().all(|c| c.abs() <= radius))
            .collect()
    }
}
