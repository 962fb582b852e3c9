use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::ControlError;

/// Position-loop and attitude-loop gains.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerGains {
    /// Error-filter gain Λ, s⁻¹.
    pub lambda: Matrix3<f64>,
    /// Composite-variable gain K, N·s/m.
    pub k: Matrix3<f64>,
    /// Rotation-error gain, N·m/rad.
    pub k_r: Vector3<f64>,
    /// Angular-rate gain, N·m·s/rad.
    pub k_omega: Vector3<f64>,
    /// Per-axis bound on the position-error integral, m·s.
    pub integral_limit: f64,
    /// Smallest desired force magnitude that defines an attitude, N.
    pub thrust_epsilon: f64,
}

fn is_spd(m: &Matrix3<f64>) -> bool {
    (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0) && m.cholesky().is_some()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(m: &Matrix3<f64>) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

impl ControllerGains {
    /// Λ = λ·I, K = k·I with attitude gains placing both attitude poles at
    /// `-attitude_bandwidth` for inertia `inertia_diag`.
    pub fn scalar(lambda: f64, k: f64, inertia_diag: Vector3<f64>, attitude_bandwidth: f64) -> Self {
        let w = attitude_bandwidth;
        Self {
            lambda: Matrix3::identity() * lambda,
            k: Matrix3::identity() * k,
            k_r: inertia_diag * (w * w),
            k_omega: inertia_diag * (2.0 * w),
            integral_limit: 0.5,
            thrust_epsilon: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !is_spd(&self.lambda) {
            return Err(ControlError::InvalidGains("controller.lambda must be symmetric positive definite".into()));
        }
        if !is_spd(&self.k) {
            return Err(ControlError::InvalidGains("controller.k must be symmetric positive definite".into()));
        }
        if self.k_r.iter().chain(self.k_omega.iter()).any(|g| !(*g > 0.0)) {
            return Err(ControlError::InvalidGains("attitude gains must be positive".into()));
        }
        if !(self.integral_limit > 0.0) {
            return Err(ControlError::InvalidGains("controller.integral_limit must be positive".into()));
        }
        if !(self.thrust_epsilon > 0.0) {
            return Err(ControlError::InvalidGains("controller.thrust_epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Integrator and attitude memory of one vehicle's controller.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    /// ∫ p̃ dt, m·s.
    pub integral: Vector3<f64>,
    /// Last well-defined attitude setpoint.
    pub last_r_d: Matrix3<f64>,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            integral: Vector3::zeros(),
            last_r_d: Matrix3::identity(),
        }
    }
}

impl ControllerState {
    /// Integrate the position error and apply the anti-windup clamp.
    pub fn integrate(&mut self, p_err: &Vector3<f64>, dt: f64, limit: f64) {
        self.integral += p_err * dt;
        self.integral.iter_mut().for_each(|x| *x = x.clamp(-limit, limit));
    }
}
