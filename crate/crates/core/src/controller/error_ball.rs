use nalgebra::Vector3;

use super::gains::{lambda_min, ControllerGains};

/// One logged instant used by [`error_ball_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingSample {
    pub t: f64,
    /// Learning error `f̂_a − f_a`, N.
    pub epsilon: Vector3<f64>,
    /// Position error `p − p_d`, m.
    pub p_err: Vector3<f64>,
}

/// Predicted and observed size of the asymptotic tracking error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBallReport {
    /// `sup ‖dε/dt‖` over the log, N/s.
    pub d_m: f64,
    /// `d_m / (λ_min(Λ)² λ_min(K))`, m.
    pub bound: f64,
    /// `sup ‖p̃‖` over the steady window, m.
    pub measured: f64,
}

impl ErrorBallReport {
    pub fn within(&self, slack: f64) -> bool {
        self.measured <= self.bound * slack
    }

    /// Swarm-wide report: the largest `d_m`, bound and error of any vehicle.
    pub fn combine(reports: &[ErrorBallReport]) -> ErrorBallReport {
        reports.iter().fold(
            ErrorBallReport {
                d_m: 0.0,
                bound: 0.0,
                measured: 0.0,
            },
            |acc, r| ErrorBallReport {
                d_m: acc.d_m.max(r.d_m),
                bound: acc.bound.max(r.bound),
                measured: acc.measured.max(r.measured),
            },
        )
    }
}

/// Compare the observed steady tracking error with the error ball predicted
/// from the measured rate of change of the learning error. Samples before
/// `steady_after` only contribute to `d_m`.
pub fn error_ball_check(log: &[TrackingSample], gains: &ControllerGains, steady_after: f64) -> ErrorBallReport {
    let d_m = log
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| (w[1].epsilon - w[0].epsilon).norm() / (w[1].t - w[0].t))
        .fold(0.0, f64::max);
    let l = lambda_min(&gains.lambda);
    let bound = d_m / (l * l * lambda_min(&gains.k));
    let measured = log
        .iter()
        .filter(|s| s.t >= steady_after)
        .map(|s| s.p_err.norm())
        .fold(0.0, f64::max);
    ErrorBallReport { d_m, bound, measured }
}
