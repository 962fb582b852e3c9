use nalgebra::{Vector3, Vector4};

use crate::sim::{RelativeState, VehicleParams, VehicleState};

use super::Sample;

/// One vehicle at one logging instant, as seen by its own sensors.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedStep {
    pub scenario: u64,
    pub vehicle: usize,
    pub t: f64,
    pub state: VehicleState,
    /// Motor command applied over the following step.
    pub u: Vector4<f64>,
    /// Measured world-frame acceleration; `None` when the sensor dropped out.
    pub accel: Option<Vector3<f64>>,
    /// Relative states of the vehicles inside the neighbor radius.
    pub neighbors: Vec<RelativeState>,
}

/// Residual vertical force implied by a logged step:
/// `m·a_z + m·g − (R·[0, 0, T])_z`. `None` if the acceleration is missing
/// or anything is non-finite.
pub fn extract_label(step: &LoggedStep, params: &VehicleParams) -> Option<f64> {
    let a = step.accel?;
    if !a.iter().all(|x| x.is_finite()) || !step.state.is_finite() || !step.u.iter().all(|x| x.is_finite()) {
        return None;
    }
    let thrust = params.wrench(&step.u)[0];
    let rotor_z = step.state.r[(2, 2)] * thrust;
    let y = params.mass * a.z + params.mass * params.gravity - rotor_z;
    y.is_finite().then_some(y)
}

/// Turn a log into samples. Returns the samples and the number of steps
/// skipped for missing or non-finite data.
pub fn samples_from_log(log: &[LoggedStep], params: &VehicleParams) -> (Vec<Sample>, usize) {
    let mut skipped = 0;
    let samples = log
        .iter()
        .filter_map(|step| match extract_label(step, params) {
            Some(y) if step.neighbors.iter().all(RelativeState::is_finite) => Some(Sample {
                neighbors: step.neighbors.clone(),
                y,
                scenario: step.scenario,
                vehicle: step.vehicle,
                t: step.t,
            }),
            _ => {
                skipped += 1;
                None
            }
        })
        .collect();
    (samples, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{nominal_derivative, oracle_fa, OracleParams};

    fn params() -> VehicleParams {
        VehicleParams::quad_x(
            0.034,
            Vector3::new(16.57e-6, 16.66e-6, 29.26e-6),
            0.046,
            0.0288,
            7.24e-4,
            7.53,
            9.81,
        )
        .unwrap()
    }

    fn hover_step(p: &VehicleParams, f_ext: f64, neighbors: Vec<RelativeState>) -> LoggedStep {
        let state = VehicleState::at_rest(Vector3::zeros());
        let u = Vector4::repeat(p.mass * p.gravity / (4.0 * p.b0[(0, 0)]));
        let d = nominal_derivative(&state, &u, p, &Vector3::new(0.0, 0.0, f_ext)).unwrap();
        LoggedStep {
            scenario: 0,
            vehicle: 0,
            t: 0.0,
            state,
            u,
            accel: Some(d.v_dot),
            neighbors,
        }
    }

    #[test]
    fn hover_without_neighbors_is_zero() {
        let p = params();
        assert!(extract_label(&hover_step(&p, 0.0, vec![]), &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hover_under_neighbor_recovers_oracle() {
        let p = params();
        let nb = vec![RelativeState::new(Vector3::new(0.0, 0.0, 0.3), Vector3::zeros())];
        let f = oracle_fa(&nb, &OracleParams::default());
        let y = extract_label(&hover_step(&p, f, nb), &p).unwrap();
        assert!((y - f).abs() < 1e-12);
        assert!((y + 0.009 * 9.81).abs() < 1e-9);
    }

    #[test]
    fn missing_accel_is_skipped_and_counted() {
        let p = params();
        let mut a = hover_step(&p, 0.0, vec![]);
        let b = a.clone();
        a.accel = None;
        let (samples, skipped) = samples_from_log(&[a, b], &p);
        assert_eq!((samples.len(), skipped), (1, 1));
    }

    #[test]
    fn noisy_labels_spread_by_mass_times_sigma() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let p = params();
        let base = hover_step(&p, -0.0883, vec![]);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let ys: Vec<f64> = (0..1000)
            .map(|_| {
                let mut s = base.clone();
                s.accel = Some(s.accel.unwrap() + Vector3::new(0.0, 0.0, noise.sample(&mut rng)));
                extract_label(&s, &p).unwrap()
            })
            .collect();
        let mean = ys.iter().sum::<f64>() / 1000.0;
        let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 999.0).sqrt();
        assert!((mean + 0.0883).abs() < 4.0 * 0.05 * p.mass / 1000f64.sqrt());
        assert!((sd / (0.05 * p.mass) - 1.0).abs() < 0.1);
    }
}
