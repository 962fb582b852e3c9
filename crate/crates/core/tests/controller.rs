use nalgebra::{Matrix3, Rotation3, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_core::config::Config;
use swarm_core::controller::{
    attitude_control, attitude_errors, attitude_setpoint, composite_variable, desired_force, error_ball_check,
    ControllerGains, ControllerState, Hover, RefPoint, ReferenceTrajectory, TrackingSample, VehicleController,
    VerticalSine, ZeroPredictor,
};
use swarm_core::sim::{oracle_fa, rk4_vehicle, OracleParams, RelativeState, VehicleParams, VehicleState};

fn setup() -> (VehicleParams, ControllerGains) {
    let cfg = Config::default();
    (cfg.vehicle.params().unwrap(), cfg.gains())
}

#[test]
fn composite_at_rest_is_zero() {
    let (_, g) = setup();
    let pd = Vector3::new(0.1, -0.2, 0.3);
    let c = composite_variable(&Vector3::zeros(), &Vector3::zeros(), &Vector3::zeros(), &pd, &g);
    assert_eq!(c.s, Vector3::zeros());
    assert_eq!(c.v_r, pd);
}

#[test]
fn composite_proportional_term() {
    let (p, _) = setup();
    let g = ControllerGains::scalar(1.0, 4.0 * p.mass, Vector3::repeat(1e-5), 20.0);
    let c = composite_variable(&Vector3::new(0.0, 0.0, 0.1), &Vector3::zeros(), &Vector3::zeros(), &Vector3::zeros(), &g);
    assert!((c.s - Vector3::new(0.0, 0.0, 0.2)).norm() < 1e-15);
}

#[test]
fn composite_identity_holds() {
    let (_, g) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut v = || Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    for _ in 0..200 {
        let (p, pd, vel, vd, int) = (v(), v(), v(), v(), v());
        let c = composite_variable(&(p - pd), &(vel - vd), &int, &vd, &g);
        assert!((c.s - (vel - c.v_r)).norm() < 1e-14);
    }
}

#[test]
fn hover_needs_weight_only() {
    let (p, g) = setup();
    let s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 1.0));
    let cmd = desired_force(&s, &RefPoint::hold(s.p), &g, &ControllerState::default(), &Vector3::zeros(), &p);
    assert!((cmd.f_d - Vector3::new(0.0, 0.0, p.mass * p.gravity)).norm() < 1e-15);
}

#[test]
fn predicted_downwash_is_compensated() {
    let (p, g) = setup();
    let s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 1.0));
    let f_hat = Vector3::new(0.0, 0.0, -0.0883);
    let cmd = desired_force(&s, &RefPoint::hold(s.p), &g, &ControllerState::default(), &f_hat, &p);
    assert!((cmd.f_d.z - (p.mass * p.gravity + 0.0883)).abs() < 1e-15);
}

#[test]
fn feed_forward_enters_additively_while_tracking() {
    let (p, g) = setup();
    let sine = VerticalSine {
        center: Vector3::new(0.0, 0.0, 1.0),
        amplitude: 0.1,
        omega: 2.0,
    };
    let t = 0.7;
    let r = sine.sample(t);
    let mut s = VehicleState::at_rest(r.p + Vector3::new(0.01, -0.02, 0.03));
    s.v = r.v + Vector3::new(0.0, 0.05, -0.04);
    let ctrl = ControllerState {
        integral: Vector3::new(0.001, 0.0, -0.002),
        ..Default::default()
    };
    let nb = [RelativeState::new(Vector3::new(0.02, 0.0, 0.3), Vector3::new(0.0, 0.0, -0.1))];
    let f = oracle_fa(&nb, &OracleParams::default());
    let with = desired_force(&s, &r, &g, &ctrl, &Vector3::new(0.0, 0.0, f), &p);
    let without = desired_force(&s, &r, &g, &ctrl, &Vector3::zeros(), &p);
    assert!((with.f_d - without.f_d - Vector3::new(0.0, 0.0, -f)).norm() < 1e-15);
    // Hand evaluation of the force law.
    let (pe, ve) = (s.p - r.p, s.v - r.v);
    let (l, k) = (2.0, 4.0 * p.mass);
    let sv = ve + 2.0 * l * pe + l * l * ctrl.integral;
    let vr_dot = r.a - 2.0 * l * ve - l * l * pe;
    let expected = p.mass * vr_dot - k * sv + Vector3::new(0.0, 0.0, p.mass * p.gravity - f);
    assert!((with.f_d - expected).norm() < 1e-14);
}

#[test]
fn level_setpoint_for_weight() {
    let (p, _) = setup();
    let sp = attitude_setpoint(&Vector3::new(0.0, 0.0, p.mass * p.gravity), 0.0, 1e-6).unwrap();
    assert!((sp.r_d - Matrix3::identity()).norm() < 1e-15);
    assert!((sp.thrust - p.mass * p.gravity).abs() < 1e-15);
}

#[test]
fn tilted_force_rotates_about_y() {
    let a = 10f64.to_radians();
    let sp = attitude_setpoint(&Vector3::new(a.sin(), 0.0, a.cos()), 0.0, 1e-6).unwrap();
    let expected = Rotation3::from_axis_angle(&Vector3::y_axis(), a);
    assert!((sp.r_d - expected.matrix()).norm() < 1e-12);
}

#[test]
fn random_setpoints_are_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let f = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let yaw = rng.random_range(-3.0..3.0);
        let sp = attitude_setpoint(&f, yaw, 1e-6).unwrap();
        assert!((sp.r_d.transpose() * sp.r_d - Matrix3::identity()).norm() < 1e-12);
        assert!((sp.r_d.determinant() - 1.0).abs() < 1e-12);
        assert!((sp.r_d * Vector3::new(0.0, 0.0, sp.thrust) - f).norm() < 1e-9);
    }
}

#[test]
fn degenerate_force_has_no_setpoint() {
    assert!(attitude_setpoint(&Vector3::new(0.0, 0.0, 1e-9), 0.0, 1e-6).is_none());
}

#[test]
fn degenerate_step_holds_last_attitude() {
    let (p, g) = setup();
    let mut c = VehicleController::new(g);
    let s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 1.0));
    let tilted = *Rotation3::from_axis_angle(&Vector3::x_axis(), 0.2).matrix();
    c.state.last_r_d = tilted;
    // A reference accelerating downward at exactly g zeroes the desired force.
    let r = RefPoint {
        p: s.p,
        v: Vector3::zeros(),
        a: Vector3::new(0.0, 0.0, -p.gravity),
    };
    let out = c.update(&s, &r, &[], &ZeroPredictor, &p, 0.002);
    assert!(out.degenerate);
    assert_eq!(c.state.last_r_d, tilted);
    // Rolls toward the held attitude.
    assert!(out.torque.x > 0.0);
}

#[test]
fn aligned_attitude_needs_no_torque() {
    let (p, g) = setup();
    let mut s = VehicleState::at_rest(Vector3::zeros());
    s.r = *Rotation3::from_euler_angles(0.2, -0.1, 0.4).matrix();
    let tau = attitude_control(&s, &s.r.clone(), &Vector3::zeros(), &g, &p);
    assert!(tau.norm() < 1e-15);
}

#[test]
fn small_roll_gives_proportional_torque() {
    let (p, g) = setup();
    for theta in [0.01, 0.03, 0.05] {
        let mut s = VehicleState::at_rest(Vector3::zeros());
        s.r = *Rotation3::from_axis_angle(&Vector3::x_axis(), theta).matrix();
        let tau = attitude_control(&s, &Matrix3::identity(), &Vector3::zeros(), &g, &p);
        let linear = -g.k_r.x * theta;
        assert!(((tau.x - linear) / linear).abs() <= 0.02, "theta {theta}");
    }
}

#[test]
fn attitude_recovers_from_twenty_degrees() {
    let (p, g) = setup();
    let mut s = VehicleState::at_rest(Vector3::zeros());
    s.r = *Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(1.0, 1.0, 0.0)), 20f64.to_radians()).matrix();
    let hover = p.mass * p.gravity;
    let mut errors = Vec::new();
    for _ in 0..1000 {
        let tau = attitude_control(&s, &Matrix3::identity(), &Vector3::zeros(), &g, &p);
        let u = swarm_core::sim::wrench_to_motors(&Vector4::new(hover, tau.x, tau.y, tau.z), &p).u;
        s = rk4_vehicle(&s, &u, &Vector3::zeros(), &p, 0.002).unwrap();
        errors.push(attitude_errors(&s, &Matrix3::identity(), &Vector3::zeros()).0.norm());
    }
    // Critically damped: past the initial rate build-up the error only shrinks.
    let start = errors.iter().take(50).cloned().fold(0.0, f64::max);
    let after = &errors[50..];
    assert!(after.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(errors.last().unwrap() < &(1e-3 * start));
}

fn hover_flight(
    start: Vector3<f64>,
    target: Vector3<f64>,
    bias: f64,
    f_hat: f64,
    steps: usize,
) -> (Vec<TrackingSample>, Vec<Vector3<f64>>) {
    struct Constant(f64);
    impl swarm_core::controller::InteractionPredictor for Constant {
        fn predict(&self, _: &[RelativeState]) -> f64 {
            self.0
        }
    }
    let (p, g) = setup();
    let mut c = VehicleController::new(g);
    let mut s = VehicleState::at_rest(start);
    let reference = Hover(target);
    let mut log = Vec::new();
    let mut s_trace = Vec::new();
    for k in 0..steps {
        let t = k as f64 * 0.002;
        let r = reference.sample(t);
        let out = c.update(&s, &r, &[], &Constant(f_hat), &p, 0.002);
        s_trace.push(out.s);
        log.push(TrackingSample {
            t,
            epsilon: Vector3::new(0.0, 0.0, f_hat - bias),
            p_err: s.p - r.p,
        });
        s = rk4_vehicle(&s, &out.u, &Vector3::new(0.0, 0.0, bias), &p, 0.002).unwrap();
    }
    (log, s_trace)
}

#[test]
fn composite_variable_decays_exponentially() {
    let (p, g) = setup();
    let (_, s) = hover_flight(Vector3::new(0.0, 0.0, 0.98), Vector3::new(0.0, 0.0, 1.0), 0.0, 0.0, 1500);
    // Linear regime window after the attitude transient.
    let (t0, t1) = (0.3, 1.5);
    let (i0, i1) = ((t0 / 0.002) as usize, (t1 / 0.002) as usize);
    let rate = (s[i0].norm().ln() - s[i1].norm().ln()) / (t1 - t0);
    let min_rate = 0.9 * swarm_core::controller::lambda_min(&g.k) / p.mass;
    assert!(rate >= min_rate, "rate {rate} < {min_rate}");
}

#[test]
fn hover_thrust_equals_weight() {
    let (p, g) = setup();
    let mut c = VehicleController::new(g);
    let s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 1.0));
    let out = c.update(&s, &RefPoint::hold(s.p), &[], &ZeroPredictor, &p, 0.002);
    assert!((p.wrench(&out.u)[0] - p.mass * p.gravity).abs() <= 1e-6);
    assert!(!out.saturated);
}

#[test]
fn constant_bias_is_integrated_away() {
    let (_, g) = setup();
    let target = Vector3::new(0.0, 0.0, 1.0);
    let (log, _) = hover_flight(target, target, -0.05, -0.05, 10_000);
    let report = error_ball_check(&log, &g, 1.0);
    assert_eq!(report.d_m, 0.0);
    assert_eq!(report.bound, 0.0);
    // Unmodelled constant bias: the integral term removes it.
    let (log, _) = hover_flight(target, target, -0.05, 0.0, 15_000);
    let tail = log.iter().filter(|s| s.t > 25.0).map(|s| s.p_err.norm()).fold(0.0, f64::max);
    assert!(tail < 1e-4, "residual {tail}");
}

#[test]
fn integral_is_clamped() {
    let mut st = ControllerState::default();
    for _ in 0..10_000 {
        st.integrate(&Vector3::new(1.0, -1.0, 0.1), 0.002, 0.5);
    }
    assert_eq!(st.integral.x, 0.5);
    assert_eq!(st.integral.y, -0.5);
    assert!(st.integral.z <= 0.5);
}

#[test]
fn gains_must_be_positive_definite() {
    let (_, mut g) = setup();
    assert!(g.validate().is_ok());
    g.lambda[(0, 0)] = -1.0;
    assert!(g.validate().is_err());
    let (_, mut g) = setup();
    g.k[(0, 1)] = 0.5;
    assert!(g.validate().is_err());
}
