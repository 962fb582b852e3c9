use std::io::Write;

use nalgebra::{Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::{
    ControllerGains, InteractionPredictor, RefPoint, ReferenceTrajectory, TrackingSample, VehicleController,
};
use crate::sim::{nominal_derivative, oracle_fa, step_rk4, OracleParams, VehicleParams, VehicleState, WorldState};
use crate::trainer::LoggedStep;

use super::scenario::{make_swap_trajectories, RandomWalk, ScenarioConfig, ScenarioKind, SwapTrajectory};
use super::HarnessError;

/// Tracking errors beyond this are treated as a lost vehicle, m.
pub const DIVERGENCE_LIMIT: f64 = 5.0;

const SENSOR_STREAM: u64 = 0x5E45_0A11;

/// Physical and numerical setup shared by every flight.
#[derive(Clone, Debug)]
pub struct FlightSetup {
    pub params: VehicleParams,
    pub oracle: OracleParams,
    pub gains: ControllerGains,
    pub dt: f64,
    pub log_rate: f64,
    pub sensor_noise: f64,
    pub process_noise: f64,
    pub neighbor_radius: f64,
    /// When false the true interaction force is zero.
    pub interaction: bool,
}

impl FlightSetup {
    /// Same setup with every noise source switched off.
    pub fn noiseless(&self) -> Self {
        Self {
            sensor_noise: 0.0,
            process_noise: 0.0,
            ..self.clone()
        }
    }

    /// Same setup with the interaction force switched off.
    pub fn without_interaction(&self) -> Self {
        Self {
            interaction: false,
            ..self.clone()
        }
    }

    pub fn log_every(&self) -> usize {
        ((1.0 / (self.log_rate * self.dt)).round() as usize).max(1)
    }
}

/// One logged instant of one vehicle, with controller internals.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: LoggedStep,
    pub p_d: Vector3<f64>,
    /// True vertical interaction force, N.
    pub f_true: f64,
    /// Predicted vertical interaction force, N.
    pub f_hat: f64,
    pub s: Vector3<f64>,
    pub f_d: Vector3<f64>,
    pub thrust: f64,
    pub saturated: bool,
}

/// Per-vehicle results of a flight.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VehicleSummary {
    /// Largest absolute tracking error per axis over the flight, m.
    pub max_abs_err: Vector3<f64>,
    /// Logged learning and tracking errors for the error-ball check.
    pub tracking: Vec<TrackingSample>,
}

#[derive(Clone, Debug)]
pub struct FlightResult {
    pub scenario: ScenarioConfig,
    /// Rows ordered by time, then vehicle.
    pub log: Vec<LogRow>,
    pub vehicles: Vec<VehicleSummary>,
    /// Smallest distance between any two vehicles, m.
    pub min_separation: f64,
    /// Diagnostic of the failure that ended the flight early.
    pub diverged: Option<String>,
    pub t_end: f64,
}

impl FlightResult {
    pub fn max_error(&self, axis: usize) -> f64 {
        self.vehicles.iter().map(|v| v.max_abs_err[axis]).fold(0.0, f64::max)
    }

    pub fn max_z_error(&self) -> f64 {
        self.max_error(2)
    }

    /// Vertical gaps of every vehicle pair logged while the pair was within
    /// `align_radius` horizontally.
    pub fn alignment_separations(&self, align_radius: f64) -> Vec<f64> {
        let n = self.scenario.n_vehicles;
        let mut out = Vec::new();
        for rows in self.log.chunks(n).filter(|c| c.len() == n) {
            for i in 0..n {
                for j in i + 1..n {
                    let d = rows[j].step.state.p - rows[i].step.state.p;
                    if d.xy().norm() < align_radius {
                        out.push(d.z.abs());
                    }
                }
            }
        }
        out
    }

    pub fn logged_steps(&self) -> Vec<LoggedStep> {
        self.log.iter().map(|r| r.step.clone()).collect()
    }
}

enum References {
    Swap(Vec<SwapTrajectory>),
    Walk(RandomWalk),
}

impl References {
    fn sample(&self, t: f64, out: &mut Vec<RefPoint>) {
        out.clear();
        match self {
            References::Swap(trajs) => out.extend(trajs.iter().map(|tr| tr.sample(t))),
            References::Walk(w) => out.extend_from_slice(w.references()),
        }
    }
}

fn gaussian(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("noise levels are validated as finite and non-negative")
}

/// Fly one scenario in closed loop. Each vehicle's controller sees only
/// its own state, its reference and the relative states of vehicles inside
/// the neighbor radius; the true interaction force is computed from all
/// other vehicles. A failure ends the flight early and is reported in
/// `diverged` together with the partial log.
pub fn fly(
    setup: &FlightSetup,
    scenario: &ScenarioConfig,
    predictor: &dyn InteractionPredictor,
) -> Result<FlightResult, HarnessError> {
    scenario.validate()?;
    if !(setup.sensor_noise >= 0.0 && setup.process_noise >= 0.0) {
        return Err(HarnessError::InvalidScenario("noise levels must be >= 0".into()));
    }
    let n = scenario.n_vehicles;
    let mut refs = match scenario.kind {
        ScenarioKind::Swap => References::Swap(make_swap_trajectories(scenario)?),
        ScenarioKind::RandomWalk => References::Walk(RandomWalk::new(scenario)?),
    };
    let mut r_now = Vec::with_capacity(n);
    refs.sample(0.0, &mut r_now);
    let vehicles = r_now.iter().map(|r| VehicleState::at_rest(r.p)).collect();
    let mut world = WorldState::new(vehicles, setup.params.clone()).map_err(HarnessError::Sim)?;
    let mut controllers = vec![VehicleController::new(setup.gains.clone()); n];

    let mirror = if scenario.mirror_x { -1.0 } else { 1.0 };
    let mut rng_process = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut rng_sensor = ChaCha8Rng::seed_from_u64(scenario.seed ^ SENSOR_STREAM);
    let process = gaussian(setup.process_noise);
    let sensor = gaussian(setup.sensor_noise);
    let noise3 = |rng: &mut ChaCha8Rng, dist: &Normal<f64>| {
        Vector3::new(mirror * dist.sample(rng), dist.sample(rng), dist.sample(rng))
    };

    let steps = (scenario.duration / setup.dt).round() as usize;
    let log_every = setup.log_every();
    let mut log = Vec::with_capacity(n * (steps / log_every + 1));
    let mut summaries = vec![VehicleSummary::default(); n];
    let mut min_sep = f64::INFINITY;
    let mut diverged = None;
    let mut controls = vec![Vector4::zeros(); n];
    let mut forces = vec![Vector3::zeros(); n];
    let mut t_end = 0.0;

    'flight: for k in 0..=steps {
        let t = k as f64 * setup.dt;
        t_end = t;
        refs.sample(t, &mut r_now);
        for i in 0..n {
            for j in i + 1..n {
                min_sep = min_sep.min((world.vehicles[i].p - world.vehicles[j].p).norm());
            }
        }
        if k == steps {
            break;
        }
        let logging = k % log_every == 0;
        for i in 0..n {
            let own = world.vehicles[i].clone();
            let neighbors = world.neighbors_within(i, setup.neighbor_radius);
            let f_true = if setup.interaction {
                oracle_fa(&world.relative_states(i), &setup.oracle)
            } else {
                0.0
            };
            let out = controllers[i].update(&own, &r_now[i], &neighbors, predictor, &setup.params, setup.dt);
            let p_err = own.p - r_now[i].p;
            if !(p_err.norm() <= DIVERGENCE_LIMIT) {
                diverged = Some(format!("vehicle {i} lost track at t={t:.3}s (|error| = {:.3} m)", p_err.norm()));
                break 'flight;
            }
            let s = &mut summaries[i];
            s.max_abs_err = s.max_abs_err.sup(&p_err.abs());
            let f_ext = Vector3::new(0.0, 0.0, f_true) + noise3(&mut rng_process, &process);
            controls[i] = out.u;
            forces[i] = f_ext;
            if logging {
                let accel = nominal_derivative(&own, &out.u, &setup.params, &f_ext)
                    .map(|d| d.v_dot + noise3(&mut rng_sensor, &sensor))
                    .ok();
                s.tracking.push(TrackingSample {
                    t,
                    epsilon: Vector3::new(0.0, 0.0, out.f_hat - f_true),
                    p_err,
                });
                log.push(LogRow {
                    step: LoggedStep {
                        scenario: scenario.scenario_id,
                        vehicle: i,
                        t,
                        state: own,
                        u: out.u,
                        accel,
                        neighbors,
                    },
                    p_d: r_now[i].p,
                    f_true,
                    f_hat: out.f_hat,
                    s: out.s,
                    f_d: out.f_d,
                    thrust: out.thrust,
                    saturated: out.saturated,
                });
            }
        }
        match step_rk4(&world, &controls, &forces, setup.dt) {
            Ok(next) => world = next,
            Err(e) => {
                diverged = Some(e.to_string());
                break;
            }
        }
        if let References::Walk(w) = &mut refs {
            w.advance(t, setup.dt);
        }
    }
    Ok(FlightResult {
        scenario: scenario.clone(),
        log,
        vehicles: summaries,
        min_separation: min_sep,
        diverged,
        t_end,
    })
}

pub const TRAJECTORY_HEADER: &str = "t,vehicle,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,u1,u2,u3,u4,ax,ay,az,\
fa_true,fa_pred,sx,sy,sz,fdx,fdy,fdz,thrust,saturated,pdx,pdy,pdz";

/// Trajectory log as CSV (see [`TRAJECTORY_HEADER`]). A missing
/// acceleration leaves its three columns empty.
pub fn write_trajectory_csv<W: Write>(log: &[LogRow], out: W) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for row in log {
        let st = &row.step.state;
        let q = st.quaternion();
        let mut fields: Vec<String> = vec![row.step.t.to_string(), row.step.vehicle.to_string()];
        fields.extend(st.p.iter().chain(st.v.iter()).map(f64::to_string));
        fields.extend([q.w, q.i, q.j, q.k].iter().map(f64::to_string));
        fields.extend(st.omega.iter().chain(row.step.u.iter()).map(f64::to_string));
        match row.step.accel {
            Some(a) => fields.extend(a.iter().map(f64::to_string)),
            None => fields.extend(std::iter::repeat_n(String::new(), 3)),
        }
        fields.push(row.f_true.to_string());
        fields.push(row.f_hat.to_string());
        fields.extend(row.s.iter().chain(row.f_d.iter()).map(f64::to_string));
        fields.push(row.thrust.to_string());
        fields.push(u8::from(row.saturated).to_string());
        fields.extend(row.p_d.iter().map(f64::to_string));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}
