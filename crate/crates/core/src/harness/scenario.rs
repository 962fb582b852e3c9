use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{RefPoint, ReferenceTrajectory};

use super::HarnessError;

/// Largest swarm the scenarios support.
pub const MAX_VEHICLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Swap,
    RandomWalk,
}

/// Geometry and timing shared by all scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Height difference between neighboring swap layers, m.
    pub vertical_separation: f64,
    /// Radius of the swap cylinder, m.
    pub radius: f64,
    /// Duration of one traverse across the cylinder, s.
    pub half_period: f64,
    /// Height of the lowest swap layer, m.
    pub base_height: f64,
    /// Hover time appended after the last evaluation swap, s.
    pub hold: f64,
    /// Center of the random-walk goal box, m.
    pub walk_center: [f64; 3],
    /// Half extents of the random-walk goal box, m.
    pub walk_half_extent: [f64; 3],
    /// Time between goal resamples, s.
    pub goal_period: f64,
    /// Attractive gain toward the goal, s⁻¹.
    pub attraction: f64,
    /// Speed cap of the commanded velocity, m/s.
    pub max_speed: f64,
    /// Neighbors closer than this repel, m.
    pub repulsion_radius: f64,
    /// Distance at which the repulsion diverges, m.
    pub repulsion_floor: f64,
    /// Repulsion gain, m²/s.
    pub repulsion_gain: f64,
    /// Time constant of the reference-velocity filter, s.
    pub velocity_filter: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            vertical_separation: 0.25,
            radius: 0.5,
            half_period: 4.5,
            base_height: 1.0,
            hold: 1.0,
            walk_center: [0.0, 0.0, 1.5],
            walk_half_extent: [0.1, 0.1, 0.3],
            goal_period: 2.0,
            attraction: 2.0,
            max_speed: 1.0,
            repulsion_radius: 0.25,
            repulsion_floor: 0.1,
            repulsion_gain: 0.05,
            velocity_filter: 0.2,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("scenario.vertical_separation", self.vertical_separation),
            ("scenario.radius", self.radius),
            ("scenario.half_period", self.half_period),
            ("scenario.goal_period", self.goal_period),
            ("scenario.attraction", self.attraction),
            ("scenario.max_speed", self.max_speed),
            ("scenario.repulsion_radius", self.repulsion_radius),
            ("scenario.repulsion_floor", self.repulsion_floor),
            ("scenario.velocity_filter", self.velocity_filter),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{key} must be positive"));
            }
        }
        if !(self.hold >= 0.0) {
            return Err("scenario.hold must be >= 0".into());
        }
        if !(self.repulsion_gain >= 0.0) {
            return Err("scenario.repulsion_gain must be >= 0".into());
        }
        if self.repulsion_floor >= self.repulsion_radius {
            return Err("scenario.repulsion_floor must be below scenario.repulsion_radius".into());
        }
        if self.walk_half_extent.iter().any(|h| !(*h >= 0.0)) {
            return Err("scenario.walk_half_extent entries must be >= 0".into());
        }
        if self.walk_center[2] - self.walk_half_extent[2] <= 0.0 {
            return Err("scenario.walk_center places goals below the ground".into());
        }
        Ok(())
    }
}

/// One flight: what to fly, with how many vehicles, for how long.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub n_vehicles: usize,
    /// s
    pub duration: f64,
    pub seed: u64,
    /// Reflect the scenario through the y-z plane.
    pub mirror_x: bool,
    /// Identifier written into logs and samples.
    pub scenario_id: u64,
    pub params: ScenarioParams,
}

impl ScenarioConfig {
    /// Evaluation swap with `swaps` full back-and-forth cycles and a final hold.
    pub fn swap(n_vehicles: usize, swaps: usize, seed: u64, params: &ScenarioParams) -> Self {
        Self {
            kind: ScenarioKind::Swap,
            n_vehicles,
            duration: 2.0 * swaps as f64 * params.half_period + params.hold,
            seed,
            mirror_x: false,
            scenario_id: 0,
            params: params.clone(),
        }
    }

    pub fn random_walk(n_vehicles: usize, duration: f64, seed: u64, params: &ScenarioParams) -> Self {
        Self {
            kind: ScenarioKind::RandomWalk,
            n_vehicles,
            duration,
            seed,
            mirror_x: false,
            scenario_id: 0,
            params: params.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(1..=MAX_VEHICLES).contains(&self.n_vehicles) {
            return Err(HarnessError::InvalidScenario(format!(
                "vehicle count {} outside 1..={MAX_VEHICLES}",
                self.n_vehicles
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(HarnessError::InvalidScenario("duration must be positive".into()));
        }
        self.params.validate().map_err(HarnessError::InvalidScenario)
    }

    /// Number of complete traverses that fit in the duration.
    pub fn traverses(&self) -> usize {
        (self.duration / self.params.half_period).floor() as usize
    }

    /// Instants at which all swap vehicles pass over the cylinder axis.
    pub fn alignment_times(&self) -> Vec<f64> {
        (0..self.traverses())
            .map(|k| (k as f64 + 0.5) * self.params.half_period)
            .collect()
    }
}

/// Minimum-jerk blend from 0 to 1 and its first two derivatives in `tau`.
pub fn min_jerk(tau: f64) -> (f64, f64, f64) {
    let t = tau.clamp(0.0, 1.0);
    let (t2, t3) = (t * t, t * t * t);
    (
        10.0 * t3 - 15.0 * t3 * t + 6.0 * t3 * t2,
        30.0 * t2 - 60.0 * t3 + 30.0 * t3 * t,
        60.0 * t - 180.0 * t2 + 120.0 * t3,
    )
}

/// Back-and-forth traverse of one swap vehicle along a fixed diameter.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapTrajectory {
    /// Horizontal unit direction of the diameter.
    pub direction: Vector3<f64>,
    pub radius: f64,
    pub height: f64,
    pub half_period: f64,
    pub traverses: usize,
}

impl ReferenceTrajectory for SwapTrajectory {
    fn sample(&self, t: f64) -> RefPoint {
        let t = t.max(0.0);
        let k = (t / self.half_period).floor() as usize;
        let (k, tau) = if k >= self.traverses {
            (self.traverses, 0.0)
        } else {
            (k, t / self.half_period - k as f64)
        };
        let (s, ds, dds) = min_jerk(tau);
        // Even traverses run from +radius to −radius, odd ones back.
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = self.radius / self.half_period;
        let axis = self.direction * self.radius;
        RefPoint {
            p: axis * (sign * (1.0 - 2.0 * s)) + Vector3::new(0.0, 0.0, self.height),
            v: self.direction * (-2.0 * sign * w * ds),
            a: self.direction * (-2.0 * sign * w * dds / self.half_period),
        }
    }
}

/// Per-vehicle swap references. Vehicle `i` flies at height
/// `base + i·separation` along the diameter at angle `π·i/n`; all vehicles
/// cross the axis together in the middle of every traverse.
pub fn make_swap_trajectories(config: &ScenarioConfig) -> Result<Vec<SwapTrajectory>, HarnessError> {
    config.validate()?;
    let p = &config.params;
    if p.base_height <= 0.0 {
        return Err(HarnessError::InvalidScenario("scenario.base_height must be positive".into()));
    }
    let n = config.n_vehicles;
    let mx = if config.mirror_x { -1.0 } else { 1.0 };
    Ok((0..n)
        .map(|i| {
            let theta = PI * i as f64 / n as f64;
            SwapTrajectory {
                direction: Vector3::new(mx * theta.cos(), theta.sin(), 0.0),
                radius: p.radius,
                height: p.base_height + i as f64 * p.vertical_separation,
                half_period: p.half_period,
                traverses: config.traverses(),
            }
        })
        .collect())
}

/// Potential-field reference generator for the random walk. The reference
/// velocity is a first-order filtered copy of the commanded velocity, so
/// the reference is twice differentiable.
#[derive(Clone, Debug)]
pub struct RandomWalk {
    params: ScenarioParams,
    mirror: f64,
    rng: ChaCha8Rng,
    goals: Vec<Vector3<f64>>,
    next_resample: f64,
    refs: Vec<RefPoint>,
}

impl RandomWalk {
    pub fn new(config: &ScenarioConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ GOAL_STREAM);
        let mirror = if config.mirror_x { -1.0 } else { 1.0 };
        let p = &config.params;
        let mut walk = Self {
            params: p.clone(),
            mirror,
            goals: Vec::new(),
            next_resample: 0.0,
            refs: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        // Start on a vertical column inside the box so that downwash is
        // present from the first second.
        let n = config.n_vehicles;
        let c = Vector3::from(p.walk_center);
        let h = Vector3::from(p.walk_half_extent);
        walk.refs = (0..n)
            .map(|i| {
                let frac = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
                let jitter = Vector3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), 0.0) * 0.02;
                let mut p0 = Vector3::new(c.x, c.y, c.z - h.z + 2.0 * h.z * frac) + jitter;
                p0.x *= mirror;
                RefPoint::hold(p0)
            })
            .collect();
        walk.rng = rng;
        walk.resample_goals();
        walk.next_resample = p.goal_period;
        Ok(walk)
    }

    fn resample_goals(&mut self) {
        let c = Vector3::from(self.params.walk_center);
        let h = Vector3::from(self.params.walk_half_extent);
        let n = self.refs.len();
        self.goals = (0..n)
            .map(|_| {
                let mut g = Vector3::zeros();
                for k in 0..3 {
                    g[k] = c[k] + h[k] * self.rng.random_range(-1.0..=1.0);
                }
                g.x *= self.mirror;
                g
            })
            .collect();
    }

    pub fn goals(&self) -> &[Vector3<f64>] {
        &self.goals
    }

    /// Current references.
    pub fn references(&self) -> &[RefPoint] {
        &self.refs
    }

    /// Commanded velocity of vehicle `i` given the reference positions.
    fn command(&self, i: usize) -> Vector3<f64> {
        let p = &self.params;
        let me = self.refs[i].p;
        let mut v = (self.goals[i] - me) * p.attraction;
        for (j, other) in self.refs.iter().enumerate() {
            if j == i {
                continue;
            }
            let d_vec = me - other.p;
            let d = d_vec.norm();
            if d < p.repulsion_radius && d > 0.0 {
                let gap = (d - p.repulsion_floor).max(1e-3);
                let mag = p.repulsion_gain * (1.0 / gap - 1.0 / (p.repulsion_radius - p.repulsion_floor));
                v += d_vec / d * mag;
            }
        }
        let speed = v.norm();
        if speed > p.max_speed {
            v *= p.max_speed / speed;
        }
        v
    }

    /// Advance every reference by `dt` from time `t`.
    pub fn advance(&mut self, t: f64, dt: f64) {
        let t_next = t + dt;
        if t_next >= self.next_resample - 1e-12 {
            self.resample_goals();
            self.next_resample += self.params.goal_period;
        }
        let cmds: Vec<_> = (0..self.refs.len()).map(|i| self.command(i)).collect();
        let tau = self.params.velocity_filter;
        for (r, cmd) in self.refs.iter_mut().zip(cmds) {
            let a = (cmd - r.v) / tau;
            r.p += r.v * dt + a * (0.5 * dt * dt);
            r.v += a * dt;
            r.a = (cmd - r.v) / tau;
        }
    }
}

const GOAL_STREAM: u64 = 0x60A1_5EED;
