//! Typed configuration tree, loading, hashing and run manifests.
//!
//! Configuration files are TOML with one table per subsystem. Every key has
//! a default (see `Config::default` and the README), unknown keys are
//! rejected, and values are checked against their invariants on load.

mod manifest;

pub use manifest::{aggregate_manifests, read_manifest, write_manifest, ExperimentManifest};

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::ControllerGains;
use crate::harness::{FlightSetup, ScenarioParams};
use crate::sim::{OracleParams, VehicleParams, MAX_DT};
use crate::trainer::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("manifest: {0}")]
    Manifest(String),
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

/// Airframe and actuator parameters. Motor commands are squared speeds in
/// (krad/s)²; `kf` and `km` convert them to thrust and drag torque.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleConfig {
    /// kg
    pub mass: f64,
    /// Principal moments of inertia, kg·m².
    pub inertia: [f64; 3],
    /// Rotor distance from the center, m.
    pub arm_length: f64,
    /// N per (krad/s)².
    pub kf: f64,
    /// N·m per (krad/s)².
    pub km: f64,
    /// Full-throttle thrust over weight; fixes the motor cap.
    pub thrust_to_weight: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            mass: 0.034,
            inertia: [16.571710e-6, 16.655602e-6, 29.261652e-6],
            arm_length: 0.046,
            kf: 2.88e-2,
            km: 7.24e-4,
            thrust_to_weight: 2.6,
            gravity: 9.81,
        }
    }
}

impl VehicleConfig {
    /// Per-motor cap on the squared speed.
    pub fn u_max(&self) -> f64 {
        self.thrust_to_weight * self.mass * self.gravity / (4.0 * self.kf)
    }

    pub fn params(&self) -> Result<VehicleParams, ConfigError> {
        VehicleParams::quad_x(
            self.mass,
            Vector3::from(self.inertia),
            self.arm_length,
            self.kf,
            self.km,
            self.u_max(),
            self.gravity,
        )
        .map_err(|e| invalid("vehicle", e.to_string()))
    }
}

/// Integrator, logging and sensing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration and control step, s.
    pub dt: f64,
    /// Logging rate, Hz.
    pub log_rate: f64,
    /// Standard deviation of the accelerometer noise, m/s².
    pub sensor_noise: f64,
    /// Standard deviation of the random force acting on each vehicle, N.
    pub process_noise: f64,
    /// Vehicles farther than this on any axis are not neighbors, m.
    pub neighbor_radius: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            log_rate: 100.0,
            sensor_noise: 0.05,
            process_noise: 0.001,
            neighbor_radius: 1.0,
        }
    }
}

/// Gains of the position and attitude loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Diagonal of Λ, s⁻¹.
    pub lambda: [f64; 3],
    /// Diagonal of K / m, s⁻¹.
    pub k_over_mass: [f64; 3],
    /// Natural frequency of the attitude loop, rad/s.
    pub attitude_bandwidth: f64,
    /// m·s
    pub integral_limit: f64,
    /// N
    pub thrust_epsilon: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            lambda: [2.0; 3],
            k_over_mass: [4.0; 3],
            attitude_bandwidth: 20.0,
            integral_limit: 0.5,
            thrust_epsilon: 1e-6,
        }
    }
}

/// Curriculum data collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumConfig {
    /// Flight time of each collection scenario, s.
    pub duration: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self { duration: 60.0 }
    }
}

/// Evaluation runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    /// Repetitions per table cell.
    pub repetitions: usize,
    /// Swaps per evaluation flight.
    pub swaps: usize,
    /// Pairs closer than this horizontally count as aligned, m.
    pub align_radius: f64,
    /// Start of the steady window for error-ball checks, s.
    pub steady_after: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            repetitions: 6,
            swaps: 6,
            align_radius: 0.1,
            steady_after: 1.0,
        }
    }
}

/// The whole configuration tree.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub vehicle: VehicleConfig,
    pub oracle: OracleParams,
    pub sim: SimConfig,
    pub controller: ControllerConfig,
    pub train: TrainConfig,
    pub scenario: ScenarioParams,
    pub curriculum: CurriculumConfig,
    pub harness: HarnessConfig,
}

fn check(cond: bool, key: &str, msg: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(invalid(key, msg))
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = &self.vehicle;
        check(v.mass > 0.0 && v.mass.is_finite(), "vehicle.mass", "must be > 0")?;
        check(v.inertia.iter().all(|j| *j > 0.0), "vehicle.inertia", "entries must be > 0")?;
        check(v.arm_length > 0.0, "vehicle.arm_length", "must be > 0")?;
        check(v.kf > 0.0, "vehicle.kf", "must be > 0")?;
        check(v.km > 0.0, "vehicle.km", "must be > 0")?;
        check(v.thrust_to_weight > 1.0, "vehicle.thrust_to_weight", "must exceed 1 to hover")?;
        check(v.gravity > 0.0, "vehicle.gravity", "must be > 0")?;
        self.oracle.validate().map_err(|e| invalid("oracle", e.to_string()))?;
        let s = &self.sim;
        check(s.dt > 0.0 && s.dt <= MAX_DT, "sim.dt", "must lie in (0, 0.02]")?;
        check(s.log_rate > 0.0 && s.log_rate * s.dt <= 1.0, "sim.log_rate", "must be positive and at most 1/dt")?;
        check(s.sensor_noise >= 0.0, "sim.sensor_noise", "must be >= 0")?;
        check(s.process_noise >= 0.0, "sim.process_noise", "must be >= 0")?;
        check(s.neighbor_radius > 0.0, "sim.neighbor_radius", "must be > 0")?;
        let c = &self.controller;
        check(c.lambda.iter().all(|x| *x > 0.0), "controller.lambda", "entries must be > 0")?;
        check(c.k_over_mass.iter().all(|x| *x > 0.0), "controller.k_over_mass", "entries must be > 0")?;
        check(c.attitude_bandwidth > 0.0, "controller.attitude_bandwidth", "must be > 0")?;
        check(c.integral_limit > 0.0, "controller.integral_limit", "must be > 0")?;
        check(c.thrust_epsilon > 0.0, "controller.thrust_epsilon", "must be > 0")?;
        self.train.validate().map_err(|msg| {
            let key = msg.split_whitespace().next().unwrap_or("train").to_string();
            invalid(&key, msg)
        })?;
        self.scenario.validate().map_err(|msg| {
            let key = msg.split_whitespace().next().unwrap_or("scenario").to_string();
            invalid(&key, msg)
        })?;
        check(self.curriculum.duration > 0.0, "curriculum.duration", "must be > 0")?;
        let h = &self.harness;
        check(h.repetitions > 0, "harness.repetitions", "must be > 0")?;
        check(h.swaps > 0, "harness.swaps", "must be > 0")?;
        check(h.align_radius > 0.0, "harness.align_radius", "must be > 0")?;
        check(h.steady_after >= 0.0, "harness.steady_after", "must be >= 0")?;
        Ok(())
    }

    pub fn gains(&self) -> ControllerGains {
        let c = &self.controller;
        let m = self.vehicle.mass;
        let mut gains = ControllerGains::scalar(1.0, 1.0, Vector3::from(self.vehicle.inertia), c.attitude_bandwidth);
        gains.lambda = Matrix3::from_diagonal(&Vector3::from(c.lambda));
        gains.k = Matrix3::from_diagonal(&(Vector3::from(c.k_over_mass) * m));
        gains.integral_limit = c.integral_limit;
        gains.thrust_epsilon = c.thrust_epsilon;
        gains
    }

    /// Everything a closed-loop flight needs.
    pub fn flight_setup(&self) -> Result<FlightSetup, ConfigError> {
        Ok(FlightSetup {
            params: self.vehicle.params()?,
            oracle: self.oracle.clone(),
            gains: self.gains(),
            dt: self.sim.dt,
            log_rate: self.sim.log_rate,
            sensor_noise: self.sim.sensor_noise,
            process_noise: self.sim.process_noise,
            neighbor_radius: self.sim.neighbor_radius,
            interaction: true,
        })
    }
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Config::from_toml_str(&text)
}
