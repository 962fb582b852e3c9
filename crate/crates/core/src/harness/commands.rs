//! File-producing entry points behind the command-line subcommands.
//! Every command writes CSV outputs plus a manifest into its output
//! directory; identical inputs give byte-identical CSV files.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{aggregate_manifests, write_manifest, Config, ConfigError, ExperimentManifest};
use crate::controller::{error_ball_check, ErrorBallReport, InteractionPredictor, ZeroPredictor};
use crate::net::{model_to_string, save_model, DeepSetsModel, NetError};
use crate::trainer::{collect_curriculum, evaluate, run_curriculum, train, Dataset, TrainError};

use super::metrics::{
    flight_summary_csv, heatmap_grid, metrics_csv, run_table, table_csv, trace_compare, trace_csv, trace_stats_csv,
    CellValue, HeatmapWindow, Placement, TableController,
};
use super::runner::{fly, write_trajectory_csv};
use super::scenario::{ScenarioConfig, ScenarioKind};
use super::HarnessError;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// What a command produced.
#[derive(Clone, Debug, Default)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    /// Set when any flight ended early.
    pub diverged: bool,
    /// Human-readable summary lines.
    pub messages: Vec<String>,
}

struct Output<'a> {
    dir: &'a Path,
    outcome: CommandOutcome,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Result<Self, CommandError> {
        std::fs::create_dir_all(dir).map_err(|source| CommandError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir,
            outcome: CommandOutcome::default(),
        })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CommandError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CommandError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn manifest(&mut self, manifest: &ExperimentManifest) -> Result<(), CommandError> {
        write_manifest(self.dir, manifest)?;
        self.outcome.files.push(self.dir.join("manifest.txt"));
        Ok(())
    }

    fn say(&mut self, msg: String) {
        self.outcome.messages.push(msg);
    }
}

/// Hex SHA-256 of a model's serialized form.
pub fn model_hash(model: &DeepSetsModel) -> String {
    hex::encode(Sha256::digest(model_to_string(model).as_bytes()))
}

fn optional_hash(model: Option<&DeepSetsModel>) -> String {
    model.map(model_hash).unwrap_or_default()
}

/// Collect one curriculum stage: `dataset.csv`, `separations.csv`.
pub fn cmd_collect(
    config: &Config,
    seed: u64,
    stage: usize,
    model: Option<&DeepSetsModel>,
    out_dir: &Path,
    timestamp: u64,
) -> Result<CommandOutcome, CommandError> {
    let mut out = Output::new(out_dir)?;
    let run = collect_curriculum(stage, model, config, seed)?;
    let mut csv = Vec::new();
    run.dataset.write_csv(&mut csv)?;
    out.write("dataset.csv", csv)?;
    out.write("separations.csv", run.separations_csv())?;
    out.manifest(&ExperimentManifest::new(config, seed, optional_hash(model), timestamp))?;
    out.say(format!(
        "stage {stage}: {} samples ({} skipped), {} aligned pairs",
        run.dataset.len(),
        run.dataset.skipped,
        run.alignment_separations.len()
    ));
    for d in &run.diagnostics {
        out.say(d.clone());
    }
    out.outcome.diverged = !run.diagnostics.is_empty();
    Ok(out.outcome)
}

/// Train on a dataset file: `model.txt`, `loss.csv`, `eval.csv`.
pub fn cmd_train(config: &Config, seed: u64, data: &Path, out_dir: &Path, timestamp: u64) -> Result<CommandOutcome, CommandError> {
    let mut out = Output::new(out_dir)?;
    let dataset = Dataset::load(data)?;
    let outcome = train(&dataset, &config.train, seed)?;
    let path = out_dir.join("model.txt");
    save_model(&outcome.model, &path)?;
    out.outcome.files.push(path);
    out.write("loss.csv", outcome.trace_csv())?;
    out.write("eval.csv", evaluate(&outcome.model, &dataset)?.to_csv())?;
    out.manifest(&ExperimentManifest::new(config, seed, model_hash(&outcome.model), timestamp))?;
    out.say(format!(
        "best epoch {} of {}{}",
        outcome.best_epoch,
        outcome.trace.len(),
        if outcome.aborted { " (stopped on non-finite loss)" } else { "" }
    ));
    Ok(out.outcome)
}

/// Options of a single flight.
#[derive(Clone, Debug, PartialEq)]
pub struct FlyOptions {
    pub kind: ScenarioKind,
    pub n_vehicles: usize,
    /// Overrides the default duration (evaluation swap length, or the
    /// curriculum duration for random walks).
    pub duration: Option<f64>,
    /// Feed the true interaction force forward instead of a model.
    pub oracle_feedforward: bool,
}

fn scenario_for(config: &Config, seed: u64, opts: &FlyOptions) -> ScenarioConfig {
    let mut sc = match opts.kind {
        ScenarioKind::Swap => ScenarioConfig::swap(opts.n_vehicles, config.harness.swaps, seed, &config.scenario),
        ScenarioKind::RandomWalk => {
            ScenarioConfig::random_walk(opts.n_vehicles, config.curriculum.duration, seed, &config.scenario)
        }
    };
    if let Some(d) = opts.duration {
        sc.duration = d;
    }
    sc
}

/// Fly one scenario: `trajectory.csv`, `summary.csv`, `error_ball.csv`.
pub fn cmd_fly(
    config: &Config,
    seed: u64,
    model: Option<&DeepSetsModel>,
    opts: &FlyOptions,
    out_dir: &Path,
    timestamp: u64,
) -> Result<CommandOutcome, CommandError> {
    let mut out = Output::new(out_dir)?;
    let setup = config.flight_setup()?;
    let predictor: &dyn InteractionPredictor = match (opts.oracle_feedforward, model) {
        (true, _) => &setup.oracle,
        (false, Some(m)) => m,
        (false, None) => &ZeroPredictor,
    };
    let result = fly(&setup, &scenario_for(config, seed, opts), predictor)?;
    let mut traj = Vec::new();
    write_trajectory_csv(&result.log, &mut traj).map_err(|source| CommandError::Io {
        path: "trajectory.csv".into(),
        source,
    })?;
    out.write("trajectory.csv", traj)?;
    out.write("summary.csv", flight_summary_csv(&result))?;
    let mut ball = String::from("vehicle,d_m,bound,measured\n");
    let reports: Vec<_> = result
        .vehicles
        .iter()
        .map(|v| error_ball_check(&v.tracking, &setup.gains, config.harness.steady_after))
        .collect();
    for (i, r) in reports.iter().enumerate() {
        ball.push_str(&format!("{i},{},{},{}\n", r.d_m, r.bound, r.measured));
    }
    let all = ErrorBallReport::combine(&reports);
    ball.push_str(&format!("all,{},{},{}\n", all.d_m, all.bound, all.measured));
    out.write("error_ball.csv", ball)?;
    out.manifest(&ExperimentManifest::new(config, seed, optional_hash(model), timestamp))?;
    out.say(format!("max z error {:.4} m", result.max_z_error()));
    if let Some(msg) = &result.diverged {
        out.say(msg.clone());
        out.outcome.diverged = true;
    }
    Ok(out.outcome)
}

/// Models for the trained rows of the table, by training stage.
pub struct TableModels {
    pub trained_on_2: DeepSetsModel,
    pub trained_on_3: DeepSetsModel,
    pub trained_on_4: DeepSetsModel,
}

/// Full comparison: `table.csv` (controllers × swap sizes), `metrics.csv`.
/// Without models the curriculum is run first and its models are written
/// to `models/`.
pub fn cmd_table(
    config: &Config,
    seed: u64,
    models: Option<TableModels>,
    out_dir: &Path,
    timestamp: u64,
) -> Result<CommandOutcome, CommandError> {
    let mut out = Output::new(out_dir)?;
    let models = match models {
        Some(m) => m,
        None => {
            let mut stages = run_curriculum(config, seed, 4)?.into_iter().map(|s| s.training.model);
            let (m2, m3, m4) = (stages.next(), stages.next(), stages.next());
            let m = TableModels {
                trained_on_2: m2.expect("three stages"),
                trained_on_3: m3.expect("three stages"),
                trained_on_4: m4.expect("three stages"),
            };
            let dir = out_dir.join("models");
            std::fs::create_dir_all(&dir).map_err(|source| CommandError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            for (k, model) in [(2, &m.trained_on_2), (3, &m.trained_on_3), (4, &m.trained_on_4)] {
                let path = dir.join(format!("trained_on_{k}.txt"));
                save_model(model, &path)?;
                out.outcome.files.push(path);
            }
            m
        }
    };
    let setup = config.flight_setup()?;
    let controllers = [
        TableController {
            label: "baseline".into(),
            trained_on: None,
            predictor: &ZeroPredictor,
        },
        TableController {
            label: "trained_on_2".into(),
            trained_on: Some(2),
            predictor: &models.trained_on_2,
        },
        TableController {
            label: "trained_on_3".into(),
            trained_on: Some(3),
            predictor: &models.trained_on_3,
        },
        TableController {
            label: "trained_on_4".into(),
            trained_on: Some(4),
            predictor: &models.trained_on_4,
        },
    ];
    let hashes = [
        String::new(),
        model_hash(&models.trained_on_2),
        model_hash(&models.trained_on_3),
        model_hash(&models.trained_on_4),
    ];
    let tasks = [2, 3, 4, 5];
    let rows = run_table(
        &setup,
        &config.scenario,
        config.harness.swaps,
        config.harness.repetitions,
        &controllers,
        &tasks,
        seed,
    )?;
    // Every cell records its provenance; the table only aggregates cells
    // that agree on the configuration.
    let mut manifests = Vec::new();
    for row in &rows {
        let ci = controllers.iter().position(|c| c.label == row.controller).expect("row from controller");
        let cell_dir = out_dir.join("cells").join(format!("{}_swap_{}", row.controller, row.task));
        std::fs::create_dir_all(&cell_dir).map_err(|source| CommandError::Io {
            path: cell_dir.display().to_string(),
            source,
        })?;
        let m = ExperimentManifest::new(config, seed, hashes[ci].clone(), timestamp);
        write_manifest(&cell_dir, &m)?;
        manifests.push(m);
        if let CellValue::Failed(msg) = &row.max_z_error {
            out.say(format!("{} on swap_{}: {msg}", row.controller, row.task));
            out.outcome.diverged = true;
        }
    }
    aggregate_manifests(&manifests)?;
    out.write("table.csv", table_csv(&rows))?;
    out.write("metrics.csv", metrics_csv(&rows))?;
    out.manifest(&ExperimentManifest::new(config, seed, String::new(), timestamp))?;
    Ok(out.outcome)
}

/// Neighbor arrangement of a heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatmapScene {
    /// One hovering neighbor.
    Hover,
    /// One neighbor climbing at 0.8 m/s.
    Moving,
    /// Two hovering neighbors side by side.
    Pair,
}

/// Placements and window of a standard scene. Neighbors sit at 1.5 m; the
/// window covers the region below them.
pub fn default_heatmap_scene(scene: HeatmapScene) -> (Vec<Placement>, HeatmapWindow) {
    let at = |y: f64, vz: f64| Placement {
        p: Vector3::new(0.0, y, 1.5),
        v: Vector3::new(0.0, 0.0, vz),
    };
    let placements = match scene {
        HeatmapScene::Hover => vec![at(0.0, 0.0)],
        HeatmapScene::Moving => vec![at(0.0, 0.8)],
        HeatmapScene::Pair => vec![at(-0.15, 0.0), at(0.15, 0.0)],
    };
    let window = HeatmapWindow {
        x: 0.0,
        y: (-0.5, 0.5),
        z: (0.8, 1.7),
        ny: 41,
        nz: 37,
    };
    (placements, window)
}

/// Model and oracle over a y-z grid: `heatmap.csv`.
pub fn cmd_heatmap(
    config: &Config,
    model: Option<&DeepSetsModel>,
    scene: HeatmapScene,
    out_dir: &Path,
    timestamp: u64,
) -> Result<CommandOutcome, CommandError> {
    let mut out = Output::new(out_dir)?;
    let predictor: &dyn InteractionPredictor = match model {
        Some(m) => m,
        None => &ZeroPredictor,
    };
    let (placements, window) = default_heatmap_scene(scene);
    let grid = heatmap_grid(predictor, &config.oracle, &placements, &window)?;
    out.write("heatmap.csv", grid.to_csv())?;
    out.manifest(&ExperimentManifest::new(config, 0, optional_hash(model), timestamp))?;
    Ok(out.outcome)
}

/// Swap flight with a model, comparing predicted and true force:
/// `trace.csv`, `trace_stats.csv`.
pub fn cmd_trace(
    config: &Config,
    seed: u64,
    model: Option<&DeepSetsModel>,
    n_vehicles: usize,
    out_dir: &Path,
    timestamp: u64,
) -> Result<CommandOutcome, CommandError> {
    let mut out = Output::new(out_dir)?;
    let setup = config.flight_setup()?;
    let predictor: &dyn InteractionPredictor = match model {
        Some(m) => m,
        None => &ZeroPredictor,
    };
    let scenario = ScenarioConfig::swap(n_vehicles, config.harness.swaps, seed, &config.scenario);
    let result = fly(&setup, &scenario, predictor)?;
    let stats = trace_compare(&result.log);
    out.write("trace.csv", trace_csv(&result.log))?;
    out.write("trace_stats.csv", trace_stats_csv(&stats))?;
    out.manifest(&ExperimentManifest::new(config, seed, optional_hash(model), timestamp))?;
    for s in &stats {
        out.say(format!(
            "vehicle {}: rmse {:.5} N, true rms {:.5} N",
            s.vehicle, s.rmse, s.true_rms
        ));
    }
    if let Some(msg) = &result.diverged {
        out.say(msg.clone());
        out.outcome.diverged = true;
    }
    Ok(out.outcome)
}
