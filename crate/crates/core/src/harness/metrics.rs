use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::controller::InteractionPredictor;
use crate::sim::{oracle_fa, OracleParams, RelativeState};

use super::runner::{fly, FlightResult, FlightSetup, LogRow};
use super::scenario::{ScenarioConfig, ScenarioParams};
use super::HarnessError;

/// A controller column of the comparison table.
pub struct TableController<'a> {
    pub label: String,
    /// Largest swarm in the model's training data; `None` for the baseline.
    pub trained_on: Option<usize>,
    pub predictor: &'a dyn InteractionPredictor,
}

/// Content of one table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum CellValue {
    Value(f64),
    /// Task too far outside the model's training data to be flown.
    NotAvailable,
    /// At least one repetition diverged.
    Failed(String),
}

impl CellValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            CellValue::Value(v) => Some(*v),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            CellValue::Value(v) => v.to_string(),
            CellValue::NotAvailable => "N.A.".into(),
            CellValue::Failed(_) => "FAILED".into(),
        }
    }
}

/// Worst-case errors of one controller on one swap task.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub controller: String,
    /// Number of vehicles in the swap.
    pub task: usize,
    /// Maximum |z error| over all vehicles and repetitions, m.
    pub max_z_error: CellValue,
    pub max_x_error: CellValue,
    pub max_y_error: CellValue,
}

/// Cells farther than this many vehicles beyond the training data are not flown.
pub const MAX_EXTRAPOLATION: usize = 2;

/// Seed of repetition `rep` of a task; shared by all controllers so that
/// every column sees the same noise.
pub fn repetition_seed(seed: u64, task: usize, rep: usize) -> u64 {
    seed.wrapping_add(1000 * task as u64 + rep as u64)
}

/// Fly every (controller, task) cell `repetitions` times and report the
/// worst errors. Each cell's flights are independent and deterministic.
pub fn run_table(
    setup: &FlightSetup,
    params: &ScenarioParams,
    swaps: usize,
    repetitions: usize,
    controllers: &[TableController],
    tasks: &[usize],
    seed: u64,
) -> Result<Vec<MetricRow>, HarnessError> {
    let mut rows = Vec::new();
    for c in controllers {
        for &task in tasks {
            let unavailable = c.trained_on.is_some_and(|k| task > k + MAX_EXTRAPOLATION);
            if unavailable {
                rows.push(MetricRow {
                    controller: c.label.clone(),
                    task,
                    max_z_error: CellValue::NotAvailable,
                    max_x_error: CellValue::NotAvailable,
                    max_y_error: CellValue::NotAvailable,
                });
                continue;
            }
            let mut worst = Vector3::<f64>::zeros();
            let mut failure = None;
            for rep in 0..repetitions {
                let scenario = ScenarioConfig::swap(task, swaps, repetition_seed(seed, task, rep), params);
                let result = fly(setup, &scenario, c.predictor)?;
                if let Some(msg) = result.diverged {
                    failure = Some(format!("repetition {rep}: {msg}"));
                    break;
                }
                for axis in 0..3 {
                    worst[axis] = worst[axis].max(result.max_error(axis));
                }
            }
            let cell = |v: f64| match &failure {
                Some(msg) => CellValue::Failed(msg.clone()),
                None => CellValue::Value(v),
            };
            rows.push(MetricRow {
                controller: c.label.clone(),
                task,
                max_z_error: cell(worst.z),
                max_x_error: cell(worst.x),
                max_y_error: cell(worst.y),
            });
        }
    }
    Ok(rows)
}

/// Controllers as rows, tasks as columns, max z error in each cell.
pub fn table_csv(rows: &[MetricRow]) -> String {
    let mut tasks: Vec<usize> = rows.iter().map(|r| r.task).collect();
    tasks.sort_unstable();
    tasks.dedup();
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.controller.as_str()) {
            labels.push(&r.controller);
        }
    }
    let mut out = String::from("controller");
    for t in &tasks {
        let _ = write!(out, ",swap_{t}");
    }
    out.push('\n');
    for label in labels {
        out.push_str(label);
        for t in &tasks {
            let cell = rows
                .iter()
                .find(|r| r.controller == label && r.task == *t)
                .map_or(String::new(), |r| r.max_z_error.render());
            let _ = write!(out, ",{cell}");
        }
        out.push('\n');
    }
    out
}

/// One row per cell with all three axes.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("controller,task,max_z_error,max_x_error,max_y_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.controller,
            r.task,
            r.max_z_error.render(),
            r.max_x_error.render(),
            r.max_y_error.render()
        );
    }
    out
}

/// A fixed neighbor in a heatmap scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
}

/// Axis-aligned y-z window at a fixed x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatmapWindow {
    pub x: f64,
    pub y: (f64, f64),
    pub z: (f64, f64),
    pub ny: usize,
    pub nz: usize,
}

/// Predicted and true vertical force on a stationary probe vehicle at
/// every grid point. Values are stored z-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapGrid {
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    pub model: Vec<f64>,
    pub oracle: Vec<f64>,
}

impl HeatmapGrid {
    pub fn max_abs_difference(&self, other: &HeatmapGrid) -> f64 {
        self.model
            .iter()
            .zip(&other.model)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,z,model,oracle,difference\n");
        for (iz, z) in self.zs.iter().enumerate() {
            for (iy, y) in self.ys.iter().enumerate() {
                let k = iz * self.ys.len() + iy;
                let _ = writeln!(out, "{y},{z},{},{},{}", self.model[k], self.oracle[k], self.model[k] - self.oracle[k]);
            }
        }
        out
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn heatmap_grid(
    predictor: &dyn InteractionPredictor,
    oracle: &OracleParams,
    placements: &[Placement],
    window: &HeatmapWindow,
) -> Result<HeatmapGrid, HarnessError> {
    let finite = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
    let w = window;
    if w.ny == 0 || w.nz == 0 || ![w.x, w.y.0, w.y.1, w.z.0, w.z.1].iter().all(|x| x.is_finite()) {
        return Err(HarnessError::InvalidScenario("heatmap window must be finite and non-empty".into()));
    }
    if !placements.iter().all(|pl| finite(&pl.p) && finite(&pl.v)) {
        return Err(HarnessError::InvalidScenario("heatmap placements must be finite".into()));
    }
    let ys = linspace(w.y, w.ny);
    let zs = linspace(w.z, w.nz);
    let mut model = Vec::with_capacity(ys.len() * zs.len());
    let mut truth = Vec::with_capacity(ys.len() * zs.len());
    let mut rel = Vec::with_capacity(placements.len());
    for z in &zs {
        for y in &ys {
            let probe = Vector3::new(w.x, *y, *z);
            rel.clear();
            rel.extend(placements.iter().map(|pl| RelativeState::new(pl.p - probe, pl.v)));
            model.push(predictor.predict(&rel));
            truth.push(oracle_fa(&rel, oracle));
        }
    }
    Ok(HeatmapGrid {
        ys,
        zs,
        model,
        oracle: truth,
    })
}

/// Prediction quality along one vehicle's trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStats {
    pub vehicle: usize,
    pub samples: usize,
    /// RMS of `f̂ − f`, N.
    pub rmse: f64,
    /// Largest |f̂ − f|, N.
    pub max_deviation: f64,
    /// RMS of the true force, N.
    pub true_rms: f64,
}

pub fn trace_compare(log: &[LogRow]) -> Vec<TraceStats> {
    let n = log.iter().map(|r| r.step.vehicle + 1).max().unwrap_or(0);
    let mut acc = vec![(0usize, 0.0, 0.0f64, 0.0); n];
    for r in log {
        let e = r.f_hat - r.f_true;
        let a = &mut acc[r.step.vehicle];
        a.0 += 1;
        a.1 += e * e;
        a.2 = a.2.max(e.abs());
        a.3 += r.f_true * r.f_true;
    }
    acc.into_iter()
        .enumerate()
        .map(|(vehicle, (k, sq, max, tsq))| {
            let k_f = (k.max(1)) as f64;
            TraceStats {
                vehicle,
                samples: k,
                rmse: (sq / k_f).sqrt(),
                max_deviation: max,
                true_rms: (tsq / k_f).sqrt(),
            }
        })
        .collect()
}

pub fn trace_csv(log: &[LogRow]) -> String {
    let mut out = String::from("t,vehicle,fa_true,fa_pred,difference\n");
    for r in log {
        let _ = writeln!(out, "{},{},{},{},{}", r.step.t, r.step.vehicle, r.f_true, r.f_hat, r.f_hat - r.f_true);
    }
    out
}

pub fn trace_stats_csv(stats: &[TraceStats]) -> String {
    let mut out = String::from("vehicle,samples,rmse,max_deviation,true_rms\n");
    for s in stats {
        let _ = writeln!(out, "{},{},{},{},{}", s.vehicle, s.samples, s.rmse, s.max_deviation, s.true_rms);
    }
    out
}

/// Summary of one flight: per-vehicle worst errors.
pub fn flight_summary_csv(result: &FlightResult) -> String {
    let mut out = String::from("vehicle,max_x_error,max_y_error,max_z_error\n");
    for (i, v) in result.vehicles.iter().enumerate() {
        let e = v.max_abs_err;
        let _ = writeln!(out, "{i},{},{},{}", e.x, e.y, e.z);
    }
    out
}
