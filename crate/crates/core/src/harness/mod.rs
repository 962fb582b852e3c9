//! Scenario generation, closed-loop flights and evaluation metrics.

mod commands;
mod metrics;
mod runner;
mod scenario;

pub use commands::{
    cmd_collect, cmd_fly, cmd_heatmap, cmd_table, cmd_trace, cmd_train, default_heatmap_scene, model_hash,
    CommandError, CommandOutcome, FlyOptions, HeatmapScene, TableModels,
};
pub use metrics::{
    flight_summary_csv, heatmap_grid, metrics_csv, repetition_seed, run_table, table_csv, trace_compare, trace_csv,
    trace_stats_csv, CellValue, HeatmapGrid, HeatmapWindow, MetricRow, Placement, TableController, TraceStats,
    MAX_EXTRAPOLATION,
};
pub use runner::{fly, write_trajectory_csv, FlightResult, FlightSetup, LogRow, VehicleSummary, DIVERGENCE_LIMIT, TRAJECTORY_HEADER};
pub use scenario::{
    make_swap_trajectories, min_jerk, RandomWalk, ScenarioConfig, ScenarioKind, ScenarioParams, SwapTrajectory,
    MAX_VEHICLES,
};

use thiserror::Error;

use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
