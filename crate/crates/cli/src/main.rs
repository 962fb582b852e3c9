use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use swarm_core::config::{load_config, Config};
use swarm_core::harness::{
    cmd_collect, cmd_fly, cmd_heatmap, cmd_table, cmd_trace, cmd_train, CommandOutcome, FlyOptions, HeatmapScene,
    ScenarioKind, TableModels,
};
use swarm_core::net::{load_model, DeepSetsModel};

/// Swarm downwash experiments: data collection, training, flights and
/// comparison tables.
#[derive(Parser, Debug)]
#[command(name = "swarmctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Collect one curriculum stage of training data.
    Collect {
        #[command(flatten)]
        common: Common,
        /// Number of vehicles, 2 to 4.
        #[arg(long)]
        stage: usize,
        /// Model used for compensation; required beyond stage 2.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train a model on a collected dataset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Fly a single scenario.
    Fly {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Kind::Swap)]
        kind: Kind,
        #[arg(long, default_value_t = 2)]
        vehicles: usize,
        /// Flight length in seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Feed the true interaction force forward.
        #[arg(long, conflicts_with = "model")]
        oracle: bool,
    },
    /// Baseline and trained controllers over swaps of 2 to 5 vehicles.
    Table {
        #[command(flatten)]
        common: Common,
        /// Trained models as `2=path`, `3=path`, `4=path`. When none are
        /// given the curriculum is run first.
        #[arg(long = "model", value_parser = parse_stage_model)]
        models: Vec<(usize, PathBuf)>,
    },
    /// Predicted and true force over a vertical plane.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Scene::Hover)]
        scene: Scene,
    },
    /// Predicted against true force along a swap flight.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        vehicles: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Swap,
    RandomWalk,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scene {
    Hover,
    Moving,
    Pair,
}

fn parse_stage_model(s: &str) -> Result<(usize, PathBuf), String> {
    let (k, path) = s.split_once('=').ok_or_else(|| format!("expected STAGE=PATH, got {s:?}"))?;
    let k: usize = k.parse().map_err(|_| format!("bad stage {k:?}"))?;
    if !(2..=4).contains(&k) {
        return Err(format!("stage must be 2, 3 or 4, got {k}"));
    }
    Ok((k, PathBuf::from(path)))
}

fn config(common: &Common) -> Result<Config> {
    match &common.config {
        Some(path) => Ok(load_config(path)?),
        None => Ok(Config::default()),
    }
}

fn model(path: Option<&Path>) -> Result<Option<DeepSetsModel>> {
    path.map(|p| load_model(p).with_context(|| format!("loading model {}", p.display())))
        .transpose()
}

fn table_models(list: &[(usize, PathBuf)]) -> Result<Option<TableModels>> {
    if list.is_empty() {
        return Ok(None);
    }
    let find = |k: usize| -> Result<DeepSetsModel> {
        let hits: Vec<_> = list.iter().filter(|(s, _)| *s == k).collect();
        match hits.as_slice() {
            [(_, path)] => Ok(model(Some(path))?.expect("path given")),
            [] => bail!("missing --model {k}=PATH"),
            _ => bail!("--model {k}=... given more than once"),
        }
    };
    Ok(Some(TableModels {
        trained_on_2: find(2)?,
        trained_on_3: find(3)?,
        trained_on_4: find(4)?,
    }))
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn run(cli: Cli) -> Result<CommandOutcome> {
    let ts = timestamp();
    let outcome = match cli.command {
        Command::Collect { common, stage, model: m } => {
            let cfg = config(&common)?;
            cmd_collect(&cfg, common.seed, stage, model(m.as_deref())?.as_ref(), &common.out, ts)?
        }
        Command::Train { common, data } => cmd_train(&config(&common)?, common.seed, &data, &common.out, ts)?,
        Command::Fly {
            common,
            model: m,
            kind,
            vehicles,
            duration,
            oracle,
        } => {
            let opts = FlyOptions {
                kind: match kind {
                    Kind::Swap => ScenarioKind::Swap,
                    Kind::RandomWalk => ScenarioKind::RandomWalk,
                },
                n_vehicles: vehicles,
                duration,
                oracle_feedforward: oracle,
            };
            let cfg = config(&common)?;
            cmd_fly(&cfg, common.seed, model(m.as_deref())?.as_ref(), &opts, &common.out, ts)?
        }
        Command::Table { common, models } => {
            cmd_table(&config(&common)?, common.seed, table_models(&models)?, &common.out, ts)?
        }
        Command::Heatmap { common, model: m, scene } => {
            let scene = match scene {
                Scene::Hover => HeatmapScene::Hover,
                Scene::Moving => HeatmapScene::Moving,
                Scene::Pair => HeatmapScene::Pair,
            };
            cmd_heatmap(&config(&common)?, model(m.as_deref())?.as_ref(), scene, &common.out, ts)?
        }
        Command::Trace {
            common,
            model: m,
            vehicles,
        } => {
            let cfg = config(&common)?;
            cmd_trace(&cfg, common.seed, model(m.as_deref())?.as_ref(), vehicles, &common.out, ts)?
        }
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for msg in &outcome.messages {
                println!("{msg}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.diverged {
                eprintln!("error: a flight diverged");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
