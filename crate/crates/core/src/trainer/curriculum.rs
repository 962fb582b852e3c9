use crate::config::Config;
use crate::controller::{InteractionPredictor, ZeroPredictor};
use crate::harness::{fly, ScenarioConfig};
use crate::net::DeepSetsModel;

use super::{samples_from_log, train, Dataset, TrainError, TrainOutcome};

pub const MIN_STAGE: usize = 2;
pub const MAX_STAGE: usize = 4;

/// Data gathered at one curriculum stage.
#[derive(Clone, Debug)]
pub struct CurriculumRun {
    pub stage: usize,
    pub dataset: Dataset,
    /// Vertical gaps of horizontally aligned pairs during the swap, m.
    pub alignment_separations: Vec<f64>,
    /// Messages from flights that ended early.
    pub diagnostics: Vec<String>,
}

impl CurriculumRun {
    pub fn separations_csv(&self) -> String {
        let mut out = String::from("separation\n");
        for s in &self.alignment_separations {
            out.push_str(&format!("{s}\n"));
        }
        out
    }
}

/// Fly a random walk and a swap with `stage` vehicles, compensating with
/// `model` when one is given, and turn both logs into samples. A flight
/// that diverges contributes its partial log and a diagnostic.
pub fn collect_curriculum(
    stage: usize,
    model: Option<&DeepSetsModel>,
    config: &Config,
    seed: u64,
) -> Result<CurriculumRun, TrainError> {
    if !(MIN_STAGE..=crate::harness::MAX_VEHICLES).contains(&stage) {
        return Err(TrainError::Curriculum(format!(
            "stage {stage} outside {MIN_STAGE}..={}",
            crate::harness::MAX_VEHICLES
        )));
    }
    if stage > MIN_STAGE && model.is_none() {
        return Err(TrainError::Curriculum(format!(
            "stage {stage} needs a model trained on stage {} data",
            stage - 1
        )));
    }
    let setup = config
        .flight_setup()
        .map_err(|e| TrainError::Curriculum(e.to_string()))?;
    let predictor: &dyn InteractionPredictor = match model {
        Some(m) => m,
        None => &ZeroPredictor,
    };
    let duration = config.curriculum.duration;
    let base = seed.wrapping_add(100 * stage as u64);
    let mut walk = ScenarioConfig::random_walk(stage, duration, base, &config.scenario);
    walk.scenario_id = 10 * stage as u64;
    let mut swap = ScenarioConfig::swap(stage, 1, base.wrapping_add(1), &config.scenario);
    swap.duration = duration;
    swap.scenario_id = 10 * stage as u64 + 1;

    let mut dataset = Dataset::default();
    let mut diagnostics = Vec::new();
    let mut separations = Vec::new();
    for scenario in [&walk, &swap] {
        let result = fly(&setup, scenario, predictor)?;
        if let Some(msg) = &result.diverged {
            diagnostics.push(format!("scenario {}: {msg}", scenario.scenario_id));
        }
        if scenario.scenario_id == swap.scenario_id {
            separations = result.alignment_separations(config.harness.align_radius);
        }
        let (samples, skipped) = samples_from_log(&result.logged_steps(), &setup.params);
        dataset.extend(Dataset {
            samples,
            normalization: None,
            skipped,
        });
    }
    Ok(CurriculumRun {
        stage,
        dataset,
        alignment_separations: separations,
        diagnostics,
    })
}

/// One completed curriculum stage: the data it collected and the model
/// trained on everything collected so far.
#[derive(Clone, Debug)]
pub struct CurriculumStage {
    pub collection: CurriculumRun,
    pub training: TrainOutcome,
}

/// Collect and train stages 2..=`last_stage`. Each stage flies with the
/// previous stage's model, and each model is trained on the union of all
/// data collected up to and including its stage.
pub fn run_curriculum(config: &Config, seed: u64, last_stage: usize) -> Result<Vec<CurriculumStage>, TrainError> {
    let mut stages: Vec<CurriculumStage> = Vec::new();
    let mut pooled = Dataset::default();
    for stage in MIN_STAGE..=last_stage {
        let model = stages.last().map(|s| &s.training.model);
        let collection = collect_curriculum(stage, model, config, seed)?;
        pooled.extend(collection.dataset.clone());
        let training = train(&pooled, &config.train, seed.wrapping_add(stage as u64))?;
        stages.push(CurriculumStage { collection, training });
    }
    Ok(stages)
}
