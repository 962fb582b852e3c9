use std::sync::OnceLock;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_core::config::Config;
use swarm_core::controller::ZeroPredictor;
use swarm_core::harness::{fly, ScenarioConfig};
use swarm_core::net::{lipschitz_estimate, single_neighbor, DeepSetsModel};
use swarm_core::sim::{oracle_fa, OracleParams, RelativeState};
use swarm_core::trainer::{
    collect_curriculum, evaluate, run_curriculum, extract_label, samples_from_log, train, Dataset, OptimizerKind, Sample,
    TrainConfig, TrainOutcome,
};

fn noiseless_config() -> Config {
    let mut cfg = Config::default();
    cfg.sim.sensor_noise = 0.0;
    cfg.sim.process_noise = 0.0;
    cfg
}

fn stage_two() -> &'static (Dataset, TrainOutcome) {
    static CELL: OnceLock<(Dataset, TrainOutcome)> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut stages = run_curriculum(&noiseless_config(), 7, 2).unwrap();
        let stage = stages.pop().unwrap();
        assert!(stage.collection.diagnostics.is_empty());
        (stage.collection.dataset, stage.training)
    })
}

fn oracle_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let oracle = OracleParams::default();
    Dataset::new(
        (0..n)
            .map(|i| {
                let k = rng.random_range(0..3);
                let neighbors: Vec<_> = (0..k)
                    .map(|_| {
                        RelativeState::new(
                            Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.1..0.6)),
                            Vector3::new(0.0, 0.0, rng.random_range(-0.5..0.5)),
                        )
                    })
                    .collect();
                Sample {
                    y: oracle_fa(&neighbors, &oracle),
                    neighbors,
                    scenario: (i % 4) as u64,
                    vehicle: 0,
                    t: (i / 4) as f64 * 0.01,
                }
            })
            .collect(),
    )
}

#[test]
fn labels_close_on_noiseless_flights() {
    let cfg = noiseless_config();
    let setup = cfg.flight_setup().unwrap();
    let sc = ScenarioConfig::swap(3, 1, 2, &cfg.scenario);
    let result = fly(&setup, &sc, &ZeroPredictor).unwrap();
    let worst = result
        .log
        .iter()
        .map(|r| (extract_label(&r.step, &setup.params).unwrap() - r.f_true).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9, "worst label error {worst}");
}

#[test]
fn every_vehicle_contributes_every_logged_step() {
    let cfg = Config::default();
    let setup = cfg.flight_setup().unwrap();
    for n in 1..=3 {
        let sc = ScenarioConfig::random_walk(n, 10.0, 1, &cfg.scenario);
        let result = fly(&setup, &sc, &ZeroPredictor).unwrap();
        let (samples, skipped) = samples_from_log(&result.logged_steps(), &setup.params);
        assert_eq!(skipped, 0);
        assert_eq!(samples.len(), n * 1000);
    }
}

#[test]
fn one_minute_of_three_vehicles() {
    let cfg = Config::default();
    let run = collect_curriculum(3, Some(&DeepSetsModel::initialize(0, 8.0, 8.0).unwrap()), &cfg, 1).unwrap();
    // Random walk and swap, 6000 logged steps each, three vehicles.
    assert_eq!(run.dataset.len(), 2 * 3 * 6000);
    assert_eq!(run.dataset.samples.iter().filter(|s| s.scenario == 30).count(), 18_000);
}

#[test]
fn stage_two_needs_no_model_but_later_stages_do() {
    let cfg = Config::default();
    assert!(collect_curriculum(3, None, &cfg, 1).is_err());
    assert!(collect_curriculum(1, None, &cfg, 1).is_err());
    assert!(collect_curriculum(6, None, &cfg, 1).is_err());
}

#[test]
fn stage_two_data_sees_neighbors_pushed_apart() {
    let (ds, _) = stage_two();
    assert!(ds.samples.iter().all(|s| s.neighbors.len() == 1));
    let run = collect_curriculum(2, None, &noiseless_config(), 7).unwrap();
    let mean = run.alignment_separations.iter().sum::<f64>() / run.alignment_separations.len() as f64;
    assert!(mean > 0.25, "mean aligned separation {mean}");
}

#[test]
fn noiseless_stage_two_model_fits() {
    let (ds, out) = stage_two();
    let ys: Vec<f64> = out.val_indices.iter().map(|&i| ds.samples[i].y).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    let best = out.trace.iter().map(|e| e.val_mse).fold(f64::INFINITY, f64::min);
    assert!(best.sqrt() <= 0.1 * sd, "val rmse {} vs label sd {sd}", best.sqrt());
    assert!(!out.aborted);
}

#[test]
fn trained_model_reproduces_anchor() {
    let (_, out) = stage_two();
    let pred = out.model.forward(&[single_neighbor([0.0, 0.0, 0.3], [0.0; 3])]);
    let truth = -0.009 * 9.81;
    assert!(((pred - truth) / truth).abs() <= 0.15, "prediction {pred}");
}

#[test]
fn trained_model_keeps_lipschitz_budget() {
    let (_, out) = stage_two();
    let m = &out.model;
    assert!(lipschitz_estimate(m, 10_000, 1) <= m.gamma_product() * (1.0 + 1e-6));
    let target = 8f64.powf(0.25);
    for l in m.phi.layers.iter().chain(&m.rho.layers) {
        let sigma = DMatrix::from_row_slice(l.outputs, l.inputs, &l.weights).singular_values().max();
        assert!((sigma - target).abs() < 1e-6, "sigma {sigma}");
    }
}

#[test]
fn standardization_uses_training_split_only() {
    let (ds, out) = stage_two();
    let train_only = swarm_core::trainer::Standardizer::fit(out.train_indices.iter().map(|&i| &ds.samples[i]));
    assert_eq!(out.normalization, train_only);
    let all = swarm_core::trainer::Standardizer::fit(&ds.samples);
    assert_ne!(out.normalization, all);
}

#[test]
fn zero_labels_train_to_zero() {
    let mut ds = oracle_dataset(600, 1);
    ds.samples.iter_mut().for_each(|s| s.y = 0.0);
    let cfg = TrainConfig {
        epochs: 40,
        ..TrainConfig::default()
    };
    let out = train(&ds, &cfg, 1).unwrap();
    assert!(out.trace.iter().map(|e| e.val_mse).fold(f64::INFINITY, f64::min) <= 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let dp = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(0.0..0.6)];
        assert!(out.model.forward(&[single_neighbor(dp, [0.0; 3])]).abs() < 5e-3);
    }
}

#[test]
fn training_is_deterministic() {
    let ds = oracle_dataset(300, 2);
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let (a, b) = (train(&ds, &cfg, 9).unwrap(), train(&ds, &cfg, 9).unwrap());
    assert_eq!(a.model, b.model);
    assert_eq!(a.trace, b.trace);
    assert_ne!(train(&ds, &cfg, 10).unwrap().model, a.model);
}

#[test]
fn loss_falls_over_fifty_epochs() {
    let ds = oracle_dataset(500, 3);
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let out = train(&ds, &cfg, 4).unwrap();
    assert_eq!(out.trace.len(), 50);
    assert!(out.trace[49].train_mse < out.trace[0].train_mse);
}

fn max_param_diff(a: &DeepSetsModel, b: &DeepSetsModel) -> f64 {
    let flat = |m: &DeepSetsModel| -> Vec<f64> {
        m.phi.layers.iter().chain(&m.rho.layers).flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    };
    flat(a).iter().zip(flat(b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn duplicated_data_equals_repeated_epochs() {
    let ds = oracle_dataset(200, 5);
    let mut doubled = ds.clone();
    doubled.samples.extend(ds.samples.clone());
    // Visiting in order with one-sample batches makes the step sequences match.
    for optimizer in [OptimizerKind::Sgd, OptimizerKind::Adam] {
        let base = TrainConfig {
            batch_size: 1,
            shuffle: false,
            optimizer,
            learning_rate: 1e-3,
            ..TrainConfig::default()
        };
        let one = train(&doubled, &TrainConfig { epochs: 1, ..base.clone() }, 6).unwrap();
        let two = train(&ds, &TrainConfig { epochs: 2, ..base }, 6).unwrap();
        // Standardizer sums over the doubled set round differently.
        let diff = max_param_diff(&one.last, &two.last);
        assert!(diff < 1e-9, "{optimizer:?}: {diff}");
        assert_eq!(one.train_indices.len(), 2 * two.train_indices.len());
    }
}

#[test]
fn empty_dataset_and_bad_config_rejected() {
    assert!(train(&Dataset::default(), &TrainConfig::default(), 0).is_err());
    let bad = TrainConfig {
        validation_fraction: 0.7,
        ..TrainConfig::default()
    };
    assert!(train(&oracle_dataset(10, 0), &bad, 0).is_err());
}

#[test]
fn evaluation_of_exact_and_zero_models() {
    let model = DeepSetsModel::initialize(3, 8.0, 8.0).unwrap();
    let mut ds = oracle_dataset(300, 7);
    ds.samples.iter_mut().for_each(|s| s.y = model.forward(&s.neighbors));
    let rep = evaluate(&model, &ds).unwrap();
    assert_eq!((rep.rmse, rep.max_abs), (0.0, 0.0));
    assert_eq!(rep.by_size.len(), 6);
    assert_eq!(rep.by_size.iter().map(|r| r.count).sum::<usize>(), 300);

    let mut zero = model.clone();
    zero.scale_output(0.0);
    let ds = oracle_dataset(300, 8);
    let rms = (ds.samples.iter().map(|s| s.y * s.y).sum::<f64>() / 300.0).sqrt();
    let rep = evaluate(&zero, &ds).unwrap();
    assert!((rep.rmse - rms).abs() < 1e-15);
    assert!(evaluate(&zero, &Dataset::default()).is_err());
}

#[test]
fn dataset_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let ds = oracle_dataset(100, 9);
    ds.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap().samples, ds.samples);
    std::fs::write(&path, "scenario,vehicle\n1,2\n").unwrap();
    assert!(Dataset::load(&path).is_err());
}
