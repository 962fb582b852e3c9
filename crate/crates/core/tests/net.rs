use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_core::net::{
    lipschitz_estimate, load_model, model_from_str, model_to_string, save_model, spectral_normalize, DeepSetsModel,
    Dense, Mlp,
};
use swarm_core::sim::RelativeState;

fn random_set(rng: &mut ChaCha8Rng, k: usize) -> Vec<RelativeState> {
    (0..k)
        .map(|_| {
            let mut a = [0.0; 6];
            a.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            RelativeState::from_slice(&a)
        })
        .collect()
}

/// Model with random biases so that ReLU patterns are generic.
fn jittered_model(seed: u64) -> DeepSetsModel {
    let mut m = DeepSetsModel::initialize(seed, 8.0, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB1A5);
    for l in m.phi.layers.iter_mut().chain(m.rho.layers.iter_mut()) {
        l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
    }
    m
}

fn exact_sigma(layer: &Dense) -> f64 {
    DMatrix::from_row_slice(layer.outputs, layer.inputs, &layer.weights)
        .singular_values()
        .max()
}

/// (network, layer, is_bias, index)
type ParamRef = (usize, usize, bool, usize);

fn param(m: &mut DeepSetsModel, r: ParamRef) -> &mut f64 {
    let net = if r.0 == 0 { &mut m.phi } else { &mut m.rho };
    let layer = &mut net.layers[r.1];
    if r.2 {
        &mut layer.bias[r.3]
    } else {
        &mut layer.weights[r.3]
    }
}

#[test]
fn backward_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model = jittered_model(5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let set = random_set(&mut rng, trial % 6);
        let grads = model.backward(&set, 1.0);
        for _ in 0..20 {
            let net = rng.random_range(0..2);
            let layers = if net == 0 { &model.phi.layers } else { &model.rho.layers };
            let l = rng.random_range(0..layers.len());
            let is_bias = rng.random_bool(0.3);
            let len = if is_bias { layers[l].bias.len() } else { layers[l].weights.len() };
            let r = (net, l, is_bias, rng.random_range(0..len));
            let mut plus = model.clone();
            *param(&mut plus, r) += h;
            let mut minus = model.clone();
            *param(&mut minus, r) -= h;
            let fd = (plus.forward(&set) - minus.forward(&set)) / (2.0 * h);
            let g = if net == 0 { &grads.phi } else { &grads.rho };
            let an = if is_bias { g.layers[l].bias[r.3] } else { g.layers[l].weights[r.3] };
            let scale = fd.abs().max(an.abs());
            if scale > 1e-7 {
                worst = worst.max((fd - an).abs() / scale);
            } else {
                assert!((fd - an).abs() < 1e-9);
            }
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn initialized_layers_sit_at_their_budget() {
    let m = DeepSetsModel::initialize(8, 8.0, 8.0).unwrap();
    let target = 8f64.powf(0.25);
    for layer in m.phi.layers.iter().chain(&m.rho.layers) {
        assert!((exact_sigma(layer) - target).abs() < 1e-6);
    }
}

#[test]
fn normalization_leaves_biases() {
    let m = jittered_model(3);
    let n = spectral_normalize(&m.phi, 2.0).unwrap();
    for (a, b) in m.phi.layers.iter().zip(&n.layers) {
        assert_eq!(a.bias, b.bias);
    }
}

#[test]
fn normalized_random_layers_match_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for dims in [vec![40, 40], vec![6, 25, 40], vec![40, 40, 40, 40, 1]] {
        let net = Mlp::new(&dims, &mut rng).unwrap();
        let gamma = 5.0;
        let out = spectral_normalize(&net, gamma).unwrap();
        let target = gamma.powf(1.0 / (dims.len() - 1) as f64);
        for layer in &out.layers {
            assert!((exact_sigma(layer) - target).abs() < 1e-6);
        }
    }
}

#[test]
fn lipschitz_probe_respects_budget() {
    for seed in 0..3 {
        let m = jittered_model(seed);
        assert!(lipschitz_estimate(&m, 2000, seed) <= 64.0 * (1.0 + 1e-6));
    }
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let mut m = jittered_model(4);
    m.meta.provenance = "abc123".into();
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(model_to_string(&back), model_to_string(&m));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let set = random_set(&mut rng, 3);
    assert_eq!(back.forward(&set).to_bits(), m.forward(&set).to_bits());
}

#[test]
fn corrupted_model_rejected() {
    let text = model_to_string(&jittered_model(4));
    assert!(model_from_str(&text.replacen("swarm-deepsets-model v1", "other v9", 1)).is_err());
    let broken: String = text.lines().map(|l| l.replacen(",W,", ",W,x", 1) + "\n").collect();
    assert!(model_from_str(&broken).is_err());
}

#[test]
fn far_away_duplicates_still_sum() {
    // φ contributions add: k copies of one neighbor differ from one copy.
    let m = jittered_model(6);
    let nb = RelativeState::new(Vector3::new(0.1, 0.0, 0.3), Vector3::zeros());
    assert_ne!(m.forward(&[nb]), m.forward(&[nb, nb]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn forward_is_permutation_invariant(seed in any::<u64>(), k in 0usize..6, perm in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = jittered_model(seed % 16);
        let set = random_set(&mut rng, k);
        let mut shuffled = set.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(perm));
        prop_assert_eq!(m.forward(&set).to_bits(), m.forward(&shuffled).to_bits());
    }

    #[test]
    fn zero_upstream_is_zero_gradient(seed in 0u64..32, k in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = jittered_model(seed);
        prop_assert!(m.backward(&random_set(&mut rng, k), 0.0).is_zero());
    }
}
