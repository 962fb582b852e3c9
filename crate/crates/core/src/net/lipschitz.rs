use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::sim::RelativeState;

use super::deepsets::DeepSetsModel;

fn random_unit<R: Rng>(rng: &mut R) -> [f64; 6] {
    loop {
        let v: [f64; 6] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.map(|x| x / n);
        }
    }
}

/// Largest observed `|f(x) − f(x')| / ‖x − x'‖` over `trials` random
/// single-neighbor pairs. Base points are uniform in `[-1, 1]⁶`; offsets
/// have random direction and a log-uniform length in `[1e-4, 1]`.
pub fn lipschitz_estimate(model: &DeepSetsModel, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let len = 10f64.powf(rng.random_range(-4.0..=0.0));
        let dir = random_unit(&mut rng);
        let x2: [f64; 6] = std::array::from_fn(|i| x[i] + len * dir[i]);
        let dist = x
            .iter()
            .zip(&x2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let fa = model.forward(&[RelativeState::from_slice(&x)]);
        let fb = model.forward(&[RelativeState::from_slice(&x2)]);
        best = best.max((fa - fb).abs() / dist);
    }
    best
}

/// Convenience for probes at a fixed neighbor offset.
pub fn single_neighbor(dp: [f64; 3], dv: [f64; 3]) -> RelativeState {
    RelativeState::new(Vector3::from(dp), Vector3::from(dv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_budget_model_is_one_lipschitz() {
        for seed in 0..3 {
            let m = DeepSetsModel::initialize(seed, 1.0, 1.0).unwrap();
            assert!(lipschitz_estimate(&m, 2000, seed) <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn output_scaling_scales_estimate() {
        let m = DeepSetsModel::initialize(9, 8.0, 8.0).unwrap();
        let mut scaled = m.clone();
        scaled.scale_output(3.0);
        let (a, b) = (lipschitz_estimate(&m, 500, 1), lipschitz_estimate(&scaled, 500, 1));
        assert!((b / a - 3.0).abs() < 1e-9, "{a} {b}");
    }
}
