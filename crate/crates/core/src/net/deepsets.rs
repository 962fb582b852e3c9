use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::sim::{canonical_order, RelativeState};

use super::mlp::{Mlp, MlpCache, MlpGrads};
use super::spectral::spectral_normalize;
use super::NetError;

/// Per-neighbor encoder widths.
pub const PHI_DIMS: [usize; 5] = [6, 25, 40, 40, 40];
/// Aggregate decoder widths.
pub const RHO_DIMS: [usize; 5] = [40, 40, 40, 40, 1];
/// Default Lipschitz budget of each of the two networks.
pub const DEFAULT_GAMMA: f64 = 8.0;

/// Where a model came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelMeta {
    pub seed: u64,
    /// Hash of the training data (empty for untrained models).
    pub provenance: String,
}

/// Permutation-invariant interaction model `ρ(Σ φ(x_j))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepSetsModel {
    pub phi: Mlp,
    pub rho: Mlp,
    pub gamma_phi: f64,
    pub gamma_rho: f64,
    pub meta: ModelMeta,
}

/// Counts network evaluations performed by a forward pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PassCounter {
    pub phi: usize,
    pub rho: usize,
}

/// Gradients of a [`DeepSetsModel`] output with respect to its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub phi: MlpGrads,
    pub rho: MlpGrads,
}

impl Gradients {
    pub fn zeros_like(model: &DeepSetsModel) -> Self {
        Self {
            phi: MlpGrads::zeros_like(&model.phi),
            rho: MlpGrads::zeros_like(&model.rho),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.phi.is_zero() && self.rho.is_zero()
    }

    pub fn scale(&mut self, factor: f64) {
        self.phi.scale(factor);
        self.rho.scale(factor);
    }

    pub fn add(&mut self, other: &Gradients) {
        self.phi.add(&other.phi);
        self.rho.add(&other.rho);
    }
}

/// Reusable buffers for forward/backward passes.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    phi_caches: Vec<MlpCache>,
    rho_cache: MlpCache,
    sum: Vec<f64>,
}

impl DeepSetsModel {
    pub fn new(phi: Mlp, rho: Mlp, gamma_phi: f64, gamma_rho: f64) -> Result<Self, NetError> {
        if phi.input_dim() != 6 {
            return Err(NetError::Shape(format!("phi must take 6 inputs, takes {}", phi.input_dim())));
        }
        if phi.output_dim() != rho.input_dim() {
            return Err(NetError::Shape(format!(
                "phi emits {} features but rho expects {}",
                phi.output_dim(),
                rho.input_dim()
            )));
        }
        if rho.output_dim() != 1 {
            return Err(NetError::Shape(format!("rho must emit a scalar, emits {}", rho.output_dim())));
        }
        for g in [gamma_phi, gamma_rho] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(NetError::InvalidBudget(g));
            }
        }
        Ok(Self {
            phi,
            rho,
            gamma_phi,
            gamma_rho,
            meta: ModelMeta::default(),
        })
    }

    /// Freshly initialized model with the standard widths, spectrally
    /// normalized to its budgets.
    pub fn initialize(seed: u64, gamma_phi: f64, gamma_rho: f64) -> Result<Self, NetError> {
        Self::with_dims(&PHI_DIMS, &RHO_DIMS, seed, gamma_phi, gamma_rho)
    }

    pub fn with_dims(
        phi_dims: &[usize],
        rho_dims: &[usize],
        seed: u64,
        gamma_phi: f64,
        gamma_rho: f64,
    ) -> Result<Self, NetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = Mlp::new(phi_dims, &mut rng)?;
        let rho = Mlp::new(rho_dims, &mut rng)?;
        let mut model = Self::new(phi, rho, gamma_phi, gamma_rho)?;
        model.phi = spectral_normalize(&model.phi, gamma_phi)?;
        model.rho = spectral_normalize(&model.rho, gamma_rho)?;
        model.meta.seed = seed;
        Ok(model)
    }

    /// Lipschitz bound of the single-neighbor map.
    pub fn gamma_product(&self) -> f64 {
        self.gamma_phi * self.gamma_rho
    }

    pub fn forward(&self, neighbors: &[RelativeState]) -> f64 {
        self.forward_counted(neighbors, &mut PassCounter::default())
    }

    pub fn forward_counted(&self, neighbors: &[RelativeState], counter: &mut PassCounter) -> f64 {
        let mut ws = Workspace::default();
        self.forward_ws(neighbors, &mut ws, counter)
    }

    fn forward_ws(&self, neighbors: &[RelativeState], ws: &mut Workspace, counter: &mut PassCounter) -> f64 {
        let sorted = canonical_order(neighbors);
        let width = self.rho.input_dim();
        ws.sum.clear();
        ws.sum.resize(width, 0.0);
        if ws.phi_caches.len() < sorted.len() {
            ws.phi_caches.resize_with(sorted.len(), MlpCache::default);
        }
        for (rel, cache) in sorted.iter().zip(ws.phi_caches.iter_mut()) {
            self.phi
                .forward_cached(&rel.to_array(), cache)
                .expect("phi takes six inputs");
            counter.phi += 1;
            ws.sum.iter_mut().zip(cache.output()).for_each(|(s, h)| *s += h);
        }
        self.rho
            .forward_cached(&ws.sum, &mut ws.rho_cache)
            .expect("rho width checked at construction");
        counter.rho += 1;
        ws.rho_cache.output()[0]
    }

    /// Exact reverse-mode gradient of `upstream · f(neighbors)`.
    pub fn backward(&self, neighbors: &[RelativeState], upstream: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        let mut ws = Workspace::default();
        self.accumulate_gradient(neighbors, &mut ws, &mut grads, |_| upstream);
        grads
    }

    /// Forward pass followed by a backward pass whose upstream derivative
    /// is computed from the prediction. Gradients are added into `grads`;
    /// the prediction is returned.
    pub fn accumulate_gradient(
        &self,
        neighbors: &[RelativeState],
        ws: &mut Workspace,
        grads: &mut Gradients,
        upstream: impl FnOnce(f64) -> f64,
    ) -> f64 {
        let y = self.forward_ws(neighbors, ws, &mut PassCounter::default());
        let d = upstream(y);
        if d == 0.0 {
            return y;
        }
        let d_sum = self.rho.backward(&ws.rho_cache, &[d], &mut grads.rho);
        let k = neighbors.len();
        for cache in &ws.phi_caches[..k] {
            self.phi.backward(cache, &d_sum, &mut grads.phi);
        }
        y
    }

    /// Scale the final output layer (weights and bias) by `factor`.
    pub fn scale_output(&mut self, factor: f64) {
        if let Some(last) = self.rho.layers.last_mut() {
            last.weights.iter_mut().chain(last.bias.iter_mut()).for_each(|w| *w *= factor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn rel(a: [f64; 6]) -> RelativeState {
        RelativeState::from_slice(&a)
    }

    #[test]
    fn standard_widths() {
        let m = DeepSetsModel::initialize(1, 8.0, 8.0).unwrap();
        assert_eq!(m.phi.dims(), PHI_DIMS.to_vec());
        assert_eq!(m.rho.dims(), RHO_DIMS.to_vec());
        assert_eq!(m.gamma_product(), 64.0);
    }

    #[test]
    fn order_does_not_matter() {
        let m = DeepSetsModel::initialize(2, 8.0, 8.0).unwrap();
        let a = rel([0.1, -0.2, 0.3, 0.0, 0.4, -0.1]);
        let b = rel([-0.5, 0.2, 0.25, 0.3, 0.0, 0.2]);
        assert_eq!(m.forward(&[a, b]).to_bits(), m.forward(&[b, a]).to_bits());
    }

    #[test]
    fn empty_set_is_rho_of_zero() {
        let m = DeepSetsModel::initialize(3, 8.0, 8.0).unwrap();
        let expected = m.rho.forward(&[0.0; 40]).unwrap()[0];
        assert_eq!(m.forward(&[]), expected);
    }

    #[test]
    fn pass_count_is_linear_in_set_size() {
        let m = DeepSetsModel::initialize(4, 8.0, 8.0).unwrap();
        for k in 0..6 {
            let set: Vec<_> = (0..k)
                .map(|i| RelativeState::new(Vector3::new(i as f64, 0.0, 0.1), Vector3::zeros()))
                .collect();
            let mut counter = PassCounter::default();
            m.forward_counted(&set, &mut counter);
            assert_eq!(counter, PassCounter { phi: k, rho: 1 });
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let m = DeepSetsModel::initialize(5, 8.0, 8.0).unwrap();
        let g = m.backward(&[rel([0.1, 0.0, 0.3, 0.0, 0.0, 0.0])], 0.0);
        assert!(g.is_zero());
    }

    #[test]
    fn duplicated_neighbor_doubles_phi_gradient() {
        // Use a linear rho so the phi gradient does not depend on the sum.
        let mut m = DeepSetsModel::with_dims(&PHI_DIMS, &[40, 1], 6, 8.0, 8.0).unwrap();
        m.rho.layers[0].bias[0] = 0.3;
        let x = rel([0.05, -0.02, 0.3, 0.1, 0.0, -0.2]);
        let single = m.backward(&[x], 1.0);
        let double = m.backward(&[x, x], 1.0);
        let mut expected = single.phi.clone();
        expected.scale(2.0);
        assert_eq!(double.phi, expected);
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let phi = Mlp::new(&[6, 10], &mut rng).unwrap();
        let rho = Mlp::new(&[12, 1], &mut rng).unwrap();
        assert!(DeepSetsModel::new(phi.clone(), rho, 1.0, 1.0).is_err());
        let rho = Mlp::new(&[10, 1], &mut rng).unwrap();
        assert!(matches!(DeepSetsModel::new(phi, rho, 0.0, 1.0), Err(NetError::InvalidBudget(_))));
    }
}
