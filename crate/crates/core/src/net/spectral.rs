use super::mlp::{Dense, Mlp};
use super::NetError;

/// Iteration cap for the power method.
pub const POWER_MAX_ITERS: usize = 1000;
/// Relative change in the singular-value estimate that ends the iteration.
pub const POWER_TOL: f64 = 1e-10;

fn deterministic_start(n: usize) -> Vec<f64> {
    // Fixed, non-degenerate start so repeated calls agree bit-for-bit.
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 1.618_033_988_75).sin()).collect();
    normalized(v)
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Largest singular value of `W · diag(col_scale)` by power iteration.
///
/// `start` seeds the right singular vector and receives the converged one,
/// so repeated calls on slowly changing weights converge in a few steps.
pub fn power_iteration(layer: &Dense, col_scale: Option<&[f64]>, start: &mut Vec<f64>) -> f64 {
    let (rows, cols) = (layer.outputs, layer.inputs);
    if start.len() != cols || start.iter().all(|x| *x == 0.0) {
        *start = deterministic_start(cols);
    }
    let scale = |c: usize| col_scale.map_or(1.0, |s| s[c]);
    let mut v = normalized(std::mem::take(start));
    let mut u = vec![0.0; rows];
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        for (r, ur) in u.iter_mut().enumerate() {
            let row = &layer.weights[r * cols..(r + 1) * cols];
            *ur = row.iter().enumerate().map(|(c, w)| w * scale(c) * v[c]).sum();
        }
        let next_sigma = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if next_sigma == 0.0 {
            *start = v;
            return 0.0;
        }
        let mut w = vec![0.0; cols];
        for (r, ur) in u.iter().enumerate() {
            let row = &layer.weights[r * cols..(r + 1) * cols];
            for (c, wrc) in row.iter().enumerate() {
                w[c] += wrc * scale(c) * ur;
            }
        }
        v = normalized(w);
        let done = (next_sigma - sigma).abs() <= POWER_TOL * next_sigma;
        sigma = next_sigma;
        if done {
            break;
        }
    }
    *start = v;
    sigma
}

/// Rescale every weight matrix to spectral norm `gamma^(1/layers)`; biases
/// are left alone. A zero matrix is left unchanged.
pub fn spectral_normalize(net: &Mlp, gamma: f64) -> Result<Mlp, NetError> {
    let mut out = net.clone();
    let mut state = SpectralState::default();
    state.normalize(&mut out, gamma, None)?;
    Ok(out)
}

/// Warm-start vectors for repeated normalization of the same network.
#[derive(Clone, Debug, Default)]
pub struct SpectralState {
    vectors: Vec<Vec<f64>>,
}

impl SpectralState {
    /// In-place normalization. `input_scale`, when given, is a per-input
    /// factor applied before the first layer, and the first layer is
    /// normalized as the composite `W · diag(input_scale)`.
    pub fn normalize(&mut self, net: &mut Mlp, gamma: f64, input_scale: Option<&[f64]>) -> Result<(), NetError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(NetError::InvalidBudget(gamma));
        }
        if let Some(s) = input_scale {
            if s.len() != net.input_dim() {
                return Err(NetError::Shape(format!(
                    "input scale has {} entries for {} inputs",
                    s.len(),
                    net.input_dim()
                )));
            }
        }
        let target = gamma.powf(1.0 / net.layers.len() as f64);
        self.vectors.resize_with(net.layers.len(), Vec::new);
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let scale = if i == 0 { input_scale } else { None };
            let sigma = power_iteration(layer, scale, &mut self.vectors[i]);
            if sigma > 0.0 {
                let factor = target / sigma;
                layer.weights.iter_mut().for_each(|w| *w *= factor);
            }
        }
        Ok(())
    }
}
