use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::NetError;

/// Fully connected layer, `y = W x + b`, with `W` stored row-major
/// (`outputs × inputs`).
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform fan-in initialization, `U(-√(6/fan_in), √(6/fan_in))`, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn w(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi)
        }));
    }
}

/// Feed-forward network with ReLU on every hidden layer and a linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for the backward pass.
/// `inputs[l]` is the input to layer `l`; the last entry is the output.
#[derive(Clone, Debug, Default)]
pub struct MlpCache {
    pub inputs: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Partial derivatives, shape-congruent with an [`Mlp`].
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|g| *g == 0.0))
    }
}

impl Mlp {
    /// Randomly initialized network with layer widths `dims`
    /// (`dims[0]` inputs, `dims.last()` outputs).
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self, NetError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(NetError::Shape(format!("invalid layer widths {dims:?}")));
        }
        Ok(Self {
            layers: dims.windows(2).map(|w| Dense::he_uniform(w[0], w[1], rng)).collect(),
        })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::Shape("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(NetError::Shape(format!("layer {i} storage does not match {}x{}", l.outputs, l.inputs)));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(NetError::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        let mut cache = MlpCache::default();
        self.forward_cached(x, &mut cache)?;
        Ok(cache.inputs.pop().unwrap_or_default())
    }

    /// Forward pass that records every layer input in `cache`.
    pub fn forward_cached(&self, x: &[f64], cache: &mut MlpCache) -> Result<(), NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::Shape(format!(
                "input has {} components, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let n = self.layers.len();
        cache.inputs.resize_with(n + 1, Vec::new);
        cache.inputs[0].clear();
        cache.inputs[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = cache.inputs.split_at_mut(l + 1);
            let out = &mut tail[0];
            layer.apply(&head[l], out);
            if l + 1 < n {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(())
    }

    /// Accumulate `∂(upstream · y)/∂θ` into `grads` and return the gradient
    /// with respect to the network input.
    pub fn backward(&self, cache: &MlpCache, upstream: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        let n = self.layers.len();
        let mut delta = upstream.to_vec();
        let mut next = Vec::new();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let input = &cache.inputs[l];
            let g = &mut grads.layers[l];
            for (r, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.bias[r] += d;
                let row = &mut g.weights[r * layer.inputs..(r + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(gw, a)| *gw += d * a);
            }
            next.clear();
            next.resize(layer.inputs, 0.0);
            for (r, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &layer.weights[r * layer.inputs..(r + 1) * layer.inputs];
                next.iter_mut().zip(row).for_each(|(acc, w)| *acc += d * w);
            }
            if l > 0 {
                // ReLU mask: the layer input is the rectified output of layer l-1.
                next.iter_mut().zip(input).for_each(|(acc, a)| {
                    if *a <= 0.0 {
                        *acc = 0.0;
                    }
                });
            }
            std::mem::swap(&mut delta, &mut next);
        }
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(n: usize) -> Dense {
        let mut d = Dense::zeros(n, n);
        for i in 0..n {
            d.weights[i * n + i] = 1.0;
        }
        d
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::from_layers(vec![Dense::zeros(3, 4), Dense::zeros(4, 2)]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_identity_layer_is_linear() {
        let net = Mlp::from_layers(vec![identity(2)]).unwrap();
        assert_eq!(net.forward(&[-1.0, 2.0]).unwrap(), vec![-1.0, 2.0]);
    }

    #[test]
    fn hidden_relu_clips_negatives() {
        let net = Mlp::from_layers(vec![identity(2), identity(2)]).unwrap();
        assert_eq!(net.forward(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = Mlp::from_layers(vec![identity(2)]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(NetError::Shape(_))));
        assert!(Mlp::from_layers(vec![identity(2), identity(3)]).is_err());
        assert!(Mlp::new(&[3], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Mlp::new(&[6, 25, 40], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = Mlp::new(&[6, 25, 40], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dims(), vec![6, 25, 40]);
        let limit = (6.0f64 / 6.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert_eq!(a.parameter_count(), 6 * 25 + 25 + 25 * 40 + 40);
    }
}
