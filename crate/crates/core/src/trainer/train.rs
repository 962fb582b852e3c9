use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::net::{DeepSetsModel, Gradients, SpectralState, Workspace};
use crate::sim::RelativeState;

use super::{Dataset, OptimizerKind, Standardizer, TrainConfig, TrainError};

/// Losses after one pass over the training split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Result of a training run. Both models consume raw relative states.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters at the lowest validation loss.
    pub model: DeepSetsModel,
    /// Parameters after the last completed epoch.
    pub last: DeepSetsModel,
    pub best_epoch: usize,
    pub trace: Vec<EpochLoss>,
    pub normalization: Standardizer,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Set when a non-finite loss stopped training early.
    pub aborted: bool,
}

impl TrainOutcome {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for e in &self.trace {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_mse, e.val_mse));
        }
        out
    }
}

const ADAM_EPS: f64 = 1e-8;

struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: i32,
}

fn params_mut(model: &mut DeepSetsModel) -> impl Iterator<Item = &mut f64> {
    model
        .phi
        .layers
        .iter_mut()
        .chain(model.rho.layers.iter_mut())
        .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
}

fn grads_iter(g: &Gradients) -> impl Iterator<Item = &f64> {
    g.phi
        .layers
        .iter()
        .chain(g.rho.layers.iter())
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
}

impl Optimizer {
    fn new(config: &TrainConfig, n: usize) -> Self {
        Self {
            kind: config.optimizer,
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            m: vec![0.0; n],
            v: vec![0.0; n],
            steps: 0,
        }
    }

    fn step(&mut self, model: &mut DeepSetsModel, grads: &Gradients) {
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params_mut(model).zip(grads_iter(grads)) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                let c1 = 1.0 - self.beta1.powi(self.steps);
                let c2 = 1.0 - self.beta2.powi(self.steps);
                let (b1, b2, lr) = (self.beta1, self.beta2, self.lr);
                for (((p, g), m), v) in params_mut(model).zip(grads_iter(grads)).zip(&mut self.m).zip(&mut self.v) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Fold the input standardization into the first encoder layer so the
/// returned model consumes raw relative states.
pub fn fold_standardizer(model: &DeepSetsModel, st: &Standardizer) -> DeepSetsModel {
    let mut out = model.clone();
    let first = &mut out.phi.layers[0];
    for r in 0..first.outputs {
        let row = &mut first.weights[r * first.inputs..(r + 1) * first.inputs];
        let mut shift = 0.0;
        for (c, w) in row.iter_mut().enumerate() {
            *w /= st.scale[c];
            shift += *w * st.mean[c];
        }
        first.bias[r] -= shift;
    }
    out
}

fn mse(model: &DeepSetsModel, inputs: &[Vec<RelativeState>], ys: &[f64], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NAN;
    }
    let sum: f64 = idx.iter().map(|&i| (model.forward(&inputs[i]) - ys[i]).powi(2)).sum();
    sum / idx.len() as f64
}

/// Mini-batch regression of the deep-sets model on the dataset labels.
/// Both networks are spectrally normalized after every optimizer step;
/// the encoder is normalized together with the input standardization, so
/// the exported raw-unit model keeps the configured Lipschitz budget.
pub fn train(dataset: &Dataset, config: &TrainConfig, seed: u64) -> Result<TrainOutcome, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    if dataset.is_empty() {
        return Err(TrainError::Empty);
    }
    let (train_idx, val_idx) = dataset.split(config.validation_fraction, config.chunk_seconds, seed);
    let st = Standardizer::fit(train_idx.iter().map(|&i| &dataset.samples[i]));
    let inv_scale = st.inverse_scale();
    let inputs: Vec<Vec<RelativeState>> = dataset
        .samples
        .iter()
        .map(|s| s.neighbors.iter().map(|n| st.apply(n)).collect())
        .collect();
    let ys: Vec<f64> = dataset.samples.iter().map(|s| s.y).collect();

    let mut model = DeepSetsModel::initialize(seed, config.gamma_phi, config.gamma_rho)?;
    let mut sn_phi = SpectralState::default();
    let mut sn_rho = SpectralState::default();
    sn_phi.normalize(&mut model.phi, config.gamma_phi, Some(&inv_scale))?;
    sn_rho.normalize(&mut model.rho, config.gamma_rho, None)?;

    let n_params = model.phi.parameter_count() + model.rho.parameter_count();
    let mut opt = Optimizer::new(config, n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut ws = Workspace::default();
    let mut grads = Gradients::zeros_like(&model);
    let mut order = train_idx.clone();
    let total_steps = config.epochs * train_idx.len().div_ceil(config.batch_size);
    let mut step = 0;
    let provenance = dataset.hash();

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut trace = Vec::with_capacity(config.epochs);
    let mut aborted = false;

    'epochs: for epoch in 1..=config.epochs {
        let checkpoint = model.clone();
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            grads.scale(0.0);
            let inv_b = 1.0 / batch.len() as f64;
            let mut finite = true;
            for &i in batch {
                let y = ys[i];
                let pred = model.accumulate_gradient(&inputs[i], &mut ws, &mut grads, |p| 2.0 * (p - y) * inv_b);
                finite &= pred.is_finite();
            }
            if !finite {
                model = checkpoint;
                aborted = true;
                break 'epochs;
            }
            opt.lr = config.schedule.rate(config.learning_rate, step, total_steps);
            step += 1;
            opt.step(&mut model, &grads);
            sn_phi.normalize(&mut model.phi, config.gamma_phi, Some(&inv_scale))?;
            sn_rho.normalize(&mut model.rho, config.gamma_rho, None)?;
        }
        let train_mse = mse(&model, &inputs, &ys, &train_idx);
        let val_mse = if val_idx.is_empty() {
            train_mse
        } else {
            mse(&model, &inputs, &ys, &val_idx)
        };
        if !train_mse.is_finite() || !val_mse.is_finite() {
            model = checkpoint;
            aborted = true;
            break;
        }
        trace.push(EpochLoss {
            epoch,
            train_mse,
            val_mse,
        });
        if val_mse < best_val {
            best_val = val_mse;
            best = model.clone();
            best_epoch = epoch;
        }
    }

    let export = |m: &DeepSetsModel| {
        let mut out = fold_standardizer(m, &st);
        out.meta.seed = seed;
        out.meta.provenance = provenance.clone();
        out
    };
    Ok(TrainOutcome {
        model: export(&best),
        last: export(&model),
        best_epoch,
        trace,
        normalization: st.clone(),
        train_indices: train_idx,
        val_indices: val_idx,
        aborted,
    })
}

/// Accuracy of a model on one neighbor-set size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeMetrics {
    pub size: usize,
    pub count: usize,
    pub rmse: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub count: usize,
    pub rmse: f64,
    pub max_abs: f64,
    /// One row per set size 0..=5; empty sizes report NaN errors.
    pub by_size: Vec<SizeMetrics>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set_size,count,rmse,max_abs_error\n");
        out.push_str(&format!("all,{},{},{}\n", self.count, self.rmse, self.max_abs));
        for r in &self.by_size {
            out.push_str(&format!("{},{},{},{}\n", r.size, r.count, r.rmse, r.max_abs));
        }
        out
    }
}

/// Prediction error of `model` on every sample, overall and by set size.
pub fn evaluate(model: &DeepSetsModel, dataset: &Dataset) -> Result<EvalReport, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::Empty);
    }
    let mut sq = [0.0; 6];
    let mut max = [0.0f64; 6];
    let mut cnt = [0usize; 6];
    let (mut total_sq, mut total_max) = (0.0, 0.0f64);
    for s in &dataset.samples {
        let e = model.forward(&s.neighbors) - s.y;
        total_sq += e * e;
        total_max = total_max.max(e.abs());
        if let Some(k) = (s.neighbors.len() < 6).then_some(s.neighbors.len()) {
            sq[k] += e * e;
            max[k] = max[k].max(e.abs());
            cnt[k] += 1;
        }
    }
    let by_size = (0..6)
        .map(|k| SizeMetrics {
            size: k,
            count: cnt[k],
            rmse: if cnt[k] > 0 { (sq[k] / cnt[k] as f64).sqrt() } else { f64::NAN },
            max_abs: if cnt[k] > 0 { max[k] } else { f64::NAN },
        })
        .collect();
    Ok(EvalReport {
        count: dataset.len(),
        rmse: (total_sq / dataset.len() as f64).sqrt(),
        max_abs: total_max,
        by_size,
    })
}
