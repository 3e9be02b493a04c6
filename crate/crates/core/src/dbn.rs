//! Deep belief network: a stack of RBMs under a softmax head.
//!
//! Training happens in two phases. [`pretrain`] fits each RBM bottom-up
//! with contrastive divergence, feeding layer `l+1` the hidden
//! probabilities (not samples) of the trained layer `l`. [`finetune`]
//! then minimizes mean cross-entropy with mini-batch SGD through the
//! whole stack, sigmoid hidden activations and a softmax output.

use crate::rbm::{self, Rbm, RbmError, RbmTrainConfig, VisibleKind};
use crate::rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DbnError {
    #[error("hidden_sizes must be nonempty")]
    NoHiddenLayers,
    #[error("layer sizes must be positive")]
    ZeroLayerSize,
    #[error("input length {got} does not match input_dim {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("data and labels lengths differ: {data} vs {labels}")]
    MismatchedLengths { data: usize, labels: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite parameter encountered during fine-tuning (epoch {0})")]
    NonFinite(usize),
    #[error(transparent)]
    Rbm(#[from] RbmError),
}

// Seed streams, kept distinct so initialization, per-layer pre-training
// and fine-tune shuffling never share a generator.
const STREAM_INIT_LAYER: u64 = 1_000;
const STREAM_INIT_SOFTMAX: u64 = 1_999;
const STREAM_PRETRAIN_LAYER: u64 = 2_000;
const STREAM_FINETUNE: u64 = 3_000;

/// RBM stack plus softmax classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct Dbn {
    pub layers: Vec<Rbm>,
    /// Row-major `last_hidden x n_classes`.
    pub softmax_weights: Vec<f64>,
    pub softmax_bias: Vec<f64>,
    pub n_classes: usize,
    pub input_dim: usize,
}

/// Two-phase training hyperparameters. The pretrain template's seed field
/// is ignored; all streams derive from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnTrainConfig {
    pub pretrain: RbmTrainConfig,
    pub finetune_learning_rate: f64,
    pub finetune_epochs: usize,
    pub finetune_batch_size: usize,
    pub seed: u64,
}

impl Default for DbnTrainConfig {
    fn default() -> Self {
        Self {
            pretrain: RbmTrainConfig::default(),
            finetune_learning_rate: 0.1,
            finetune_epochs: 200,
            finetune_batch_size: 10,
            seed: 0,
        }
    }
}

impl DbnTrainConfig {
    pub fn validate(&self) -> Result<(), DbnError> {
        self.pretrain
            .validate()
            .map_err(|e| DbnError::InvalidConfig(e.to_string()))?;
        if !(self.finetune_learning_rate > 0.0 && self.finetune_learning_rate.is_finite()) {
            return Err(DbnError::InvalidConfig(
                "finetune_learning_rate must be positive".into(),
            ));
        }
        if self.finetune_epochs == 0 {
            return Err(DbnError::InvalidConfig("finetune_epochs must be >= 1".into()));
        }
        if self.finetune_batch_size == 0 {
            return Err(DbnError::InvalidConfig(
                "finetune_batch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Builds an untrained stack with chained dimensions and a softmax head.
pub fn build_dbn(
    input_dim: usize,
    hidden_sizes: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<Dbn, DbnError> {
    if hidden_sizes.is_empty() {
        return Err(DbnError::NoHiddenLayers);
    }
    if input_dim == 0 || n_classes == 0 || hidden_sizes.contains(&0) {
        return Err(DbnError::ZeroLayerSize);
    }
    let mut layers = Vec::with_capacity(hidden_sizes.len());
    let mut prev = input_dim;
    for (l, &size) in hidden_sizes.iter().enumerate() {
        layers.push(Rbm::new(
            prev,
            size,
            VisibleKind::BernoulliReal,
            rng::derive_seed(seed, STREAM_INIT_LAYER + l as u64),
        )?);
        prev = size;
    }
    let mut r = rng::seeded(rng::derive_seed(seed, STREAM_INIT_SOFTMAX));
    let softmax_weights = (0..prev * n_classes)
        .map(|_| 0.01 * rng::standard_normal(&mut r))
        .collect();
    Ok(Dbn {
        layers,
        softmax_weights,
        softmax_bias: vec![0.0; n_classes],
        n_classes,
        input_dim,
    })
}

/// Numerically stable softmax.
fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log(sum_i exp(z_i))` with max subtraction.
fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln()
}

impl Dbn {
    fn check_input(&self, v: &[f64]) -> Result<(), DbnError> {
        if v.len() != self.input_dim {
            return Err(DbnError::DimensionMismatch {
                expected: self.input_dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Sigmoid activations of every hidden layer, bottom to top.
    fn activations(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut cur = v;
        for layer in &self.layers {
            // prob_h_given_v is exactly sigmoid(b_h + v W); dims were
            // checked on entry so the unwrap cannot fire.
            let a = layer.prob_h_given_v(cur).unwrap();
            acts.push(a);
            cur = acts.last().unwrap();
        }
        acts
    }

    fn logits(&self, top: &[f64]) -> Vec<f64> {
        let mut z = self.softmax_bias.clone();
        for (j, &a) in top.iter().enumerate() {
            let row = &self.softmax_weights[j * self.n_classes..(j + 1) * self.n_classes];
            for (zc, w) in z.iter_mut().zip(row) {
                *zc += a * w;
            }
        }
        z
    }

    /// Class probabilities; outputs sum to 1.
    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>, DbnError> {
        self.check_input(v)?;
        let acts = self.activations(v);
        Ok(softmax(&self.logits(acts.last().unwrap())))
    }

    /// Argmax class; ties break to the lowest index.
    pub fn predict(&self, v: &[f64]) -> Result<usize, DbnError> {
        let probs = self.forward(v)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Fraction of correct predictions.
    pub fn accuracy(&self, data: &[Vec<f64>], labels: &[usize]) -> Result<f64, DbnError> {
        if data.len() != labels.len() {
            return Err(DbnError::MismatchedLengths {
                data: data.len(),
                labels: labels.len(),
            });
        }
        if data.is_empty() {
            return Err(DbnError::EmptyDataset);
        }
        let mut hits = 0usize;
        for (v, &label) in data.iter().zip(labels) {
            if self.predict(v)? == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }

    /// Trainable parameter count along the discriminative path:
    /// per layer `n_v * n_h + n_h`, plus the softmax head.
    pub fn parameter_count(&self) -> usize {
        let mut n = 0;
        for layer in &self.layers {
            n += layer.n_visible * layer.n_hidden + layer.n_hidden;
        }
        let last = self.layers.last().map_or(self.input_dim, |l| l.n_hidden);
        n + last * self.n_classes + self.n_classes
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.all_finite())
            && self.softmax_weights.iter().all(|w| w.is_finite())
            && self.softmax_bias.iter().all(|b| b.is_finite())
    }
}

/// Greedy layer-wise contrastive-divergence pre-training. Returns the
/// network and one reconstruction-error trace per layer.
pub fn pretrain(
    mut dbn: Dbn,
    data: &[Vec<f64>],
    cfg: &DbnTrainConfig,
) -> Result<(Dbn, Vec<Vec<f64>>), DbnError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(DbnError::EmptyDataset);
    }
    for v in data {
        dbn.check_input(v)?;
    }

    let mut reprs: Vec<Vec<f64>> = data.to_vec();
    let mut traces = Vec::with_capacity(dbn.layers.len());
    for l in 0..dbn.layers.len() {
        let layer_cfg = RbmTrainConfig {
            seed: rng::derive_seed(cfg.seed, STREAM_PRETRAIN_LAYER + l as u64),
            ..cfg.pretrain.clone()
        };
        let layer = std::mem::replace(
            &mut dbn.layers[l],
            Rbm::new(1, 1, VisibleKind::BernoulliReal, 0)?,
        );
        let (trained, trace) = rbm::train_rbm(layer, &reprs, &layer_cfg)?;
        // Propagate probabilities, not samples, to the next layer.
        for r in &mut reprs {
            *r = trained.prob_h_given_v(r)?;
        }
        dbn.layers[l] = trained;
        traces.push(trace);
    }
    Ok((dbn, traces))
}

/// Gradients of the mean cross-entropy over a batch, one entry per layer
/// plus the head. Exposed so training can be validated against finite
/// differences.
#[derive(Debug, Clone)]
pub struct DbnGradients {
    pub layer_weights: Vec<Vec<f64>>,
    pub layer_biases: Vec<Vec<f64>>,
    pub softmax_weights: Vec<f64>,
    pub softmax_bias: Vec<f64>,
}

/// Mean cross-entropy of the batch and its exact gradient for every
/// trainable parameter (layer weights, layer hidden biases, head).
pub fn loss_and_gradients(
    dbn: &Dbn,
    data: &[&[f64]],
    labels: &[usize],
) -> Result<(f64, DbnGradients), DbnError> {
    if data.is_empty() {
        return Err(DbnError::EmptyDataset);
    }
    if data.len() != labels.len() {
        return Err(DbnError::MismatchedLengths {
            data: data.len(),
            labels: labels.len(),
        });
    }
    for v in data {
        dbn.check_input(v)?;
    }
    for &label in labels {
        if label >= dbn.n_classes {
            return Err(DbnError::LabelOutOfRange {
                label,
                n_classes: dbn.n_classes,
            });
        }
    }

    let n_layers = dbn.layers.len();
    let mut grads = DbnGradients {
        layer_weights: dbn
            .layers
            .iter()
            .map(|l| vec![0.0; l.n_visible * l.n_hidden])
            .collect(),
        layer_biases: dbn.layers.iter().map(|l| vec![0.0; l.n_hidden]).collect(),
        softmax_weights: vec![0.0; dbn.softmax_weights.len()],
        softmax_bias: vec![0.0; dbn.n_classes],
    };
    let scale = 1.0 / data.len() as f64;
    let mut loss = 0.0;

    for (v, &label) in data.iter().zip(labels) {
        let acts = dbn.activations(v);
        let top = acts.last().unwrap();
        let logits = dbn.logits(top);
        loss += scale * (log_sum_exp(&logits) - logits[label]);

        // Output delta: softmax minus one-hot, scaled by the batch mean.
        let probs = softmax(&logits);
        let mut delta: Vec<f64> = probs.iter().map(|&p| p * scale).collect();
        delta[label] -= scale;

        for (c, &d) in delta.iter().enumerate() {
            grads.softmax_bias[c] += d;
        }
        let mut d_top = vec![0.0; top.len()];
        for (j, &a) in top.iter().enumerate() {
            let row = &dbn.softmax_weights[j * dbn.n_classes..(j + 1) * dbn.n_classes];
            let grow = &mut grads.softmax_weights[j * dbn.n_classes..(j + 1) * dbn.n_classes];
            let mut acc = 0.0;
            for ((g, &w), &d) in grow.iter_mut().zip(row).zip(&delta) {
                *g += a * d;
                acc += w * d;
            }
            d_top[j] = acc;
        }

        // Backpropagate through the sigmoid layers.
        let mut d_act = d_top;
        for l in (0..n_layers).rev() {
            let layer = &dbn.layers[l];
            let a = &acts[l];
            let below: &[f64] = if l == 0 { v } else { &acts[l - 1] };
            let nh = layer.n_hidden;

            let mut d_z = vec![0.0; nh];
            for t in 0..nh {
                d_z[t] = d_act[t] * a[t] * (1.0 - a[t]);
            }
            for (t, &dz) in d_z.iter().enumerate() {
                grads.layer_biases[l][t] += dz;
            }
            let mut d_below = vec![0.0; below.len()];
            for (s, &b) in below.iter().enumerate() {
                let row = &layer.weights[s * nh..(s + 1) * nh];
                let grow = &mut grads.layer_weights[l][s * nh..(s + 1) * nh];
                let mut acc = 0.0;
                for ((g, &w), &dz) in grow.iter_mut().zip(row).zip(&d_z) {
                    *g += b * dz;
                    acc += w * dz;
                }
                d_below[s] = acc;
            }
            d_act = d_below;
        }
    }
    Ok((loss, grads))
}

/// Supervised fine-tuning: mini-batch SGD on mean cross-entropy with the
/// pretrain momentum schedule. Returns the network and the mean training
/// loss per epoch.
pub fn finetune(
    mut dbn: Dbn,
    data: &[Vec<f64>],
    labels: &[usize],
    cfg: &DbnTrainConfig,
) -> Result<(Dbn, Vec<f64>), DbnError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(DbnError::EmptyDataset);
    }
    if data.len() != labels.len() {
        return Err(DbnError::MismatchedLengths {
            data: data.len(),
            labels: labels.len(),
        });
    }
    for &label in labels {
        if label >= dbn.n_classes {
            return Err(DbnError::LabelOutOfRange {
                label,
                n_classes: dbn.n_classes,
            });
        }
    }

    let mut r = rng::seeded(rng::derive_seed(cfg.seed, STREAM_FINETUNE));
    let lr = cfg.finetune_learning_rate;
    let mut vel_w: Vec<Vec<f64>> = dbn
        .layers
        .iter()
        .map(|l| vec![0.0; l.n_visible * l.n_hidden])
        .collect();
    let mut vel_b: Vec<Vec<f64>> = dbn.layers.iter().map(|l| vec![0.0; l.n_hidden]).collect();
    let mut vel_sw = vec![0.0; dbn.softmax_weights.len()];
    let mut vel_sb = vec![0.0; dbn.n_classes];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.finetune_epochs);

    for epoch in 1..=cfg.finetune_epochs {
        let momentum = if epoch >= cfg.pretrain.momentum_switch_epoch {
            cfg.pretrain.momentum_final
        } else {
            cfg.pretrain.momentum_initial
        };
        rng::shuffle(&mut r, &mut order);

        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.finetune_batch_size) {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = loss_and_gradients(&dbn, &batch, &batch_labels)?;
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();

            for l in 0..dbn.layers.len() {
                step(
                    &mut dbn.layers[l].weights,
                    &mut vel_w[l],
                    &grads.layer_weights[l],
                    momentum,
                    lr,
                );
                step(
                    &mut dbn.layers[l].hidden_bias,
                    &mut vel_b[l],
                    &grads.layer_biases[l],
                    momentum,
                    lr,
                );
            }
            step(&mut dbn.softmax_weights, &mut vel_sw, &grads.softmax_weights, momentum, lr);
            step(&mut dbn.softmax_bias, &mut vel_sb, &grads.softmax_bias, momentum, lr);
        }
        if !dbn.all_finite() {
            return Err(DbnError::NonFinite(epoch));
        }
        trace.push(epoch_loss / seen as f64);
    }
    Ok((dbn, trace))
}

fn step(params: &mut [f64], vel: &mut [f64], grad: &[f64], momentum: f64, lr: f64) {
    for ((p, v), g) in params.iter_mut().zip(vel.iter_mut()).zip(grad) {
        *v = momentum * *v + lr * g;
        *p -= *v;
    }
}
