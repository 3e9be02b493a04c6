//! The sixteen-DBN sub-band ensemble.
//!
//! Every training image is decomposed into sixteen sub-bands; DBN `j`
//! learns sub-band `j` across the whole training set and receives a
//! voting weight equal to its training-set accuracy,
//! `w = 1 - misclassified / total`. Prediction runs all sixteen DBNs and
//! accumulates each one's weight onto its predicted class; the class with
//! the largest tally wins, lowest index on ties.
//!
//! The sixteen trainings share nothing and derive their seeds as
//! `master_seed + j`, so sequential and parallel execution produce
//! bit-identical models.

use crate::dbn::{self, Dbn, DbnError, DbnTrainConfig};
use crate::wavelet::{self, Image, WaveletError, WaveletFilter};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

/// Number of sub-bands produced by the full 2-level decomposition.
pub const SUBBANDS: usize = 16;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("expected exactly {expected} {role}, got {got}")]
    WrongArity {
        role: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("prediction {pred} out of range for {n_classes} classes")]
    PredictionOutOfRange { pred: usize, n_classes: usize },
    #[error("voting weight {0} must be finite and nonnegative")]
    InvalidWeight(f64),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("images and labels lengths differ: {images} vs {labels}")]
    MismatchedLengths { images: usize, labels: usize },
    #[error("image {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    InconsistentImageSize {
        index: usize,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("image is {got_w}x{got_h}, model expects {want_w}x{want_h}")]
    DimensionMismatch {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("downsample factor must be 1 or 2, got {0}")]
    BadDownsampleFactor(u32),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Dbn(#[from] DbnError),
}

/// How raw images are prepared before decomposition. Stored in the model
/// so evaluation applies the identical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessDescriptor {
    /// 1 (none) or 2 (2x2 box mean once).
    pub downsample_factor: u32,
    pub filter_name: String,
    /// Expected raw input dimensions, before any downsampling.
    pub input_width: usize,
    pub input_height: usize,
}

impl PreprocessDescriptor {
    pub fn validate(&self) -> Result<WaveletFilter, EnsembleError> {
        if self.downsample_factor != 1 && self.downsample_factor != 2 {
            return Err(EnsembleError::BadDownsampleFactor(self.downsample_factor));
        }
        let filter = WaveletFilter::by_name(&self.filter_name)?;
        let (w, h) = self.decomposed_dims();
        if w % 4 != 0 || h % 4 != 0 {
            return Err(WaveletError::NotDivisibleBy4 { width: w, height: h }.into());
        }
        Ok(filter)
    }

    /// Dimensions after downsampling, i.e. what gets decomposed.
    pub fn decomposed_dims(&self) -> (usize, usize) {
        let d = self.downsample_factor as usize;
        (self.input_width / d, self.input_height / d)
    }

    /// Flattened length of one sub-band, the per-DBN input dimension.
    pub fn subband_input_dim(&self) -> usize {
        let (w, h) = self.decomposed_dims();
        (w / 4) * (h / 4)
    }
}

/// Per-sub-band affine rescaling to [0, 1], fitted on the training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubbandScaler {
    pub min: f64,
    pub max: f64,
}

impl SubbandScaler {
    /// Maps a coefficient into [0, 1], clamping outside the fitted range.
    /// A degenerate range (constant band) maps everything to 0.
    pub fn apply(&self, x: f64) -> f64 {
        if self.max > self.min {
            ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Sixteen trained DBNs with their voting weights and the preprocessing
/// needed to reproduce their inputs. Index `j` matches sub-band `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub dbns: Vec<Dbn>,
    pub weights: Vec<f64>,
    pub n_classes: usize,
    pub subband_scalers: Vec<SubbandScaler>,
    pub preprocess: PreprocessDescriptor,
}

impl EnsembleModel {
    pub fn all_finite(&self) -> bool {
        self.dbns.iter().all(|d| d.all_finite()) && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Accumulated vote mass per class and the winning class.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    pub tally: Vec<f64>,
    pub predicted: usize,
}

/// Voting weight of one DBN: its accuracy on the training set.
pub fn compute_weight(
    dbn: &Dbn,
    train_data: &[Vec<f64>],
    train_labels: &[usize],
) -> Result<f64, EnsembleError> {
    Ok(dbn.accuracy(train_data, train_labels)?)
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Weighted vote over the sixteen per-DBN predictions.
///
/// `tally[c] = sum of weights[j] where predictions[j] == c`. If every
/// weight is zero the tally carries no signal; the vote then falls back
/// to an unweighted plurality. Ties break to the lowest class index.
pub fn weighted_vote(
    predictions: &[usize],
    weights: &[f64],
    n_classes: usize,
) -> Result<VoteTally, EnsembleError> {
    if predictions.len() != SUBBANDS {
        return Err(EnsembleError::WrongArity {
            role: "predictions",
            expected: SUBBANDS,
            got: predictions.len(),
        });
    }
    if weights.len() != SUBBANDS {
        return Err(EnsembleError::WrongArity {
            role: "weights",
            expected: SUBBANDS,
            got: weights.len(),
        });
    }
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(EnsembleError::InvalidWeight(w));
        }
    }
    let mut tally = vec![0.0; n_classes];
    for (&pred, &w) in predictions.iter().zip(weights) {
        if pred >= n_classes {
            return Err(EnsembleError::PredictionOutOfRange {
                pred,
                n_classes,
            });
        }
        tally[pred] += w;
    }
    let predicted = if tally.iter().all(|&t| t == 0.0) {
        let mut counts = vec![0usize; n_classes];
        for &pred in predictions {
            counts[pred] += 1;
        }
        let floats: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        argmax_lowest(&floats)
    } else {
        argmax_lowest(&tally)
    };
    Ok(VoteTally { tally, predicted })
}

/// Applies the descriptor's downsampling, decomposes, scales each
/// sub-band with its fitted scaler and flattens. Returns the sixteen
/// per-DBN input vectors.
fn subband_inputs(
    image: &Image,
    preprocess: &PreprocessDescriptor,
    filter: &WaveletFilter,
    scalers: &[SubbandScaler],
) -> Result<Vec<Vec<f64>>, EnsembleError> {
    let reduced = if preprocess.downsample_factor == 2 {
        image.downsample_2x()?
    } else {
        image.clone()
    };
    let set = wavelet::decompose_full_2level(&reduced, filter)?;
    Ok(set
        .subbands()
        .iter()
        .zip(scalers)
        .map(|(band, scaler)| band.pixels().iter().map(|&p| scaler.apply(p)).collect())
        .collect())
}

/// Timing and weight for one trained sub-band DBN.
#[derive(Debug, Clone)]
pub struct DbnTrainStats {
    pub pretrain_seconds: f64,
    pub finetune_seconds: f64,
    pub train_accuracy: f64,
}

/// Side information from [`train_ensemble`].
#[derive(Debug, Clone)]
pub struct EnsembleTrainStats {
    pub per_dbn: Vec<DbnTrainStats>,
    pub wall_seconds: f64,
}

/// Trains the full ensemble: decompose every image, fit per-band scalers,
/// train one DBN per sub-band (seed `master + j`), weight each by its
/// training accuracy. `workers` caps the parallel trainings; 1 forces
/// sequential execution and 0 uses all available cores. The result does
/// not depend on `workers`.
pub fn train_ensemble(
    images: &[Image],
    labels: &[usize],
    n_classes: usize,
    hidden_sizes: &[usize],
    cfg: &DbnTrainConfig,
    preprocess: &PreprocessDescriptor,
    workers: usize,
) -> Result<(EnsembleModel, EnsembleTrainStats), EnsembleError> {
    let filter = preprocess.validate()?;
    if images.is_empty() {
        return Err(EnsembleError::EmptyDataset);
    }
    if images.len() != labels.len() {
        return Err(EnsembleError::MismatchedLengths {
            images: images.len(),
            labels: labels.len(),
        });
    }
    for &label in labels {
        if label >= n_classes {
            return Err(EnsembleError::LabelOutOfRange { label, n_classes });
        }
    }
    for (i, img) in images.iter().enumerate() {
        if img.width() != preprocess.input_width || img.height() != preprocess.input_height {
            return Err(EnsembleError::InconsistentImageSize {
                index: i,
                want_w: preprocess.input_width,
                want_h: preprocess.input_height,
                got_w: img.width(),
                got_h: img.height(),
            });
        }
    }

    let wall_start = Instant::now();

    // Decompose once, then fit min/max per sub-band index over the whole
    // training set.
    let mut raw_bands: Vec<Vec<Vec<f64>>> = (0..SUBBANDS)
        .map(|_| Vec::with_capacity(images.len()))
        .collect();
    for img in images {
        let reduced = if preprocess.downsample_factor == 2 {
            img.downsample_2x()?
        } else {
            img.clone()
        };
        let set = wavelet::decompose_full_2level(&reduced, &filter)?;
        for (j, band) in set.subbands().iter().enumerate() {
            raw_bands[j].push(band.flatten());
        }
    }
    let scalers: Vec<SubbandScaler> = raw_bands
        .iter()
        .map(|vectors| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for v in vectors {
                for &x in v {
                    min = min.min(x);
                    max = max.max(x);
                }
            }
            SubbandScaler { min, max }
        })
        .collect();
    let datasets: Vec<Vec<Vec<f64>>> = raw_bands
        .into_iter()
        .zip(&scalers)
        .map(|(vectors, scaler)| {
            vectors
                .into_iter()
                .map(|v| v.into_iter().map(|x| scaler.apply(x)).collect())
                .collect()
        })
        .collect();

    let input_dim = preprocess.subband_input_dim();
    let train_one = |j: usize| -> Result<(Dbn, f64, DbnTrainStats), EnsembleError> {
        let seed = cfg.seed.wrapping_add(j as u64);
        let task_cfg = DbnTrainConfig {
            seed,
            ..cfg.clone()
        };
        let dbn = dbn::build_dbn(input_dim, hidden_sizes, n_classes, seed)?;
        let t0 = Instant::now();
        let (dbn, _) = dbn::pretrain(dbn, &datasets[j], &task_cfg)?;
        let pretrain_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let (dbn, _) = dbn::finetune(dbn, &datasets[j], labels, &task_cfg)?;
        let finetune_seconds = t1.elapsed().as_secs_f64();
        let weight = compute_weight(&dbn, &datasets[j], labels)?;
        Ok((
            dbn,
            weight,
            DbnTrainStats {
                pretrain_seconds,
                finetune_seconds,
                train_accuracy: weight,
            },
        ))
    };

    let results: Vec<Result<(Dbn, f64, DbnTrainStats), EnsembleError>> = if workers == 1 {
        (0..SUBBANDS).map(train_one).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if workers > 0 {
            builder = builder.num_threads(workers);
        }
        let pool = builder
            .build()
            .expect("thread pool construction cannot fail with these settings");
        pool.install(|| (0..SUBBANDS).into_par_iter().map(train_one).collect())
    };

    let mut dbns = Vec::with_capacity(SUBBANDS);
    let mut weights = Vec::with_capacity(SUBBANDS);
    let mut per_dbn = Vec::with_capacity(SUBBANDS);
    for r in results {
        let (dbn, weight, stats) = r?;
        dbns.push(dbn);
        weights.push(weight);
        per_dbn.push(stats);
    }

    Ok((
        EnsembleModel {
            dbns,
            weights,
            n_classes,
            subband_scalers: scalers,
            preprocess: preprocess.clone(),
        },
        EnsembleTrainStats {
            per_dbn,
            wall_seconds: wall_start.elapsed().as_secs_f64(),
        },
    ))
}

/// Full prediction trace for one image.
#[derive(Debug, Clone)]
pub struct EnsemblePrediction {
    pub predicted: usize,
    pub tally: VoteTally,
    pub per_dbn: Vec<usize>,
}

/// Runs the stored preprocessing and all sixteen DBNs, then votes.
pub fn predict_ensemble(
    model: &EnsembleModel,
    image: &Image,
) -> Result<EnsemblePrediction, EnsembleError> {
    if image.width() != model.preprocess.input_width
        || image.height() != model.preprocess.input_height
    {
        return Err(EnsembleError::DimensionMismatch {
            want_w: model.preprocess.input_width,
            want_h: model.preprocess.input_height,
            got_w: image.width(),
            got_h: image.height(),
        });
    }
    let filter = model.preprocess.validate()?;
    let inputs = subband_inputs(image, &model.preprocess, &filter, &model.subband_scalers)?;
    let mut per_dbn = Vec::with_capacity(SUBBANDS);
    for (dbn, input) in model.dbns.iter().zip(&inputs) {
        per_dbn.push(dbn.predict(input)?);
    }
    let tally = weighted_vote(&per_dbn, &model.weights, model.n_classes)?;
    Ok(EnsemblePrediction {
        predicted: tally.predicted,
        tally,
        per_dbn,
    })
}

/// Evaluation metrics over a labeled set.
#[derive(Debug, Clone)]
pub struct EvalMetrics {
    pub accuracy: f64,
    /// Per-class accuracy; NaN-free (classes absent from the set get 0).
    pub per_class_accuracy: Vec<f64>,
    /// Row-major `n_classes x n_classes`; rows are true classes.
    pub confusion: Vec<u64>,
    pub per_dbn_accuracy: Vec<f64>,
    pub weights: Vec<f64>,
    pub wall_seconds: f64,
}

/// Evaluates the ensemble; deterministic apart from the timing field.
pub fn evaluate_ensemble(
    model: &EnsembleModel,
    images: &[Image],
    labels: &[usize],
) -> Result<EvalMetrics, EnsembleError> {
    if images.is_empty() {
        return Err(EnsembleError::EmptyDataset);
    }
    if images.len() != labels.len() {
        return Err(EnsembleError::MismatchedLengths {
            images: images.len(),
            labels: labels.len(),
        });
    }
    for &label in labels {
        if label >= model.n_classes {
            return Err(EnsembleError::LabelOutOfRange {
                label,
                n_classes: model.n_classes,
            });
        }
    }
    let start = Instant::now();
    let n = model.n_classes;
    let mut confusion = vec![0u64; n * n];
    let mut dbn_hits = vec![0u64; SUBBANDS];
    for (img, &label) in images.iter().zip(labels) {
        let pred = predict_ensemble(model, img)?;
        confusion[label * n + pred.predicted] += 1;
        for (j, &p) in pred.per_dbn.iter().enumerate() {
            if p == label {
                dbn_hits[j] += 1;
            }
        }
    }
    let total = images.len() as f64;
    let correct: u64 = (0..n).map(|c| confusion[c * n + c]).sum();
    let per_class_accuracy = (0..n)
        .map(|c| {
            let row: u64 = confusion[c * n..(c + 1) * n].iter().sum();
            if row == 0 {
                0.0
            } else {
                confusion[c * n + c] as f64 / row as f64
            }
        })
        .collect();
    Ok(EvalMetrics {
        accuracy: correct as f64 / total,
        per_class_accuracy,
        confusion,
        per_dbn_accuracy: dbn_hits.iter().map(|&h| h as f64 / total).collect(),
        weights: model.weights.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
