//! The train / eval / bench / decompose / inspect workflows behind the
//! CLI, with errors classified for the process exit code: 1 validation,
//! 2 I/O, 3 numerical failure.

use crate::config::{ConfigError, DatasetKind, RunConfig};
use crate::dataset::{self, DatasetError, LabeledDataset};
use crate::dbn::{self, DbnError};
use crate::ensemble::{self, EnsembleError, EnsembleModel, PreprocessDescriptor, SUBBANDS};
use crate::model_io::{self, ModelIoError, Provenance};
use crate::pgm::{self, PgmError};
use crate::rbm::RbmError;
use crate::report::{DbnReportRow, ReportRecord};
use crate::wavelet::{self, SubbandSet, WaveletError, WaveletFilter};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 1,
            RunError::Io(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => RunError::Io(e.to_string()),
            other => RunError::Validation(other.to_string()),
        }
    }
}

impl From<DatasetError> for RunError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidFraction(_)
            | DatasetError::ClassTooSmall { .. }
            | DatasetError::UnknownClass(_)
            | DatasetError::DuplicateClass(_)
            | DatasetError::EmptySelection => RunError::Validation(e.to_string()),
            other => RunError::Io(other.to_string()),
        }
    }
}

impl From<PgmError> for RunError {
    fn from(e: PgmError) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<ModelIoError> for RunError {
    fn from(e: ModelIoError) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<WaveletError> for RunError {
    fn from(e: WaveletError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<EnsembleError> for RunError {
    fn from(e: EnsembleError) -> Self {
        match &e {
            EnsembleError::Dbn(DbnError::NonFinite(_))
            | EnsembleError::Dbn(DbnError::Rbm(RbmError::NonFinite(_))) => {
                RunError::Numerical(e.to_string())
            }
            _ => RunError::Validation(e.to_string()),
        }
    }
}

impl From<DbnError> for RunError {
    fn from(e: DbnError) -> Self {
        match &e {
            DbnError::NonFinite(_) | DbnError::Rbm(RbmError::NonFinite(_)) => {
                RunError::Numerical(e.to_string())
            }
            _ => RunError::Validation(e.to_string()),
        }
    }
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Loaded and split data plus display strings.
struct PreparedData {
    train: LabeledDataset,
    test: LabeledDataset,
    summary: String,
}

fn prepare_data(cfg: &RunConfig) -> Result<PreparedData, RunError> {
    match cfg.dataset_kind {
        DatasetKind::Coil20 | DatasetKind::GenericPgmDir => {
            let dir = cfg
                .data_path
                .as_ref()
                .expect("validated: directory datasets carry a path");
            let mut ds = if cfg.dataset_kind == DatasetKind::Coil20 {
                dataset::load_coil20(dir)?
            } else {
                dataset::load_pgm_dir(dir)?
            };
            let mut label_note = String::new();
            if let Some(objects) = &cfg.select_objects {
                // Object k in the file names is class k-1.
                let classes: Vec<usize> = objects.iter().map(|&k| k - 1).collect();
                ds = dataset::select_classes(&ds, &classes)?;
                label_note = format!(
                    ", objects {}",
                    objects
                        .iter()
                        .map(|k| k.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                );
            }
            let summary = format!(
                "{} {} ({} samples, {} classes{})",
                cfg.dataset_kind.as_str(),
                dir.display(),
                ds.len(),
                ds.n_classes,
                label_note
            );
            let (train, test) = dataset::split_holdout(&ds, &cfg.split_spec())?;
            Ok(PreparedData {
                train,
                test,
                summary,
            })
        }
        DatasetKind::Usps => {
            let (train, test) = dataset::load_usps(
                cfg.train_path
                    .as_ref()
                    .expect("validated: usps carries train_path"),
                cfg.test_path
                    .as_ref()
                    .expect("validated: usps carries test_path"),
            )?;
            let summary = format!(
                "usps ({} train / {} test, {} classes)",
                train.len(),
                test.len(),
                train.n_classes
            );
            Ok(PreparedData {
                train,
                test,
                summary,
            })
        }
    }
}

fn descriptor_for(cfg: &RunConfig, data: &LabeledDataset) -> Result<PreprocessDescriptor, RunError> {
    let (w, h) = data
        .image_dims()
        .ok_or_else(|| RunError::Validation("dataset is empty".into()))?;
    let descriptor = PreprocessDescriptor {
        downsample_factor: cfg.downsample,
        filter_name: cfg.filter.clone(),
        input_width: w,
        input_height: h,
    };
    descriptor.validate().map_err(RunError::from)?;
    Ok(descriptor)
}

fn architecture_string(input_dim: usize, hidden: &[usize], n_classes: usize) -> String {
    let mut s = input_dim.to_string();
    for h in hidden {
        let _ = write!(s, " -> {h}");
    }
    let _ = write!(s, " -> {n_classes}");
    s
}

/// Result of a `train` run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model_path: PathBuf,
    pub report_txt_path: PathBuf,
    pub report_kv_path: PathBuf,
    pub report: ReportRecord,
}

pub fn run_train(cfg: &RunConfig) -> Result<TrainOutcome, RunError> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let descriptor = descriptor_for(cfg, &data.train)?;
    let wall = Instant::now();
    let (model, stats) = ensemble::train_ensemble(
        &data.train.images,
        &data.train.labels,
        data.train.n_classes,
        &cfg.hidden_sizes,
        &cfg.dbn_train_config(),
        &descriptor,
        cfg.workers,
    )?;
    if !model.all_finite() {
        return Err(RunError::Numerical(
            "trained model contains non-finite parameters".into(),
        ));
    }
    let train_metrics = ensemble::evaluate_ensemble(&model, &data.train.images, &data.train.labels)?;
    let test_metrics = ensemble::evaluate_ensemble(&model, &data.test.images, &data.test.labels)?;
    let total_wall_seconds = wall.elapsed().as_secs_f64();

    let per_dbn = (0..SUBBANDS)
        .map(|j| DbnReportRow {
            pretrain_seconds: stats.per_dbn[j].pretrain_seconds,
            finetune_seconds: stats.per_dbn[j].finetune_seconds,
            weight: model.weights[j],
            train_accuracy: train_metrics.per_dbn_accuracy[j],
            test_accuracy: test_metrics.per_dbn_accuracy[j],
        })
        .collect();
    let report = ReportRecord::new(
        data.summary.clone(),
        architecture_string(descriptor.subband_input_dim(), &cfg.hidden_sizes, model.n_classes),
        data.train.len(),
        data.test.len(),
        per_dbn,
        total_wall_seconds,
        &train_metrics,
        &test_metrics,
        model.n_classes,
        cfg.canonical_text(),
    );

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    let model_path = cfg.out_dir.join("model.wavedbn");
    let report_txt_path = cfg.out_dir.join("report.txt");
    let report_kv_path = cfg.out_dir.join("report.kv");
    model_io::save_model(
        &model_path,
        &model,
        &Provenance {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            timestamp: now_unix(),
        },
    )?;
    std::fs::write(&report_txt_path, report.to_table())
        .map_err(|e| RunError::Io(format!("{}: {e}", report_txt_path.display())))?;
    std::fs::write(&report_kv_path, report.to_kv())
        .map_err(|e| RunError::Io(format!("{}: {e}", report_kv_path.display())))?;
    Ok(TrainOutcome {
        model_path,
        report_txt_path,
        report_kv_path,
        report,
    })
}

/// Result of an `eval` run.
#[derive(Debug)]
pub struct EvalOutcome {
    pub summary: String,
    pub train_metrics: ensemble::EvalMetrics,
    pub test_metrics: ensemble::EvalMetrics,
    pub n_classes: usize,
}

impl EvalOutcome {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset        {}", self.summary);
        for (name, m) in [("train", &self.train_metrics), ("test", &self.test_metrics)] {
            let _ = writeln!(
                out,
                "{name:<5} accuracy {:.4}%   error {:.4}%",
                100.0 * m.accuracy,
                100.0 * (1.0 - m.accuracy)
            );
        }
        let n = self.n_classes;
        let _ = writeln!(out, "test confusion matrix (rows = true class):");
        for i in 0..n {
            let mut line = format!("{i:>4} |");
            for j in 0..n {
                let _ = write!(line, " {:>4}", self.test_metrics.confusion[i * n + j]);
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

pub fn run_eval(model_path: &Path, cfg: &RunConfig) -> Result<EvalOutcome, RunError> {
    cfg.validate()?;
    let (model, _) = model_io::load_model(model_path)?;
    let data = prepare_data(cfg)?;
    let train_metrics = ensemble::evaluate_ensemble(&model, &data.train.images, &data.train.labels)?;
    let test_metrics = ensemble::evaluate_ensemble(&model, &data.test.images, &data.test.labels)?;
    Ok(EvalOutcome {
        summary: data.summary,
        train_metrics,
        test_metrics,
        n_classes: model.n_classes,
    })
}

/// Result of a `bench` run: the sub-band ensemble against one monolithic
/// raw-pixel DBN with the same hidden sizes and epochs.
#[derive(Debug)]
pub struct BenchOutcome {
    pub ensemble_sequential_seconds: f64,
    pub ensemble_parallel_seconds: f64,
    pub sequential_parallel_identical: bool,
    pub per_dbn_mean_seconds: f64,
    pub per_dbn_max_seconds: f64,
    pub ensemble_test_accuracy: f64,
    pub per_dbn_parameters: usize,
    pub ensemble_total_parameters: usize,
    pub monolithic_seconds: f64,
    pub monolithic_test_accuracy: f64,
    pub monolithic_parameters: usize,
    /// monolithic time over mean per-DBN time.
    pub speedup_ratio: f64,
}

impl BenchOutcome {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ensemble (16 sub-band DBNs)");
        let _ = writeln!(
            out,
            "  wall time      sequential {:.2} s   parallel {:.2} s",
            self.ensemble_sequential_seconds, self.ensemble_parallel_seconds
        );
        let _ = writeln!(
            out,
            "  per-DBN time   mean {:.2} s   max {:.2} s",
            self.per_dbn_mean_seconds, self.per_dbn_max_seconds
        );
        let _ = writeln!(
            out,
            "  parameters     {} per DBN   {} total",
            self.per_dbn_parameters, self.ensemble_total_parameters
        );
        let _ = writeln!(
            out,
            "  test accuracy  {:.2}%",
            100.0 * self.ensemble_test_accuracy
        );
        let _ = writeln!(
            out,
            "  deterministic  sequential == parallel: {}",
            self.sequential_parallel_identical
        );
        let _ = writeln!(out, "monolithic raw-pixel DBN (same hidden sizes, same epochs)");
        let _ = writeln!(out, "  wall time      {:.2} s", self.monolithic_seconds);
        let _ = writeln!(out, "  parameters     {}", self.monolithic_parameters);
        let _ = writeln!(
            out,
            "  test accuracy  {:.2}%",
            100.0 * self.monolithic_test_accuracy
        );
        let _ = writeln!(
            out,
            "speedup        monolithic / mean per-DBN = {:.2}x",
            self.speedup_ratio
        );
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ensemble_sequential_seconds={}", self.ensemble_sequential_seconds);
        let _ = writeln!(out, "ensemble_parallel_seconds={}", self.ensemble_parallel_seconds);
        let _ = writeln!(
            out,
            "sequential_parallel_identical={}",
            self.sequential_parallel_identical
        );
        let _ = writeln!(out, "per_dbn_mean_seconds={}", self.per_dbn_mean_seconds);
        let _ = writeln!(out, "per_dbn_max_seconds={}", self.per_dbn_max_seconds);
        let _ = writeln!(out, "ensemble_test_accuracy={}", self.ensemble_test_accuracy);
        let _ = writeln!(out, "per_dbn_parameters={}", self.per_dbn_parameters);
        let _ = writeln!(out, "ensemble_total_parameters={}", self.ensemble_total_parameters);
        let _ = writeln!(out, "monolithic_seconds={}", self.monolithic_seconds);
        let _ = writeln!(out, "monolithic_test_accuracy={}", self.monolithic_test_accuracy);
        let _ = writeln!(out, "monolithic_parameters={}", self.monolithic_parameters);
        let _ = writeln!(out, "speedup_ratio={}", self.speedup_ratio);
        out
    }
}

pub fn run_bench(cfg: &RunConfig) -> Result<BenchOutcome, RunError> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let descriptor = descriptor_for(cfg, &data.train)?;
    let dbn_cfg = cfg.dbn_train_config();

    // Sequential ensemble.
    let t = Instant::now();
    let (model_seq, _) = ensemble::train_ensemble(
        &data.train.images,
        &data.train.labels,
        data.train.n_classes,
        &cfg.hidden_sizes,
        &dbn_cfg,
        &descriptor,
        1,
    )?;
    let ensemble_sequential_seconds = t.elapsed().as_secs_f64();

    // Parallel ensemble (all cores unless workers pins a count > 1).
    let par_workers = if cfg.workers <= 1 { 0 } else { cfg.workers };
    let t = Instant::now();
    let (model_par, stats_par) = ensemble::train_ensemble(
        &data.train.images,
        &data.train.labels,
        data.train.n_classes,
        &cfg.hidden_sizes,
        &dbn_cfg,
        &descriptor,
        par_workers,
    )?;
    let ensemble_parallel_seconds = t.elapsed().as_secs_f64();
    let sequential_parallel_identical = model_seq == model_par;
    ensure_finite(&model_par)?;

    let test_metrics =
        ensemble::evaluate_ensemble(&model_par, &data.test.images, &data.test.labels)?;

    // Monolithic DBN on raw (downsampled) pixels.
    let reduce = |ds: &LabeledDataset| -> Result<Vec<Vec<f64>>, RunError> {
        ds.images
            .iter()
            .map(|img| {
                Ok(if descriptor.downsample_factor == 2 {
                    img.downsample_2x()?.flatten()
                } else {
                    img.flatten()
                })
            })
            .collect()
    };
    let mono_train = reduce(&data.train)?;
    let mono_test = reduce(&data.test)?;
    let mono_dim = mono_train[0].len();
    let t = Instant::now();
    let mono = dbn::build_dbn(mono_dim, &cfg.hidden_sizes, data.train.n_classes, cfg.seed)?;
    let (mono, _) = dbn::pretrain(mono, &mono_train, &dbn_cfg)?;
    let (mono, _) = dbn::finetune(mono, &mono_train, &data.train.labels, &dbn_cfg)?;
    let monolithic_seconds = t.elapsed().as_secs_f64();
    if !mono.all_finite() {
        return Err(RunError::Numerical(
            "monolithic model contains non-finite parameters".into(),
        ));
    }
    let monolithic_test_accuracy = mono.accuracy(&mono_test, &data.test.labels)?;

    let per_dbn_seconds: Vec<f64> = stats_par
        .per_dbn
        .iter()
        .map(|s| s.pretrain_seconds + s.finetune_seconds)
        .collect();
    let per_dbn_mean_seconds = per_dbn_seconds.iter().sum::<f64>() / SUBBANDS as f64;
    let per_dbn_max_seconds = per_dbn_seconds.iter().cloned().fold(0.0, f64::max);
    let per_dbn_parameters = model_par.dbns[0].parameter_count();

    let outcome = BenchOutcome {
        ensemble_sequential_seconds,
        ensemble_parallel_seconds,
        sequential_parallel_identical,
        per_dbn_mean_seconds,
        per_dbn_max_seconds,
        ensemble_test_accuracy: test_metrics.accuracy,
        per_dbn_parameters,
        ensemble_total_parameters: model_par.dbns.iter().map(|d| d.parameter_count()).sum(),
        monolithic_seconds,
        monolithic_test_accuracy,
        monolithic_parameters: mono.parameter_count(),
        speedup_ratio: monolithic_seconds / per_dbn_mean_seconds,
    };

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    let txt = cfg.out_dir.join("bench.txt");
    let kv = cfg.out_dir.join("bench.kv");
    std::fs::write(&txt, outcome.to_text()).map_err(|e| RunError::Io(format!("{}: {e}", txt.display())))?;
    std::fs::write(&kv, outcome.to_kv()).map_err(|e| RunError::Io(format!("{}: {e}", kv.display())))?;
    Ok(outcome)
}

/// Result of `decompose`: the sixteen written files and one printable
/// line per band describing the rescale applied for visualization.
#[derive(Debug)]
pub struct DecomposeOutcome {
    pub files: Vec<PathBuf>,
    pub band_lines: Vec<String>,
}

pub fn run_decompose(
    image_path: &Path,
    filter_name: &str,
    out_dir: &Path,
) -> Result<DecomposeOutcome, RunError> {
    let filter = WaveletFilter::by_name(filter_name)?;
    let raw = pgm::read_pgm(image_path)?;
    let image = raw.to_image_normalized();
    let set = wavelet::decompose_full_2level(&image, &filter)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;

    let mut files = Vec::with_capacity(SUBBANDS);
    let mut band_lines = Vec::with_capacity(SUBBANDS);
    for (j, band) in set.subbands().iter().enumerate() {
        let min = band.pixels().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = band.pixels().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Affine rescale to 0..255; a constant band renders mid-gray.
        let bytes: Vec<u8> = if max > min {
            band.pixels()
                .iter()
                .map(|&p| ((p - min) / (max - min) * 255.0).round() as u8)
                .collect()
        } else {
            vec![128; band.pixels().len()]
        };
        let path = out_dir.join(format!("band_{j:02}.pgm"));
        pgm::write_pgm_p5(&path, band.width(), band.height(), &bytes)?;
        band_lines.push(format!(
            "band_{j:02} {}  min {:+.6e}  max {:+.6e}  gray = (coeff - min) * 255 / (max - min)",
            SubbandSet::label(j),
            min,
            max
        ));
        files.push(path);
    }
    Ok(DecomposeOutcome { files, band_lines })
}

/// Human-readable dump of a model file.
pub fn run_inspect(model_path: &Path) -> Result<String, RunError> {
    let (model, prov) = model_io::load_model(model_path)?;
    let mut out = String::new();
    let _ = writeln!(out, "model          {}", model_path.display());
    let _ = writeln!(
        out,
        "provenance     config_hash {:016x}   seed {}   timestamp {}",
        prov.config_hash, prov.seed, prov.timestamp
    );
    let _ = writeln!(
        out,
        "preprocess     input {}x{}   downsample {}   filter {}",
        model.preprocess.input_width,
        model.preprocess.input_height,
        model.preprocess.downsample_factor,
        model.preprocess.filter_name
    );
    let first = &model.dbns[0];
    let hidden: Vec<usize> = first.layers.iter().map(|l| l.n_hidden).collect();
    let _ = writeln!(
        out,
        "architecture   {}   ({} parameters per DBN)",
        architecture_string(first.input_dim, &hidden, model.n_classes),
        first.parameter_count()
    );
    let _ = writeln!(out, "n_classes      {}", model.n_classes);
    let _ = writeln!(out);
    let _ = writeln!(out, "dbn  band   weight        scaler min        scaler max");
    for j in 0..SUBBANDS {
        let s = &model.subband_scalers[j];
        let _ = writeln!(
            out,
            "{j:>3}  {:<5}  {:.6}  {:+.9e}  {:+.9e}",
            SubbandSet::label(j),
            model.weights[j],
            s.min,
            s.max
        );
    }
    Ok(out)
}

/// Classifies a non-finite model as a numerical failure (exit code 3).
pub fn ensure_finite(model: &EnsembleModel) -> Result<(), RunError> {
    if model.all_finite() {
        Ok(())
    } else {
        Err(RunError::Numerical(
            "model contains non-finite parameters".into(),
        ))
    }
}
