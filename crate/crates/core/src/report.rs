//! Run reports: one machine-readable `key=value` record plus a
//! human-readable table.
//!
//! Float values in the key=value form use Rust's shortest round-trip
//! rendering, so downstream tooling recovers the exact binary64 values.

use crate::ensemble::EvalMetrics;
use crate::wavelet::SubbandSet;
use std::fmt::Write as _;

/// Per-DBN row of a training report.
#[derive(Debug, Clone)]
pub struct DbnReportRow {
    pub pretrain_seconds: f64,
    pub finetune_seconds: f64,
    pub weight: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

impl DbnReportRow {
    pub fn total_seconds(&self) -> f64 {
        self.pretrain_seconds + self.finetune_seconds
    }
}

/// Everything a `train` run reports.
#[derive(Debug, Clone)]
pub struct ReportRecord {
    pub dataset_summary: String,
    pub architecture: String,
    pub n_classes: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub per_dbn: Vec<DbnReportRow>,
    pub total_wall_seconds: f64,
    pub ensemble_train_accuracy: f64,
    pub ensemble_test_accuracy: f64,
    /// Always `100 * (1 - ensemble_test_accuracy)`.
    pub test_error_percent: f64,
    /// Test confusion matrix, row-major, rows are true classes.
    pub confusion: Vec<u64>,
    pub per_class_test_accuracy: Vec<f64>,
    /// Canonical config text the run was started with.
    pub config_echo: String,
}

impl ReportRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dataset_summary: String,
        architecture: String,
        train_size: usize,
        test_size: usize,
        per_dbn: Vec<DbnReportRow>,
        total_wall_seconds: f64,
        train_metrics: &EvalMetrics,
        test_metrics: &EvalMetrics,
        n_classes: usize,
        config_echo: String,
    ) -> Self {
        Self {
            dataset_summary,
            architecture,
            n_classes,
            train_size,
            test_size,
            per_dbn,
            total_wall_seconds,
            ensemble_train_accuracy: train_metrics.accuracy,
            ensemble_test_accuracy: test_metrics.accuracy,
            test_error_percent: 100.0 * (1.0 - test_metrics.accuracy),
            confusion: test_metrics.confusion.clone(),
            per_class_test_accuracy: test_metrics.per_class_accuracy.clone(),
            config_echo,
        }
    }

    pub fn sum_dbn_seconds(&self) -> f64 {
        self.per_dbn.iter().map(|r| r.total_seconds()).sum()
    }

    /// Flat `key=value` lines, one record per run.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset={}", self.dataset_summary);
        let _ = writeln!(out, "architecture={}", self.architecture);
        let _ = writeln!(out, "n_classes={}", self.n_classes);
        let _ = writeln!(out, "train_size={}", self.train_size);
        let _ = writeln!(out, "test_size={}", self.test_size);
        let _ = writeln!(out, "ensemble_train_accuracy={}", self.ensemble_train_accuracy);
        let _ = writeln!(out, "ensemble_test_accuracy={}", self.ensemble_test_accuracy);
        let _ = writeln!(out, "test_error_percent={}", self.test_error_percent);
        let _ = writeln!(out, "total_wall_seconds={}", self.total_wall_seconds);
        let _ = writeln!(out, "sum_dbn_seconds={}", self.sum_dbn_seconds());
        for (j, row) in self.per_dbn.iter().enumerate() {
            let _ = writeln!(out, "dbn_{j:02}_pretrain_seconds={}", row.pretrain_seconds);
            let _ = writeln!(out, "dbn_{j:02}_finetune_seconds={}", row.finetune_seconds);
            let _ = writeln!(out, "dbn_{j:02}_total_seconds={}", row.total_seconds());
            let _ = writeln!(out, "dbn_{j:02}_weight={}", row.weight);
            let _ = writeln!(out, "dbn_{j:02}_train_accuracy={}", row.train_accuracy);
            let _ = writeln!(out, "dbn_{j:02}_test_accuracy={}", row.test_accuracy);
        }
        for (c, acc) in self.per_class_test_accuracy.iter().enumerate() {
            let _ = writeln!(out, "class_{c:02}_test_accuracy={acc}");
        }
        let n = self.n_classes;
        for i in 0..n {
            for j in 0..n {
                let _ = writeln!(out, "confusion_{i:02}_{j:02}={}", self.confusion[i * n + j]);
            }
        }
        for line in self.config_echo.lines() {
            let _ = writeln!(out, "config.{line}");
        }
        out
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset        {}", self.dataset_summary);
        let _ = writeln!(out, "architecture   {}", self.architecture);
        let _ = writeln!(out, "train / test   {} / {}", self.train_size, self.test_size);
        let _ = writeln!(
            out,
            "ensemble       train {:.2}%   test {:.2}%   error {:.2}%",
            100.0 * self.ensemble_train_accuracy,
            100.0 * self.ensemble_test_accuracy,
            self.test_error_percent
        );
        let _ = writeln!(
            out,
            "time           wall {:.2} s   per-DBN sum {:.2} s",
            self.total_wall_seconds,
            self.sum_dbn_seconds()
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "dbn  band   weight   train%   test%   pretrain(s)  finetune(s)"
        );
        for (j, row) in self.per_dbn.iter().enumerate() {
            let _ = writeln!(
                out,
                "{j:>3}  {:<5}  {:.4}   {:>6.2}   {:>5.2}   {:>11.2}  {:>11.2}",
                SubbandSet::label(j),
                row.weight,
                100.0 * row.train_accuracy,
                100.0 * row.test_accuracy,
                row.pretrain_seconds,
                row.finetune_seconds
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "confusion matrix (rows = true class):");
        let n = self.n_classes;
        for i in 0..n {
            let mut line = format!("{i:>4} |");
            for j in 0..n {
                let _ = write!(line, " {:>4}", self.confusion[i * n + j]);
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}
