//! Run configuration: a flat `key = value` text format with `[section]`
//! headers.
//!
//! Blank lines and `#` comments are ignored; unknown sections, unknown
//! keys and duplicate keys are errors. Every tunable has a default;
//! [`RunConfig::default_text`] prints the full annotated template. The
//! canonical rendering of a config (sorted `section.key=value` lines)
//! feeds the provenance hash stored in model files.

use crate::dataset::SplitSpec;
use crate::dbn::DbnTrainConfig;
use crate::rbm::RbmTrainConfig;
use crate::wavelet::WaveletFilter;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value` or `[section]`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key {key:?} in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for {key}: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Coil20,
    Usps,
    GenericPgmDir,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Coil20 => "coil20",
            DatasetKind::Usps => "usps",
            DatasetKind::GenericPgmDir => "generic-pgm-dir",
        }
    }
}

/// Everything a `train`/`bench` run needs, validated before any work
/// starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_kind: DatasetKind,
    pub data_path: Option<PathBuf>,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    /// COIL object ids (1-based, as in the file names) to keep.
    pub select_objects: Option<Vec<usize>>,

    pub downsample: u32,
    pub filter: String,
    pub hidden_sizes: Vec<usize>,

    pub pretrain_learning_rate: f64,
    pub pretrain_epochs: usize,
    pub pretrain_batch_size: usize,
    pub cd_steps: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_epoch: usize,
    pub weight_decay: f64,

    pub finetune_learning_rate: f64,
    pub finetune_epochs: usize,
    pub finetune_batch_size: usize,

    pub train_fraction: f64,
    pub stratified: bool,
    /// Defaults to the master seed when absent.
    pub split_seed: Option<u64>,

    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_kind: DatasetKind::Coil20,
            data_path: None,
            train_path: None,
            test_path: None,
            select_objects: None,
            downsample: 2,
            filter: "haar".into(),
            hidden_sizes: vec![40, 20, 20],
            pretrain_learning_rate: 0.1,
            pretrain_epochs: 50,
            pretrain_batch_size: 10,
            cd_steps: 1,
            momentum_initial: 0.5,
            momentum_final: 0.9,
            momentum_switch_epoch: 5,
            weight_decay: 2e-4,
            finetune_learning_rate: 0.1,
            finetune_epochs: 200,
            finetune_batch_size: 10,
            train_fraction: 0.7,
            stratified: true,
            split_seed: None,
            seed: 42,
            workers: 0,
            out_dir: PathBuf::from("runs/out"),
        }
    }
}

const SECTIONS: [&str; 7] = [
    "dataset",
    "preprocess",
    "architecture",
    "pretrain",
    "finetune",
    "split",
    "run",
];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        let mut seen: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: line_no,
                    text: raw.trim().into(),
                })?;
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::UnknownSection {
                        line: line_no,
                        name: name.into(),
                    });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                text: raw.trim().into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let full_key = format!("{section}.{key}");
            if seen.contains(&full_key) {
                return Err(ConfigError::DuplicateKey {
                    line: line_no,
                    key: full_key,
                });
            }
            seen.push(full_key.clone());
            cfg.apply(&section, key, value, line_no)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: String| ConfigError::InvalidValue {
            line,
            key: key.into(),
            reason,
        };
        macro_rules! parse {
            ($ty:ty) => {
                value
                    .parse::<$ty>()
                    .map_err(|e| invalid(key, e.to_string()))?
            };
        }
        match (section, key) {
            ("dataset", "kind") => {
                self.dataset_kind = match value {
                    "coil20" => DatasetKind::Coil20,
                    "usps" => DatasetKind::Usps,
                    "generic-pgm-dir" => DatasetKind::GenericPgmDir,
                    other => {
                        return Err(invalid(
                            key,
                            format!("unknown dataset kind {other:?} (coil20 | usps | generic-pgm-dir)"),
                        ))
                    }
                }
            }
            ("dataset", "path") => self.data_path = Some(PathBuf::from(value)),
            ("dataset", "train_path") => self.train_path = Some(PathBuf::from(value)),
            ("dataset", "test_path") => self.test_path = Some(PathBuf::from(value)),
            ("dataset", "select_objects") => {
                let ids = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid(key, e.to_string()))?;
                self.select_objects = Some(ids);
            }
            ("preprocess", "downsample") => self.downsample = parse!(u32),
            ("preprocess", "filter") => self.filter = value.to_string(),
            ("architecture", "hidden_sizes") => {
                self.hidden_sizes = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid(key, e.to_string()))?;
            }
            ("pretrain", "learning_rate") => self.pretrain_learning_rate = parse!(f64),
            ("pretrain", "epochs") => self.pretrain_epochs = parse!(usize),
            ("pretrain", "batch_size") => self.pretrain_batch_size = parse!(usize),
            ("pretrain", "cd_steps") => self.cd_steps = parse!(usize),
            ("pretrain", "momentum_initial") => self.momentum_initial = parse!(f64),
            ("pretrain", "momentum_final") => self.momentum_final = parse!(f64),
            ("pretrain", "momentum_switch_epoch") => self.momentum_switch_epoch = parse!(usize),
            ("pretrain", "weight_decay") => self.weight_decay = parse!(f64),
            ("finetune", "learning_rate") => self.finetune_learning_rate = parse!(f64),
            ("finetune", "epochs") => self.finetune_epochs = parse!(usize),
            ("finetune", "batch_size") => self.finetune_batch_size = parse!(usize),
            ("split", "train_fraction") => self.train_fraction = parse!(f64),
            ("split", "stratified") => {
                self.stratified = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(invalid(key, format!("expected true|false, got {other:?}"))),
                }
            }
            ("split", "seed") => self.split_seed = Some(parse!(u64)),
            ("run", "seed") => self.seed = parse!(u64),
            ("run", "workers") => self.workers = parse!(usize),
            ("run", "out_dir") => self.out_dir = PathBuf::from(value),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    section: section.into(),
                    key: key.into(),
                })
            }
        }
        Ok(())
    }

    /// Checks every field against the preconditions of the modules that
    /// will consume it. Nothing runs before this passes.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        match self.dataset_kind {
            DatasetKind::Coil20 | DatasetKind::GenericPgmDir => {
                if self.data_path.is_none() {
                    return fail("dataset.path is required for directory datasets".into());
                }
            }
            DatasetKind::Usps => {
                if self.train_path.is_none() || self.test_path.is_none() {
                    return fail("dataset.train_path and dataset.test_path are required for usps".into());
                }
            }
        }
        if let Some(objects) = &self.select_objects {
            if self.dataset_kind != DatasetKind::Coil20 {
                return fail("dataset.select_objects only applies to coil20".into());
            }
            if objects.is_empty() {
                return fail("dataset.select_objects must not be empty".into());
            }
            for &k in objects {
                if !(1..=20).contains(&k) {
                    return fail(format!("dataset.select_objects: object id {k} outside 1..=20"));
                }
            }
            let mut sorted = objects.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != objects.len() {
                return fail("dataset.select_objects contains duplicates".into());
            }
        }
        if self.downsample != 1 && self.downsample != 2 {
            return fail(format!("preprocess.downsample must be 1 or 2, got {}", self.downsample));
        }
        WaveletFilter::by_name(&self.filter)
            .map_err(|e| ConfigError::Invalid(format!("preprocess.filter: {e}")))?;
        if self.hidden_sizes.is_empty() {
            return fail("architecture.hidden_sizes must not be empty".into());
        }
        if self.hidden_sizes.contains(&0) {
            return fail("architecture.hidden_sizes entries must be positive".into());
        }
        self.dbn_train_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "split.train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            ));
        }
        if self.out_dir.as_os_str().is_empty() {
            return fail("run.out_dir must not be empty".into());
        }
        Ok(())
    }

    pub fn dbn_train_config(&self) -> DbnTrainConfig {
        DbnTrainConfig {
            pretrain: RbmTrainConfig {
                learning_rate: self.pretrain_learning_rate,
                epochs: self.pretrain_epochs,
                batch_size: self.pretrain_batch_size,
                cd_steps: self.cd_steps,
                momentum_initial: self.momentum_initial,
                momentum_final: self.momentum_final,
                momentum_switch_epoch: self.momentum_switch_epoch,
                weight_decay: self.weight_decay,
                seed: self.seed,
            },
            finetune_learning_rate: self.finetune_learning_rate,
            finetune_epochs: self.finetune_epochs,
            finetune_batch_size: self.finetune_batch_size,
            seed: self.seed,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.split_seed.unwrap_or(self.seed),
            stratified: self.stratified,
        }
    }

    /// Fixed-order `section.key=value` lines; the provenance hash is
    /// FNV-1a over this text.
    pub fn canonical_text(&self) -> String {
        let path_str = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let objects = self
            .select_objects
            .as_ref()
            .map(|v| {
                v.iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .unwrap_or_default();
        let hidden = self
            .hidden_sizes
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        for (k, v) in [
            ("dataset.kind", self.dataset_kind.as_str().to_string()),
            ("dataset.path", path_str(&self.data_path)),
            ("dataset.train_path", path_str(&self.train_path)),
            ("dataset.test_path", path_str(&self.test_path)),
            ("dataset.select_objects", objects),
            ("preprocess.downsample", self.downsample.to_string()),
            ("preprocess.filter", self.filter.clone()),
            ("architecture.hidden_sizes", hidden),
            ("pretrain.learning_rate", self.pretrain_learning_rate.to_string()),
            ("pretrain.epochs", self.pretrain_epochs.to_string()),
            ("pretrain.batch_size", self.pretrain_batch_size.to_string()),
            ("pretrain.cd_steps", self.cd_steps.to_string()),
            ("pretrain.momentum_initial", self.momentum_initial.to_string()),
            ("pretrain.momentum_final", self.momentum_final.to_string()),
            ("pretrain.momentum_switch_epoch", self.momentum_switch_epoch.to_string()),
            ("pretrain.weight_decay", self.weight_decay.to_string()),
            ("finetune.learning_rate", self.finetune_learning_rate.to_string()),
            ("finetune.epochs", self.finetune_epochs.to_string()),
            ("finetune.batch_size", self.finetune_batch_size.to_string()),
            ("split.train_fraction", self.train_fraction.to_string()),
            ("split.stratified", self.stratified.to_string()),
            (
                "split.seed",
                self.split_seed.map(|s| s.to_string()).unwrap_or_default(),
            ),
            ("run.seed", self.seed.to_string()),
            ("run.workers", self.workers.to_string()),
            ("run.out_dir", self.out_dir.display().to_string()),
        ] {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// 64-bit FNV-1a of the canonical text.
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_text().as_bytes())
    }

    /// The full annotated default configuration.
    pub fn default_text() -> &'static str {
        DEFAULT_TEXT
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

const DEFAULT_TEXT: &str = "\
# Default run configuration. Unknown sections or keys are rejected.

[dataset]
kind = coil20              # coil20 | usps | generic-pgm-dir
path = data/coil-20-proc   # directory of obj<k>__<angle>.pgm (coil20, generic-pgm-dir)
# train_path = data/usps/usps.train.txt   # usps only
# test_path = data/usps/usps.test.txt     # usps only
# select_objects = 1,6,8,11,19            # coil20 only: keep these object ids

[preprocess]
downsample = 2             # 1 = none, 2 = 2x2 box mean once
filter = haar              # haar | db4

[architecture]
hidden_sizes = 40,20,20

[pretrain]
learning_rate = 0.1
epochs = 50
batch_size = 10
cd_steps = 1
momentum_initial = 0.5
momentum_final = 0.9
momentum_switch_epoch = 5
weight_decay = 0.0002

[finetune]
learning_rate = 0.1
epochs = 200
batch_size = 10

[split]
train_fraction = 0.7
stratified = true
# seed = 42                # defaults to run.seed

[run]
seed = 42
workers = 0                # 0 = all cores, 1 = sequential
out_dir = runs/out
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_text_parses_to_defaults() {
        let cfg = RunConfig::parse_str(DEFAULT_TEXT).unwrap();
        let mut expected = RunConfig::default();
        expected.data_path = Some(PathBuf::from("data/coil-20-proc"));
        assert_eq!(cfg, expected);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_section_key_and_duplicates() {
        assert!(matches!(
            RunConfig::parse_str("[nope]\n"),
            Err(ConfigError::UnknownSection { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("[run]\nbogus = 3\n"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("[run]\nseed = 1\nseed = 2\n"),
            Err(ConfigError::DuplicateKey { line: 3, .. })
        ));
        // Keys are section-scoped.
        assert!(matches!(
            RunConfig::parse_str("[split]\nepochs = 3\n"),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn rejects_malformed_lines_and_values() {
        assert!(matches!(
            RunConfig::parse_str("just some words\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("[run]\nseed = notanumber\n"),
            Err(ConfigError::InvalidValue { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("[split]\nstratified = yes\n"),
            Err(ConfigError::InvalidValue { .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("[dataset]\nkind = imagenet\n"),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn validate_gates_every_bad_field() {
        let ok = "[dataset]\nkind = coil20\npath = d\n";
        RunConfig::parse_str(ok).unwrap().validate().unwrap();

        let cases = [
            "[dataset]\nkind = coil20\n",                                    // missing path
            "[dataset]\nkind = usps\n",                                      // missing files
            "[dataset]\nkind = coil20\npath = d\nselect_objects = 0\n",      // bad object id
            "[dataset]\nkind = coil20\npath = d\nselect_objects = 3,3\n",    // duplicate
            "[dataset]\nkind = coil20\npath = d\n[preprocess]\ndownsample = 3\n",
            "[dataset]\nkind = coil20\npath = d\n[preprocess]\nfilter = sym8\n",
            "[dataset]\nkind = coil20\npath = d\n[architecture]\nhidden_sizes = 40,0\n",
            "[dataset]\nkind = coil20\npath = d\n[pretrain]\nlearning_rate = -0.5\n",
            "[dataset]\nkind = coil20\npath = d\n[pretrain]\nepochs = 0\n",
            "[dataset]\nkind = coil20\npath = d\n[pretrain]\nmomentum_final = 1.0\n",
            "[dataset]\nkind = coil20\npath = d\n[finetune]\nepochs = 0\n",
            "[dataset]\nkind = coil20\npath = d\n[split]\ntrain_fraction = 1.0\n",
        ];
        for text in cases {
            let cfg = RunConfig::parse_str(text).unwrap();
            assert!(cfg.validate().is_err(), "should reject: {text}");
        }
    }

    #[test]
    fn select_objects_rejected_for_usps() {
        let text = "[dataset]\nkind = usps\ntrain_path = a\ntest_path = b\nselect_objects = 1\n";
        let cfg = RunConfig::parse_str(text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse_str("[run]\nseed = 1\n").unwrap();
        let b = RunConfig::parse_str("[run]\nseed = 2\n").unwrap();
        let a2 = RunConfig::parse_str("[run]\nseed = 1\n").unwrap();
        assert_eq!(a.hash(), a2.hash());
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "\n# leading comment\n[run]\nseed = 9   # trailing comment\n\n";
        let cfg = RunConfig::parse_str(text).unwrap();
        assert_eq!(cfg.seed, 9);
    }
}
