//! Versioned plain-text model persistence.
//!
//! The format is line-oriented and diffable. Every float is written in
//! scientific notation with 17 significant digits, which round-trips
//! binary64 exactly: save -> load -> save reproduces the file byte for
//! byte apart from the timestamp line. Layout:
//!
//! ```text
//! WAVEDBN 1
//! timestamp <unix seconds>
//! config_hash <16 hex digits>
//! seed <u64>
//! downsample <1|2>
//! filter <name>
//! input_width <w>    input_height <h>    (one header per line)
//! n_classes <n>
//! n_dbns 16
//! weights <16 floats>
//! scaler <j> <min> <max>                 (16 lines)
//! dbn <j> / layers / layer / vbias / hbias / wrow ... / softmax / sbias / srow
//! end
//! ```
//!
//! Parse errors report the byte offset of the first violating line.

use crate::dbn::Dbn;
use crate::ensemble::{EnsembleModel, PreprocessDescriptor, SubbandScaler, SUBBANDS};
use crate::rbm::{Rbm, VisibleKind};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MAGIC: &str = "WAVEDBN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a model file (expected magic {MAGIC:?})")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported model format version {found} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion { path: PathBuf, found: u64 },
    #[error("{path}: corrupt model at byte {byte_offset}: {reason}")]
    Corrupt {
        path: PathBuf,
        byte_offset: usize,
        reason: String,
    },
}

/// Where a model came from: hash of the canonical config text, the master
/// seed, and the wall-clock time of the save.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: u64,
    pub seed: u64,
    pub timestamp: u64,
}

fn fmt_f64(x: f64) -> String {
    // 1 leading + 16 fractional digits = 17 significant digits.
    format!("{x:.16e}")
}

fn push_floats(out: &mut String, values: &[f64]) {
    for v in values {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

fn serialize_rbm(out: &mut String, rbm: &Rbm, index: usize) {
    let _ = writeln!(
        out,
        "layer {index} {} {} {}",
        rbm.n_visible,
        rbm.n_hidden,
        rbm.visible_kind.as_str()
    );
    out.push_str("vbias");
    push_floats(out, &rbm.visible_bias);
    out.push_str("hbias");
    push_floats(out, &rbm.hidden_bias);
    for s in 0..rbm.n_visible {
        let _ = write!(out, "wrow {s}");
        push_floats(out, &rbm.weights[s * rbm.n_hidden..(s + 1) * rbm.n_hidden]);
    }
}

fn serialize(model: &EnsembleModel, provenance: &Provenance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "timestamp {}", provenance.timestamp);
    let _ = writeln!(out, "config_hash {:016x}", provenance.config_hash);
    let _ = writeln!(out, "seed {}", provenance.seed);
    let _ = writeln!(out, "downsample {}", model.preprocess.downsample_factor);
    let _ = writeln!(out, "filter {}", model.preprocess.filter_name);
    let _ = writeln!(out, "input_width {}", model.preprocess.input_width);
    let _ = writeln!(out, "input_height {}", model.preprocess.input_height);
    let _ = writeln!(out, "n_classes {}", model.n_classes);
    let _ = writeln!(out, "n_dbns {}", model.dbns.len());
    out.push_str("weights");
    push_floats(&mut out, &model.weights);
    for (j, s) in model.subband_scalers.iter().enumerate() {
        let _ = writeln!(out, "scaler {j} {} {}", fmt_f64(s.min), fmt_f64(s.max));
    }
    for (j, dbn) in model.dbns.iter().enumerate() {
        let _ = writeln!(out, "dbn {j}");
        let _ = writeln!(out, "layers {}", dbn.layers.len());
        for (l, rbm) in dbn.layers.iter().enumerate() {
            serialize_rbm(&mut out, rbm, l);
        }
        let last = dbn.layers.last().expect("a DBN has at least one layer");
        let _ = writeln!(out, "softmax {} {}", last.n_hidden, dbn.n_classes);
        out.push_str("sbias");
        push_floats(&mut out, &dbn.softmax_bias);
        for s in 0..last.n_hidden {
            let _ = write!(out, "srow {s}");
            push_floats(&mut out, &dbn.softmax_weights[s * dbn.n_classes..(s + 1) * dbn.n_classes]);
        }
    }
    out.push_str("end\n");
    out
}

/// Writes the model atomically: a temp file in the same directory is
/// renamed over the target, so a failed save never leaves a partial
/// model behind.
pub fn save_model(
    path: &Path,
    model: &EnsembleModel,
    provenance: &Provenance,
) -> Result<(), ModelIoError> {
    let text = serialize(model, provenance);
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let io = |source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Line cursor that remembers the byte offset of the current line.
struct Cursor<'a> {
    path: &'a Path,
    rest: &'a str,
    offset: usize,
    line_offset: usize,
}

impl<'a> Cursor<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            rest: text,
            offset: 0,
            line_offset: 0,
        }
    }

    fn corrupt(&self, reason: impl Into<String>) -> ModelIoError {
        ModelIoError::Corrupt {
            path: self.path.to_path_buf(),
            byte_offset: self.line_offset,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, ModelIoError> {
        if self.rest.is_empty() {
            self.line_offset = self.offset;
            return Err(self.corrupt("unexpected end of file"));
        }
        self.line_offset = self.offset;
        let (line, rest, consumed) = match self.rest.find('\n') {
            Some(pos) => (&self.rest[..pos], &self.rest[pos + 1..], pos + 1),
            None => (self.rest, "", self.rest.len()),
        };
        self.rest = rest;
        self.offset += consumed;
        Ok(line)
    }

    /// Next line split into tokens, with the first required to be `tag`.
    fn tagged(&mut self, tag: &str) -> Result<Vec<&'a str>, ModelIoError> {
        let line = self.next_line()?;
        let mut tokens = line.split_ascii_whitespace();
        match tokens.next() {
            Some(t) if t == tag => Ok(tokens.collect()),
            Some(t) => Err(self.corrupt(format!("expected {tag:?}, found {t:?}"))),
            None => Err(self.corrupt(format!("expected {tag:?}, found empty line"))),
        }
    }

    fn parse_usize(&self, token: Option<&str>, what: &str) -> Result<usize, ModelIoError> {
        token
            .ok_or_else(|| self.corrupt(format!("missing {what}")))?
            .parse()
            .map_err(|_| self.corrupt(format!("invalid {what}")))
    }

    fn parse_u64(&self, token: Option<&str>, what: &str) -> Result<u64, ModelIoError> {
        token
            .ok_or_else(|| self.corrupt(format!("missing {what}")))?
            .parse()
            .map_err(|_| self.corrupt(format!("invalid {what}")))
    }

    fn parse_floats(&self, tokens: &[&str], expected: usize, what: &str) -> Result<Vec<f64>, ModelIoError> {
        if tokens.len() != expected {
            return Err(self.corrupt(format!(
                "{what}: expected {expected} values, found {}",
                tokens.len()
            )));
        }
        let mut out = Vec::with_capacity(expected);
        for t in tokens {
            let v: f64 = t
                .parse()
                .map_err(|_| self.corrupt(format!("{what}: invalid float {t:?}")))?;
            if !v.is_finite() {
                return Err(self.corrupt(format!("{what}: non-finite value {t:?}")));
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Tagged line with an index as its first field, e.g. `wrow 3 ...`.
    fn indexed(&mut self, tag: &str, index: usize) -> Result<Vec<&'a str>, ModelIoError> {
        let tokens = self.tagged(tag)?;
        let found = self.parse_usize(tokens.first().copied(), "index")?;
        if found != index {
            return Err(self.corrupt(format!("expected {tag} {index}, found {tag} {found}")));
        }
        Ok(tokens[1..].to_vec())
    }
}

fn parse_rbm(cur: &mut Cursor, index: usize) -> Result<Rbm, ModelIoError> {
    let header = cur.indexed("layer", index)?;
    let n_visible = cur.parse_usize(header.first().copied(), "n_visible")?;
    let n_hidden = cur.parse_usize(header.get(1).copied(), "n_hidden")?;
    let kind = header
        .get(2)
        .and_then(|t| VisibleKind::from_name(t))
        .ok_or_else(|| cur.corrupt("invalid visible kind"))?;
    if n_visible == 0 || n_hidden == 0 {
        return Err(cur.corrupt("layer sizes must be positive"));
    }
    let vbias_tokens = cur.tagged("vbias")?;
    let visible_bias = cur.parse_floats(&vbias_tokens, n_visible, "vbias")?;
    let hbias_tokens = cur.tagged("hbias")?;
    let hidden_bias = cur.parse_floats(&hbias_tokens, n_hidden, "hbias")?;
    let mut weights = Vec::with_capacity(n_visible * n_hidden);
    for s in 0..n_visible {
        let row = cur.indexed("wrow", s)?;
        weights.extend(cur.parse_floats(&row, n_hidden, "wrow")?);
    }
    Ok(Rbm {
        n_visible,
        n_hidden,
        weights,
        visible_bias,
        hidden_bias,
        visible_kind: kind,
    })
}

pub fn load_model(path: &Path) -> Result<(EnsembleModel, Provenance), ModelIoError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelIoError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut cur = Cursor::new(path, &text);

    let first = cur.next_line()?;
    let mut tokens = first.split_ascii_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(ModelIoError::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let version = cur.parse_u64(tokens.next(), "format version")?;
    if version != FORMAT_VERSION as u64 {
        return Err(ModelIoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
        });
    }

    let t = cur.tagged("timestamp")?;
    let timestamp = cur.parse_u64(t.first().copied(), "timestamp")?;
    let t = cur.tagged("config_hash")?;
    let config_hash = u64::from_str_radix(
        t.first()
            .copied()
            .ok_or_else(|| cur.corrupt("missing config_hash"))?,
        16,
    )
    .map_err(|_| cur.corrupt("invalid config_hash"))?;
    let t = cur.tagged("seed")?;
    let seed = cur.parse_u64(t.first().copied(), "seed")?;
    let t = cur.tagged("downsample")?;
    let downsample = cur.parse_u64(t.first().copied(), "downsample")? as u32;
    let t = cur.tagged("filter")?;
    let filter_name = t
        .first()
        .copied()
        .ok_or_else(|| cur.corrupt("missing filter name"))?
        .to_string();
    let t = cur.tagged("input_width")?;
    let input_width = cur.parse_usize(t.first().copied(), "input_width")?;
    let t = cur.tagged("input_height")?;
    let input_height = cur.parse_usize(t.first().copied(), "input_height")?;
    let t = cur.tagged("n_classes")?;
    let n_classes = cur.parse_usize(t.first().copied(), "n_classes")?;
    let t = cur.tagged("n_dbns")?;
    let n_dbns = cur.parse_usize(t.first().copied(), "n_dbns")?;
    if n_dbns != SUBBANDS {
        return Err(cur.corrupt(format!("expected {SUBBANDS} DBNs, found {n_dbns}")));
    }
    if n_classes == 0 {
        return Err(cur.corrupt("n_classes must be positive"));
    }

    let w_tokens = cur.tagged("weights")?;
    let weights = cur.parse_floats(&w_tokens, SUBBANDS, "weights")?;
    if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(cur.corrupt(format!("ensemble weight {w} outside [0, 1]")));
    }
    let mut subband_scalers = Vec::with_capacity(SUBBANDS);
    for j in 0..SUBBANDS {
        let s = cur.indexed("scaler", j)?;
        let pair = cur.parse_floats(&s, 2, "scaler")?;
        subband_scalers.push(SubbandScaler {
            min: pair[0],
            max: pair[1],
        });
    }

    let mut dbns = Vec::with_capacity(SUBBANDS);
    for j in 0..SUBBANDS {
        cur.indexed("dbn", j)?;
        let t = cur.tagged("layers")?;
        let n_layers = cur.parse_usize(t.first().copied(), "layer count")?;
        if n_layers == 0 {
            return Err(cur.corrupt("a DBN needs at least one layer"));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let rbm = parse_rbm(&mut cur, l)?;
            if let Some(prev) = layers.last() {
                let prev: &Rbm = prev;
                if prev.n_hidden != rbm.n_visible {
                    return Err(cur.corrupt(format!(
                        "layer {l} visible size {} does not chain to previous hidden size {}",
                        rbm.n_visible, prev.n_hidden
                    )));
                }
            }
            layers.push(rbm);
        }
        let head = cur.tagged("softmax")?;
        let last_hidden = cur.parse_usize(head.first().copied(), "softmax input size")?;
        let head_classes = cur.parse_usize(head.get(1).copied(), "softmax class count")?;
        if last_hidden != layers.last().unwrap().n_hidden || head_classes != n_classes {
            return Err(cur.corrupt("softmax dimensions do not match the stack"));
        }
        let sb = cur.tagged("sbias")?;
        let softmax_bias = cur.parse_floats(&sb, n_classes, "sbias")?;
        let mut softmax_weights = Vec::with_capacity(last_hidden * n_classes);
        for s in 0..last_hidden {
            let row = cur.indexed("srow", s)?;
            softmax_weights.extend(cur.parse_floats(&row, n_classes, "srow")?);
        }
        let input_dim = layers[0].n_visible;
        dbns.push(Dbn {
            layers,
            softmax_weights,
            softmax_bias,
            n_classes,
            input_dim,
        });
    }
    let t = cur.tagged("end")?;
    if !t.is_empty() {
        return Err(cur.corrupt("trailing tokens after end"));
    }

    // All sixteen stacks must share one architecture.
    let shape = |d: &Dbn| -> Vec<(usize, usize)> {
        d.layers.iter().map(|l| (l.n_visible, l.n_hidden)).collect()
    };
    let first_shape = shape(&dbns[0]);
    if let Some(j) = (1..SUBBANDS).find(|&j| shape(&dbns[j]) != first_shape) {
        return Err(cur.corrupt(format!("dbn {j} architecture differs from dbn 0")));
    }

    let model = EnsembleModel {
        dbns,
        weights,
        n_classes,
        subband_scalers,
        preprocess: PreprocessDescriptor {
            downsample_factor: downsample,
            filter_name,
            input_width,
            input_height,
        },
    };
    Ok((
        model,
        Provenance {
            config_hash,
            seed,
            timestamp,
        },
    ))
}
