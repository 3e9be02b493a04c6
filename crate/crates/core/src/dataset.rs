//! Dataset ingestion and deterministic stratified splits.
//!
//! Two canonical loaders ship: the COIL-20 object library (1440 PGM
//! images, `obj<k>__<angle>.pgm`, 128x128, 20 objects x 72 views) and the
//! USPS handwritten digits (7291 train / 2007 test, 16x16, plain
//! `label v1..v256` lines or sparse `label idx:val` lines). A relaxed
//! [`load_pgm_dir`] accepts any directory following the same naming
//! convention for ad-hoc experiments.

use crate::pgm::{self, PgmError};
use crate::wavelet::Image;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no images matching obj<k>__<angle>.pgm under {0}")]
    EmptyDirectory(PathBuf),
    #[error("{path}: image is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    WrongImageSize {
        path: PathBuf,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("expected the canonical COIL-20 layout (20 objects x 72 views): {0}")]
    NotCanonicalCoil20(String),
    #[error("{path}:{line}: expected {expected} features, found {found}")]
    WrongFeatureCount {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: unknown label {label} (alphabets 0..9 and 1..10 are accepted)")]
    UnknownLabel { path: PathBuf, label: i64 },
    #[error("train_fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("class {class} has {count} samples; splitting needs at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error("unknown class id {0}")]
    UnknownClass(usize),
    #[error("duplicate class id {0} in selection")]
    DuplicateClass(usize),
    #[error("class selection is empty")]
    EmptySelection,
}

/// Images with integer labels in `[0, n_classes)`. All images share one
/// geometry.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub class_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image_dims(&self) -> Option<(usize, usize)> {
        self.images.first().map(|i| (i.width(), i.height()))
    }
}

/// Hold-out split parameters. Stratified splits shuffle and divide each
/// class independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

/// `obj<k>__<angle>.pgm` -> `(k, angle)`.
fn parse_coil_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("obj")?;
    let rest = rest.strip_suffix(".pgm").or_else(|| rest.strip_suffix(".PGM"))?;
    let (k, angle) = rest.split_once("__")?;
    Some((k.parse().ok()?, angle.parse().ok()?))
}

fn scan_pgm_dir(dir: &Path) -> Result<BTreeMap<usize, Vec<(usize, PathBuf)>>, DatasetError> {
    let entries = std::fs::read_dir(dir).map_err(|e| DatasetError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut by_object: BTreeMap<usize, Vec<(usize, PathBuf)>> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| DatasetError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let name = entry.file_name();
        if let Some((k, angle)) = parse_coil_name(&name.to_string_lossy()) {
            by_object.entry(k).or_default().push((angle, entry.path()));
        }
    }
    if by_object.is_empty() {
        return Err(DatasetError::EmptyDirectory(dir.to_path_buf()));
    }
    for views in by_object.values_mut() {
        views.sort_unstable_by_key(|(angle, _)| *angle);
    }
    Ok(by_object)
}

fn load_views(
    by_object: BTreeMap<usize, Vec<(usize, PathBuf)>>,
    expect_dims: Option<(usize, usize)>,
) -> Result<LabeledDataset, DatasetError> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut names = Vec::new();
    let mut dims = expect_dims;
    for (class, (k, views)) in by_object.into_iter().enumerate() {
        names.push(format!("obj{k}"));
        for (_, path) in views {
            let raw = pgm::read_pgm(&path)?;
            match dims {
                None => dims = Some((raw.width, raw.height)),
                Some((w, h)) => {
                    if raw.width != w || raw.height != h {
                        return Err(DatasetError::WrongImageSize {
                            path,
                            want_w: w,
                            want_h: h,
                            got_w: raw.width,
                            got_h: raw.height,
                        });
                    }
                }
            }
            images.push(raw.to_image_normalized());
            labels.push(class);
        }
    }
    let n_classes = names.len();
    Ok(LabeledDataset {
        images,
        labels,
        n_classes,
        class_names: Some(names),
    })
}

/// Strict COIL-20 loader: exactly objects 1..20 with 72 views each, all
/// 128x128. Object k becomes class k-1; ordering is by (object, angle).
pub fn load_coil20(dir: &Path) -> Result<LabeledDataset, DatasetError> {
    let by_object = scan_pgm_dir(dir)?;
    let objects: Vec<usize> = by_object.keys().copied().collect();
    if objects != (1..=20).collect::<Vec<_>>() {
        return Err(DatasetError::NotCanonicalCoil20(format!(
            "found objects {objects:?}"
        )));
    }
    for (&k, views) in &by_object {
        if views.len() != 72 {
            return Err(DatasetError::NotCanonicalCoil20(format!(
                "obj{k} has {} views, expected 72",
                views.len()
            )));
        }
    }
    load_views(by_object, Some((128, 128)))
}

/// Relaxed variant of [`load_coil20`]: any `obj<k>__<angle>.pgm` layout
/// with consistent dimensions. Classes are the distinct k in ascending
/// order, relabeled from 0.
pub fn load_pgm_dir(dir: &Path) -> Result<LabeledDataset, DatasetError> {
    load_views(scan_pgm_dir(dir)?, None)
}

const USPS_FEATURES: usize = 256;

fn parse_usps_file(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<i64>), DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::Malformed {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a first token");
        // Labels appear both as integers and as floats like "6.0000".
        let label_f: f64 = label_tok
            .parse()
            .map_err(|_| malformed(format!("invalid label {label_tok:?}")))?;
        if label_f.fract() != 0.0 {
            return Err(malformed(format!("non-integer label {label_tok:?}")));
        }
        labels.push(label_f as i64);

        let rest: Vec<&str> = tokens.collect();
        let sparse = rest.iter().any(|t| t.contains(':'));
        let mut features = vec![0.0f64; USPS_FEATURES];
        if sparse {
            for t in &rest {
                let (i_str, v_str) = t
                    .split_once(':')
                    .ok_or_else(|| malformed(format!("expected idx:value, got {t:?}")))?;
                let i: usize = i_str
                    .parse()
                    .map_err(|_| malformed(format!("invalid feature index {i_str:?}")))?;
                if !(1..=USPS_FEATURES).contains(&i) {
                    return Err(malformed(format!("feature index {i} outside 1..=256")));
                }
                features[i - 1] = v_str
                    .parse()
                    .map_err(|_| malformed(format!("invalid feature value {v_str:?}")))?;
            }
        } else {
            if rest.len() != USPS_FEATURES {
                return Err(DatasetError::WrongFeatureCount {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected: USPS_FEATURES,
                    found: rest.len(),
                });
            }
            for (slot, t) in features.iter_mut().zip(&rest) {
                *slot = t
                    .parse()
                    .map_err(|_| malformed(format!("invalid feature value {t:?}")))?;
            }
        }
        rows.push(features);
    }
    Ok((rows, labels))
}

fn usps_dataset(path: &Path) -> Result<LabeledDataset, DatasetError> {
    let (rows, raw_labels) = parse_usps_file(path)?;

    // Label alphabet: {0..9} as-is, {1..10} shifted down by one.
    let max_label = raw_labels.iter().copied().max().unwrap_or(0);
    let shift = i64::from(max_label == 10);
    let mut labels = Vec::with_capacity(raw_labels.len());
    for &l in &raw_labels {
        let adjusted = l - shift;
        if !(0..10).contains(&adjusted) {
            return Err(DatasetError::UnknownLabel {
                path: path.to_path_buf(),
                label: l,
            });
        }
        labels.push(adjusted as usize);
    }

    // Pixel source range: [-1, 1] when negatives appear, else [0, 2].
    let has_negative = rows.iter().flatten().any(|&v| v < -1e-9);
    let (lo, hi) = if has_negative { (-1.0, 1.0) } else { (0.0, 2.0) };
    let span = hi - lo;
    let images = rows
        .into_iter()
        .map(|row| {
            let pixels = row
                .into_iter()
                .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
                .collect();
            Image::new(16, 16, pixels).expect("256 features form a 16x16 image")
        })
        .collect();
    Ok(LabeledDataset {
        images,
        labels,
        n_classes: 10,
        class_names: Some((0..10).map(|d| d.to_string()).collect()),
    })
}

/// Loads the USPS train and test files (plain or sparse text format).
pub fn load_usps(
    train_path: &Path,
    test_path: &Path,
) -> Result<(LabeledDataset, LabeledDataset), DatasetError> {
    Ok((usps_dataset(train_path)?, usps_dataset(test_path)?))
}

/// Deterministic hold-out split. Stratified mode shuffles each class with
/// the seeded generator and sends `round(train_fraction * count)` samples
/// (clamped so both sides get at least one) to the training side; both
/// outputs preserve the original sample order.
pub fn split_holdout(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset), DatasetError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(spec.train_fraction));
    }
    let mut r = crate::rng::seeded(spec.seed);
    let mut train_idx: Vec<usize> = Vec::new();
    let mut test_idx: Vec<usize> = Vec::new();

    let mut divide = |indices: &mut Vec<usize>,
                      train_idx: &mut Vec<usize>,
                      test_idx: &mut Vec<usize>| {
        crate::rng::shuffle(&mut r, indices);
        let count = indices.len();
        let n_train = ((spec.train_fraction * count as f64).round() as usize).clamp(1, count - 1);
        train_idx.extend_from_slice(&indices[..n_train]);
        test_idx.extend_from_slice(&indices[n_train..]);
    };

    if spec.stratified {
        for class in 0..ds.n_classes {
            let mut indices: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
            if indices.len() < 2 {
                return Err(DatasetError::ClassTooSmall {
                    class,
                    count: indices.len(),
                });
            }
            divide(&mut indices, &mut train_idx, &mut test_idx);
        }
    } else {
        let mut indices: Vec<usize> = (0..ds.len()).collect();
        if indices.len() < 2 {
            return Err(DatasetError::ClassTooSmall {
                class: 0,
                count: indices.len(),
            });
        }
        divide(&mut indices, &mut train_idx, &mut test_idx);
    }

    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| LabeledDataset {
        images: idx.iter().map(|&i| ds.images[i].clone()).collect(),
        labels: idx.iter().map(|&i| ds.labels[i]).collect(),
        n_classes: ds.n_classes,
        class_names: ds.class_names.clone(),
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Restricts to the listed class ids, relabeling to `0..keep.len()` in
/// the order given. Sample order is preserved.
pub fn select_classes(ds: &LabeledDataset, keep: &[usize]) -> Result<LabeledDataset, DatasetError> {
    if keep.is_empty() {
        return Err(DatasetError::EmptySelection);
    }
    let mut map = vec![None; ds.n_classes];
    for (new, &old) in keep.iter().enumerate() {
        if old >= ds.n_classes {
            return Err(DatasetError::UnknownClass(old));
        }
        if map[old].is_some() {
            return Err(DatasetError::DuplicateClass(old));
        }
        map[old] = Some(new);
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (img, &label) in ds.images.iter().zip(&ds.labels) {
        if let Some(new) = map[label] {
            images.push(img.clone());
            labels.push(new);
        }
    }
    let class_names = ds
        .class_names
        .as_ref()
        .map(|names| keep.iter().map(|&old| names[old].clone()).collect());
    Ok(LabeledDataset {
        images,
        labels,
        n_classes: keep.len(),
        class_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("wavedbn-dataset-tests").join(name);
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn synthetic_views(dir: &Path, objects: &[usize], views: usize, w: usize, h: usize) {
        for &k in objects {
            for a in 0..views {
                let angle = a * 5;
                let value = ((k * 37 + a * 11) % 251) as u8;
                let data = vec![value; w * h];
                pgm::write_pgm_p5(&dir.join(format!("obj{k}__{angle}.pgm")), w, h, &data).unwrap();
            }
        }
    }

    fn toy_dataset(per_class: &[usize]) -> LabeledDataset {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for (class, &count) in per_class.iter().enumerate() {
            for i in 0..count {
                images.push(Image::constant(4, 4, (class * 100 + i) as f64));
                labels.push(class);
            }
        }
        LabeledDataset {
            images,
            labels,
            n_classes: per_class.len(),
            class_names: None,
        }
    }

    #[test]
    fn load_coil20_canonical_layout() {
        let dir = tmp_dir("coil_ok");
        synthetic_views(&dir, &(1..=20).collect::<Vec<_>>(), 72, 128, 128);
        let ds = load_coil20(&dir).unwrap();
        assert_eq!(ds.len(), 1440);
        assert_eq!(ds.n_classes, 20);
        assert_eq!(ds.image_dims(), Some((128, 128)));
        assert!(ds.images.iter().all(|img| img
            .pixels()
            .iter()
            .all(|&p| (0.0..=1.0).contains(&p))));
        // Ordering is (object, angle): first 72 samples are class 0.
        assert!(ds.labels[..72].iter().all(|&l| l == 0));
        assert_eq!(ds.class_names.as_ref().unwrap()[0], "obj1");
        assert_eq!(ds.class_names.as_ref().unwrap()[19], "obj20");
    }

    #[test]
    fn load_coil20_rejects_gaps_and_bad_sizes() {
        let dir = tmp_dir("coil_empty");
        assert!(matches!(
            load_coil20(&dir),
            Err(DatasetError::EmptyDirectory(_))
        ));

        let dir = tmp_dir("coil_partial");
        synthetic_views(&dir, &[1, 2, 3], 72, 128, 128);
        assert!(matches!(
            load_coil20(&dir),
            Err(DatasetError::NotCanonicalCoil20(_))
        ));

        let dir = tmp_dir("coil_small_images");
        synthetic_views(&dir, &(1..=20).collect::<Vec<_>>(), 72, 64, 64);
        let err = load_coil20(&dir).unwrap_err();
        assert!(matches!(err, DatasetError::WrongImageSize { .. }));
    }

    #[test]
    fn load_coil20_names_corrupt_file() {
        let dir = tmp_dir("coil_corrupt");
        synthetic_views(&dir, &(1..=20).collect::<Vec<_>>(), 72, 128, 128);
        std::fs::write(dir.join("obj7__45.pgm"), "P5\n128 128\n255\nshort").unwrap();
        let err = load_coil20(&dir).unwrap_err();
        assert!(err.to_string().contains("obj7__45.pgm"), "{err}");
    }

    #[test]
    fn load_pgm_dir_relaxed() {
        let dir = tmp_dir("generic");
        synthetic_views(&dir, &[3, 9], 5, 8, 8);
        let ds = load_pgm_dir(&dir).unwrap();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.n_classes, 2);
        assert_eq!(ds.class_names.as_ref().unwrap(), &["obj3", "obj9"]);
    }

    #[test]
    fn usps_plain_format() {
        let dir = tmp_dir("usps_plain");
        let mut line0 = String::from("6");
        for i in 0..256 {
            line0.push_str(if i % 2 == 0 { " -1.0" } else { " 1.0" });
        }
        let mut line1 = String::from("0.0000");
        for _ in 0..256 {
            line1.push_str(" 0.5");
        }
        let train = dir.join("train.txt");
        std::fs::write(&train, format!("{line0}\n{line1}\n")).unwrap();
        let ds = usps_dataset(&train).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![6, 0]);
        assert_eq!(ds.image_dims(), Some((16, 16)));
        // [-1,1] maps -1 -> 0 and 1 -> 1.
        assert_eq!(ds.images[0].pixels()[0], 0.0);
        assert_eq!(ds.images[0].pixels()[1], 1.0);
        assert_eq!(ds.images[1].pixels()[0], 0.75);
    }

    #[test]
    fn usps_sparse_format_and_label_shift() {
        let dir = tmp_dir("usps_sparse");
        let f = dir.join("sparse.txt");
        // Labels 1..10 (shift down); non-negative values imply [0,2].
        std::fs::write(&f, "10 1:2.0 256:1.0\n1 5:0.5\n").unwrap();
        let ds = usps_dataset(&f).unwrap();
        assert_eq!(ds.labels, vec![9, 0]);
        assert_eq!(ds.images[0].pixels()[0], 1.0);
        assert_eq!(ds.images[0].pixels()[255], 0.5);
        assert_eq!(ds.images[1].pixels()[4], 0.25);
        assert_eq!(ds.images[1].pixels()[0], 0.0);
    }

    #[test]
    fn usps_wrong_feature_count_cites_line() {
        let dir = tmp_dir("usps_bad");
        let f = dir.join("bad.txt");
        let mut good = String::from("3");
        for _ in 0..256 {
            good.push_str(" 0.1");
        }
        let mut short = String::from("4");
        for _ in 0..255 {
            short.push_str(" 0.1");
        }
        std::fs::write(&f, format!("{good}\n{short}\n")).unwrap();
        let err = usps_dataset(&f).unwrap_err();
        match err {
            DatasetError::WrongFeatureCount { line, found, .. } => {
                assert_eq!(line, 2);
                assert_eq!(found, 255);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn usps_rejects_unknown_labels() {
        let dir = tmp_dir("usps_label");
        let f = dir.join("lab.txt");
        let mut line = String::from("11");
        for _ in 0..256 {
            line.push_str(" 0.1");
        }
        std::fs::write(&f, line).unwrap();
        assert!(matches!(
            usps_dataset(&f),
            Err(DatasetError::UnknownLabel { label: 11, .. })
        ));
    }

    #[test]
    fn split_rounding_matches_coil_class_sizes() {
        let ds = toy_dataset(&[72, 72, 72]);
        let spec = SplitSpec {
            train_fraction: 0.70,
            seed: 5,
            stratified: true,
        };
        let (train, test) = split_holdout(&ds, &spec).unwrap();
        assert_eq!(train.len(), 150); // 50 per class: round(0.7*72) = 50
        assert_eq!(test.len(), 66); // 22 per class
        for class in 0..3 {
            assert_eq!(train.labels.iter().filter(|&&l| l == class).count(), 50);
            assert_eq!(test.labels.iter().filter(|&&l| l == class).count(), 22);
        }

        let spec = SplitSpec {
            train_fraction: 0.75,
            seed: 5,
            stratified: true,
        };
        let (train, test) = split_holdout(&ds, &spec).unwrap();
        assert_eq!(train.labels.iter().filter(|&&l| l == 0).count(), 54);
        assert_eq!(test.labels.iter().filter(|&&l| l == 0).count(), 18);
    }

    #[test]
    fn split_is_deterministic_disjoint_exhaustive() {
        let ds = toy_dataset(&[9, 5, 7]);
        let spec = SplitSpec {
            train_fraction: 0.6,
            seed: 77,
            stratified: true,
        };
        let (tr1, te1) = split_holdout(&ds, &spec).unwrap();
        let (tr2, te2) = split_holdout(&ds, &spec).unwrap();
        assert_eq!(tr1.labels, tr2.labels);
        assert_eq!(te1.labels, te2.labels);
        assert_eq!(tr1.len() + te1.len(), ds.len());

        // Images are unique by construction, so disjointness is checkable
        // through pixel identity.
        let key = |img: &Image| img.pixels()[0] as i64;
        let mut seen: Vec<i64> = tr1.images.iter().map(key).collect();
        seen.extend(te1.images.iter().map(key));
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), total, "train and test overlap");

        let different = split_holdout(
            &ds,
            &SplitSpec {
                seed: 78,
                ..spec
            },
        )
        .unwrap();
        assert_ne!(
            tr1.images.iter().map(key).collect::<Vec<_>>(),
            different.0.images.iter().map(key).collect::<Vec<_>>(),
            "different seeds should give different partitions"
        );
    }

    #[test]
    fn split_keeps_one_sample_minimum() {
        let ds = toy_dataset(&[2, 2]);
        let spec = SplitSpec {
            train_fraction: 0.99,
            seed: 1,
            stratified: true,
        };
        let (train, test) = split_holdout(&ds, &spec).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(test.len(), 2);

        let tiny = toy_dataset(&[1, 4]);
        assert!(matches!(
            split_holdout(&tiny, &spec),
            Err(DatasetError::ClassTooSmall { class: 0, count: 1 })
        ));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = toy_dataset(&[4, 4]);
        for f in [0.0, 1.0, -0.5, f64::NAN] {
            let spec = SplitSpec {
                train_fraction: f,
                seed: 0,
                stratified: true,
            };
            assert!(matches!(
                split_holdout(&ds, &spec),
                Err(DatasetError::InvalidFraction(_))
            ));
        }
    }

    #[test]
    fn select_classes_relabels_in_keep_order() {
        let mut ds = toy_dataset(&[3, 4, 5, 6]);
        ds.class_names = Some(vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        let picked = select_classes(&ds, &[2, 0]).unwrap();
        assert_eq!(picked.len(), 8);
        assert_eq!(picked.n_classes, 2);
        assert_eq!(picked.class_names.as_ref().unwrap(), &["c", "a"]);
        // Original class 2 -> 0, class 0 -> 1.
        assert_eq!(picked.labels.iter().filter(|&&l| l == 0).count(), 5);
        assert_eq!(picked.labels.iter().filter(|&&l| l == 1).count(), 3);

        let all = select_classes(&ds, &[0, 1, 2, 3]).unwrap();
        assert_eq!(all.labels, ds.labels);

        let single = select_classes(&ds, &[1]).unwrap();
        assert_eq!(single.len(), 4);
        assert!(single.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn select_classes_validates_ids() {
        let ds = toy_dataset(&[2, 2]);
        assert!(matches!(
            select_classes(&ds, &[]),
            Err(DatasetError::EmptySelection)
        ));
        assert!(matches!(
            select_classes(&ds, &[7]),
            Err(DatasetError::UnknownClass(7))
        ));
        assert!(matches!(
            select_classes(&ds, &[1, 1]),
            Err(DatasetError::DuplicateClass(1))
        ));
    }
}
