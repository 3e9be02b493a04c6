//! 2D discrete wavelet transform and the full 2-level decomposition.
//!
//! The transform is separable (rows, then columns) and periodized, with
//! orthonormal filters, so `idwt2` reconstructs exactly and energy is
//! preserved. Unlike a conventional multi-level DWT, which recurses only
//! into the LL band, [`decompose_full_2level`] decomposes all four level-1
//! bands again, producing sixteen sub-bands of one-sixteenth the input's
//! pixel count.
//!
//! Band naming: the first letter is the filter applied along rows, the
//! second along columns. `dwt2` returns bands in the fixed order
//! LL, LH, HL, HH.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveletError {
    #[error("pixel buffer has {got} values, expected {expected} for {width}x{height}")]
    BadPixelCount {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("image dimensions {width}x{height} must both be even")]
    OddDimensions { width: usize, height: usize },
    #[error("image dimensions {width}x{height} must both be divisible by 4")]
    NotDivisibleBy4 { width: usize, height: usize },
    #[error("degenerate source range [{0}, {0}]")]
    DegenerateRange(f64),
    #[error("sub-band dimensions differ: {0}x{1} vs {2}x{3}")]
    MismatchedBands(usize, usize, usize, usize),
    #[error("unknown wavelet filter '{0}' (known: haar, db4)")]
    UnknownFilter(String),
    #[error("invalid wavelet filter: {0}")]
    InvalidFilter(String),
}

/// Dense grayscale raster with real-valued pixels, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, WaveletError> {
        if width == 0 || height == 0 {
            return Err(WaveletError::EmptyImage { width, height });
        }
        if pixels.len() != width * height {
            return Err(WaveletError::BadPixelCount {
                width,
                height,
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Affinely maps pixels from `[lo, hi]` to `[0, 1]`, clamping values
    /// that fall outside the source range.
    pub fn normalize(&self, lo: f64, hi: f64) -> Result<Image, WaveletError> {
        if !(hi > lo) {
            return Err(WaveletError::DegenerateRange(lo));
        }
        let span = hi - lo;
        let pixels = self
            .pixels
            .iter()
            .map(|&p| ((p - lo) / span).clamp(0.0, 1.0))
            .collect();
        Ok(Image {
            width: self.width,
            height: self.height,
            pixels,
        })
    }

    /// Halves both dimensions; each output pixel is the mean of its 2x2
    /// source block.
    pub fn downsample_2x(&self) -> Result<Image, WaveletError> {
        if self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(WaveletError::OddDimensions {
                width: self.width,
                height: self.height,
            });
        }
        let (w, h) = (self.width / 2, self.height / 2);
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let sum = self.get(2 * x, 2 * y)
                    + self.get(2 * x + 1, 2 * y)
                    + self.get(2 * x, 2 * y + 1)
                    + self.get(2 * x + 1, 2 * y + 1);
                pixels.push(sum * 0.25);
            }
        }
        Ok(Image {
            width: w,
            height: h,
            pixels,
        })
    }

    /// Row-major pixel vector of length `width * height`.
    pub fn flatten(&self) -> Vec<f64> {
        self.pixels.clone()
    }
}

/// Orthonormal analysis filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    name: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(
        name: impl Into<String>,
        lowpass: Vec<f64>,
        highpass: Vec<f64>,
    ) -> Result<Self, WaveletError> {
        if lowpass.len() != highpass.len() {
            return Err(WaveletError::InvalidFilter(
                "lowpass and highpass lengths differ".into(),
            ));
        }
        if lowpass.is_empty() || lowpass.len() % 2 != 0 {
            return Err(WaveletError::InvalidFilter(
                "filter length must be even and nonzero".into(),
            ));
        }
        let sq: f64 = lowpass.iter().map(|c| c * c).sum();
        if (sq - 1.0).abs() > 1e-12 {
            return Err(WaveletError::InvalidFilter(format!(
                "lowpass is not orthonormal: sum of squares = {sq}"
            )));
        }
        Ok(Self {
            name: name.into(),
            lowpass,
            highpass,
        })
    }

    /// Orthonormal Haar pair: lowpass [1/sqrt(2), 1/sqrt(2)].
    pub fn haar() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new("haar", vec![s, s], vec![s, -s]).expect("Haar is orthonormal")
    }

    /// 4-tap Daubechies pair (extremal phase, two vanishing moments).
    pub fn daubechies4() -> Self {
        let sqrt3 = 3.0_f64.sqrt();
        let norm = 4.0 * std::f64::consts::SQRT_2;
        let h = vec![
            (1.0 + sqrt3) / norm,
            (3.0 + sqrt3) / norm,
            (3.0 - sqrt3) / norm,
            (1.0 - sqrt3) / norm,
        ];
        // Quadrature mirror: g[k] = (-1)^k h[N-1-k].
        let g = vec![h[3], -h[2], h[1], -h[0]];
        Self::new("db4", h, g).expect("the 4-tap Daubechies pair is orthonormal")
    }

    pub fn by_name(name: &str) -> Result<Self, WaveletError> {
        match name {
            "haar" => Ok(Self::haar()),
            "db4" => Ok(Self::daubechies4()),
            other => Err(WaveletError::UnknownFilter(other.into())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }
}

/// The four half-resolution bands of one `dwt2` level.
#[derive(Debug, Clone)]
pub struct Bands {
    pub ll: Image,
    pub lh: Image,
    pub hl: Image,
    pub hh: Image,
}

/// The sixteen sub-bands of a full 2-level decomposition.
///
/// Index order is depth-first over the level-1 bands: LL.LL, LL.LH, LL.HL,
/// LL.HH, LH.LL, ..., HH.HH. The order is part of the model format; voting
/// weights are indexed by it.
#[derive(Debug, Clone)]
pub struct SubbandSet {
    subbands: Vec<Image>,
}

impl SubbandSet {
    pub fn subbands(&self) -> &[Image] {
        &self.subbands
    }

    pub fn get(&self, index: usize) -> &Image {
        &self.subbands[index]
    }

    /// Human-readable label for a sub-band index, e.g. `"LH.HL"`.
    pub fn label(index: usize) -> String {
        const NAMES: [&str; 4] = ["LL", "LH", "HL", "HH"];
        format!("{}.{}", NAMES[(index / 4) % 4], NAMES[index % 4])
    }
}

/// One level of the periodized 1D transform.
///
/// `low[i] = sum_k lp[k] * x[(2i+k) mod n]`, likewise for `high`.
fn forward_1d(signal: &[f64], filter: &WaveletFilter, low: &mut [f64], high: &mut [f64]) {
    let n = signal.len();
    let half = n / 2;
    let lp = &filter.lowpass;
    let hp = &filter.highpass;
    for i in 0..half {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (k, (&l, &h)) in lp.iter().zip(hp.iter()).enumerate() {
            let x = signal[(2 * i + k) % n];
            lo += l * x;
            hi += h * x;
        }
        low[i] = lo;
        high[i] = hi;
    }
}

/// Transpose of [`forward_1d`]; exact inverse for orthonormal filters.
fn inverse_1d(low: &[f64], high: &[f64], filter: &WaveletFilter, signal: &mut [f64]) {
    let n = signal.len();
    signal.fill(0.0);
    let lp = &filter.lowpass;
    let hp = &filter.highpass;
    for i in 0..low.len() {
        for (k, (&l, &h)) in lp.iter().zip(hp.iter()).enumerate() {
            signal[(2 * i + k) % n] += low[i] * l + high[i] * h;
        }
    }
}

/// Single-level 2D DWT: rows first, then columns of each half.
pub fn dwt2(img: &Image, filter: &WaveletFilter) -> Result<Bands, WaveletError> {
    let (w, h) = (img.width, img.height);
    if w % 2 != 0 || h % 2 != 0 {
        return Err(WaveletError::OddDimensions {
            width: w,
            height: h,
        });
    }
    let (hw, hh) = (w / 2, h / 2);

    // Row pass: left half carries row-lowpass, right half row-highpass.
    let mut row_low = vec![0.0; hw * h];
    let mut row_high = vec![0.0; hw * h];
    let mut lo_buf = vec![0.0; hw];
    let mut hi_buf = vec![0.0; hw];
    for y in 0..h {
        let row = &img.pixels[y * w..(y + 1) * w];
        forward_1d(row, filter, &mut lo_buf, &mut hi_buf);
        row_low[y * hw..(y + 1) * hw].copy_from_slice(&lo_buf);
        row_high[y * hw..(y + 1) * hw].copy_from_slice(&hi_buf);
    }

    // Column pass over both halves.
    let mut ll = vec![0.0; hw * hh];
    let mut lh = vec![0.0; hw * hh];
    let mut hl = vec![0.0; hw * hh];
    let mut hh_band = vec![0.0; hw * hh];
    let mut col = vec![0.0; h];
    let mut lo_col = vec![0.0; hh];
    let mut hi_col = vec![0.0; hh];
    for x in 0..hw {
        for y in 0..h {
            col[y] = row_low[y * hw + x];
        }
        forward_1d(&col, filter, &mut lo_col, &mut hi_col);
        for y in 0..hh {
            ll[y * hw + x] = lo_col[y];
            lh[y * hw + x] = hi_col[y];
        }
        for y in 0..h {
            col[y] = row_high[y * hw + x];
        }
        forward_1d(&col, filter, &mut lo_col, &mut hi_col);
        for y in 0..hh {
            hl[y * hw + x] = lo_col[y];
            hh_band[y * hw + x] = hi_col[y];
        }
    }

    let make = |pixels| Image {
        width: hw,
        height: hh,
        pixels,
    };
    Ok(Bands {
        ll: make(ll),
        lh: make(lh),
        hl: make(hl),
        hh: make(hh_band),
    })
}

/// Inverse of [`dwt2`]: columns first, then rows.
pub fn idwt2(bands: &Bands, filter: &WaveletFilter) -> Result<Image, WaveletError> {
    let (hw, hh) = (bands.ll.width, bands.ll.height);
    for b in [&bands.lh, &bands.hl, &bands.hh] {
        if b.width != hw || b.height != hh {
            return Err(WaveletError::MismatchedBands(hw, hh, b.width, b.height));
        }
    }
    let (w, h) = (hw * 2, hh * 2);

    // Undo the column pass.
    let mut row_low = vec![0.0; hw * h];
    let mut row_high = vec![0.0; hw * h];
    let mut lo_col = vec![0.0; hh];
    let mut hi_col = vec![0.0; hh];
    let mut col = vec![0.0; h];
    for x in 0..hw {
        for y in 0..hh {
            lo_col[y] = bands.ll.pixels[y * hw + x];
            hi_col[y] = bands.lh.pixels[y * hw + x];
        }
        inverse_1d(&lo_col, &hi_col, filter, &mut col);
        for y in 0..h {
            row_low[y * hw + x] = col[y];
        }
        for y in 0..hh {
            lo_col[y] = bands.hl.pixels[y * hw + x];
            hi_col[y] = bands.hh.pixels[y * hw + x];
        }
        inverse_1d(&lo_col, &hi_col, filter, &mut col);
        for y in 0..h {
            row_high[y * hw + x] = col[y];
        }
    }

    // Undo the row pass.
    let mut pixels = vec![0.0; w * h];
    let mut row = vec![0.0; w];
    for y in 0..h {
        inverse_1d(
            &row_low[y * hw..(y + 1) * hw],
            &row_high[y * hw..(y + 1) * hw],
            filter,
            &mut row,
        );
        pixels[y * w..(y + 1) * w].copy_from_slice(&row);
    }
    Ok(Image {
        width: w,
        height: h,
        pixels,
    })
}

/// Full 2-level decomposition: every level-1 band is decomposed again,
/// yielding sixteen sub-bands of size (W/4) x (H/4).
pub fn decompose_full_2level(
    img: &Image,
    filter: &WaveletFilter,
) -> Result<SubbandSet, WaveletError> {
    if img.width % 4 != 0 || img.height % 4 != 0 {
        return Err(WaveletError::NotDivisibleBy4 {
            width: img.width,
            height: img.height,
        });
    }
    let level1 = dwt2(img, filter)?;
    let mut subbands = Vec::with_capacity(16);
    for band in [&level1.ll, &level1.lh, &level1.hl, &level1.hh] {
        let level2 = dwt2(band, filter)?;
        subbands.push(level2.ll);
        subbands.push(level2.lh);
        subbands.push(level2.hl);
        subbands.push(level2.hh);
    }
    Ok(SubbandSet { subbands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_image(w: usize, h: usize, rng: &mut rng::Rng) -> Image {
        let pixels = (0..w * h).map(|_| rng::uniform(rng)).collect();
        Image::new(w, h, pixels).unwrap()
    }

    #[test]
    fn normalize_maps_endpoints() {
        let img = Image::constant(3, 3, 255.0);
        let out = img.normalize(0.0, 255.0).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 1.0));

        let img = Image::constant(3, 3, 0.0);
        let out = img.normalize(0.0, 255.0).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 0.0));

        let img = Image::new(2, 1, vec![-1.0, 1.0]).unwrap();
        let out = img.normalize(-1.0, 1.0).unwrap();
        assert_eq!(out.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn normalize_clamps_and_rejects_degenerate_range() {
        let img = Image::new(2, 1, vec![-5.0, 300.0]).unwrap();
        let out = img.normalize(0.0, 255.0).unwrap();
        assert_eq!(out.pixels(), &[0.0, 1.0]);
        assert!(matches!(
            Image::constant(2, 2, 1.0).normalize(3.0, 3.0),
            Err(WaveletError::DegenerateRange(_))
        ));
    }

    #[test]
    fn downsample_means_2x2_blocks() {
        let img = Image::new(2, 2, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let out = img.downsample_2x().unwrap();
        assert_eq!((out.width(), out.height()), (1, 1));
        assert_eq!(out.pixels(), &[4.0]);
    }

    #[test]
    fn downsample_constant_stays_constant() {
        let img = Image::constant(128, 128, 0.37);
        let out = img.downsample_2x().unwrap();
        assert_eq!((out.width(), out.height()), (64, 64));
        assert!(out.pixels().iter().all(|&p| (p - 0.37).abs() < 1e-15));
    }

    #[test]
    fn downsample_checkerboard_averages_to_half() {
        let pixels: Vec<f64> = (0..16)
            .map(|i| (((i % 4) + (i / 4)) % 2) as f64)
            .collect();
        let img = Image::new(4, 4, pixels).unwrap();
        let out = img.downsample_2x().unwrap();
        assert_eq!(out.pixels(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn downsample_rejects_odd_dimensions() {
        let img = Image::constant(3, 4, 0.0);
        assert!(matches!(
            img.downsample_2x(),
            Err(WaveletError::OddDimensions { .. })
        ));
    }

    #[test]
    fn flatten_is_row_major() {
        let img = Image::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(img.flatten(), vec![1.0, 2.0, 3.0, 4.0]);
        let one = Image::new(1, 1, vec![9.5]).unwrap();
        assert_eq!(one.flatten(), vec![9.5]);
        assert_eq!(Image::constant(16, 16, 0.0).flatten().len(), 256);
    }

    #[test]
    fn haar_filter_is_orthonormal() {
        let f = WaveletFilter::haar();
        let sq: f64 = f.lowpass().iter().map(|c| c * c).sum();
        assert!((sq - 1.0).abs() < 1e-12);
        let f = WaveletFilter::daubechies4();
        let sq: f64 = f.lowpass().iter().map(|c| c * c).sum();
        assert!((sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dwt2_constant_image() {
        let f = WaveletFilter::haar();
        let c = 0.8;
        let bands = dwt2(&Image::constant(8, 8, c), &f).unwrap();
        for p in bands.ll.pixels() {
            assert!((p - 2.0 * c).abs() < 1e-12, "LL gain must be 2");
        }
        for band in [&bands.lh, &bands.hl, &bands.hh] {
            assert!(band.pixels().iter().all(|&p| p.abs() < 1e-12));
        }
    }

    #[test]
    fn dwt2_single_block_ones() {
        let f = WaveletFilter::haar();
        let bands = dwt2(&Image::constant(2, 2, 1.0), &f).unwrap();
        assert!((bands.ll.pixels()[0] - 2.0).abs() < 1e-12);
        assert!(bands.lh.pixels()[0].abs() < 1e-12);
        assert!(bands.hl.pixels()[0].abs() < 1e-12);
        assert!(bands.hh.pixels()[0].abs() < 1e-12);
    }

    #[test]
    fn dwt2_impulse_block() {
        // [1,0;0,0] spreads 0.5 into every band.
        let f = WaveletFilter::haar();
        let img = Image::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let bands = dwt2(&img, &f).unwrap();
        for band in [&bands.ll, &bands.lh, &bands.hl, &bands.hh] {
            assert!((band.pixels()[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dwt2_rejects_odd_dims() {
        let f = WaveletFilter::haar();
        assert!(matches!(
            dwt2(&Image::constant(6, 5, 0.0), &f),
            Err(WaveletError::OddDimensions { .. })
        ));
    }

    #[test]
    fn idwt2_inverts_known_block() {
        let f = WaveletFilter::haar();
        let one = |v| Image::new(1, 1, vec![v]).unwrap();
        let bands = Bands {
            ll: one(2.0),
            lh: one(0.0),
            hl: one(0.0),
            hh: one(0.0),
        };
        let img = idwt2(&bands, &f).unwrap();
        for &p in img.pixels() {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn idwt2_zero_bands_zero_image() {
        let f = WaveletFilter::haar();
        let z = Image::constant(4, 4, 0.0);
        let bands = Bands {
            ll: z.clone(),
            lh: z.clone(),
            hl: z.clone(),
            hh: z,
        };
        let img = idwt2(&bands, &f).unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn idwt2_rejects_mismatched_bands() {
        let f = WaveletFilter::haar();
        let bands = Bands {
            ll: Image::constant(4, 4, 0.0),
            lh: Image::constant(4, 4, 0.0),
            hl: Image::constant(2, 4, 0.0),
            hh: Image::constant(4, 4, 0.0),
        };
        assert!(matches!(
            idwt2(&bands, &f),
            Err(WaveletError::MismatchedBands(..))
        ));
    }

    #[test]
    fn perfect_reconstruction_both_filters() {
        let mut r = rng::seeded(101);
        for filter in [WaveletFilter::haar(), WaveletFilter::daubechies4()] {
            for (w, h) in [(8, 8), (16, 12), (6, 10)] {
                let img = random_image(w, h, &mut r);
                let back = idwt2(&dwt2(&img, &filter).unwrap(), &filter).unwrap();
                for (a, b) in img.pixels().iter().zip(back.pixels()) {
                    assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
                }
            }
        }
    }

    #[test]
    fn full_2level_sizes_and_constant_content() {
        let f = WaveletFilter::haar();
        let set = decompose_full_2level(&Image::constant(64, 64, 1.0), &f).unwrap();
        assert_eq!(set.subbands().len(), 16);
        for b in set.subbands() {
            assert_eq!((b.width(), b.height()), (16, 16));
        }
        // Constant c: sub-band 0 is 4c, the rest vanish.
        let c = 0.3;
        let set = decompose_full_2level(&Image::constant(16, 16, c), &f).unwrap();
        for b in set.subbands() {
            assert_eq!((b.width(), b.height()), (4, 4));
        }
        assert!(set.get(0).pixels().iter().all(|&p| (p - 4.0 * c).abs() < 1e-12));
        for i in 1..16 {
            assert!(set.get(i).pixels().iter().all(|&p| p.abs() < 1e-12));
        }
    }

    #[test]
    fn full_2level_rejects_bad_dims() {
        let f = WaveletFilter::haar();
        assert!(matches!(
            decompose_full_2level(&Image::constant(10, 8, 0.0), &f),
            Err(WaveletError::NotDivisibleBy4 { .. })
        ));
    }

    #[test]
    fn subband_labels() {
        assert_eq!(SubbandSet::label(0), "LL.LL");
        assert_eq!(SubbandSet::label(5), "LH.LH");
        assert_eq!(SubbandSet::label(15), "HH.HH");
    }

    #[test]
    fn by_name_roundtrip_and_unknown() {
        assert_eq!(WaveletFilter::by_name("haar").unwrap().name(), "haar");
        assert_eq!(WaveletFilter::by_name("db4").unwrap().name(), "db4");
        assert!(matches!(
            WaveletFilter::by_name("sym8"),
            Err(WaveletError::UnknownFilter(_))
        ));
    }
}
