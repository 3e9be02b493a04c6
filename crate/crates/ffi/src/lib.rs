//! C ABI for the wavedbn classifier.
//!
//! Models are opaque handles created by [`wavedbn_model_open`] and
//! released with [`wavedbn_model_free`]. Every fallible call returns a
//! [`WavedbnStatus`]; on failure a thread-local message is available via
//! [`wavedbn_last_error`] until the next failing call on that thread.
//!
//! Pixel buffers are row-major `f64` grayscale in [0, 1], length
//! `width * height`, matching what the model was trained on.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;
use wavedbn::ensemble::{self, EnsembleModel, SUBBANDS};
use wavedbn::model_io;
use wavedbn::wavelet::{decompose_full_2level, Image, WaveletFilter};

/// Call outcome. Anything other than `Ok` leaves a message in
/// `wavedbn_last_error`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavedbnStatus {
    Ok = 0,
    /// A pointer was null or an argument was out of range.
    InvalidArgument = 1,
    /// The file could not be read or written.
    IoError = 2,
    /// The file exists but is not a valid model.
    ParseError = 3,
    /// Buffer or image dimensions do not match the model.
    DimensionMismatch = 4,
    /// Unexpected internal failure.
    InternalError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: WavedbnStatus, msg: &str) -> WavedbnStatus {
    set_error(msg);
    status
}

/// Message describing the most recent failure on this thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wavedbn_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wavedbn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque trained model.
pub struct WavedbnModel {
    inner: EnsembleModel,
}

/// Loads a model file produced by `wavedbn train`.
///
/// On success writes a handle into `out_model`; the caller owns it and
/// must release it with [`wavedbn_model_free`].
///
/// # Safety
/// `path` must point to a NUL-terminated string and `out_model` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_model_open(
    path: *const c_char,
    out_model: *mut *mut WavedbnModel,
) -> WavedbnStatus {
    if path.is_null() || out_model.is_null() {
        return fail(WavedbnStatus::InvalidArgument, "null pointer argument");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => Path::new(s),
        Err(_) => return fail(WavedbnStatus::InvalidArgument, "path is not valid UTF-8"),
    };
    match model_io::load_model(path) {
        Ok((inner, _)) => {
            *out_model = Box::into_raw(Box::new(WavedbnModel { inner }));
            WavedbnStatus::Ok
        }
        Err(e @ model_io::ModelIoError::Io { .. }) => fail(WavedbnStatus::IoError, &e.to_string()),
        Err(e) => fail(WavedbnStatus::ParseError, &e.to_string()),
    }
}

/// Releases a handle from [`wavedbn_model_open`]. Null is a no-op.
///
/// # Safety
/// `model` must be a pointer previously returned by
/// [`wavedbn_model_open`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_model_free(model: *mut WavedbnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes, or 0 when `model` is null.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_model_n_classes(model: *const WavedbnModel) -> u32 {
    model.as_ref().map_or(0, |m| m.inner.n_classes as u32)
}

/// Expected raw input dimensions (before the model's own downsampling).
///
/// # Safety
/// `model` must be a live handle; `out_width`/`out_height` writable.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_model_input_size(
    model: *const WavedbnModel,
    out_width: *mut u32,
    out_height: *mut u32,
) -> WavedbnStatus {
    let Some(m) = model.as_ref() else {
        return fail(WavedbnStatus::InvalidArgument, "model is null");
    };
    if out_width.is_null() || out_height.is_null() {
        return fail(WavedbnStatus::InvalidArgument, "null output pointer");
    }
    *out_width = m.inner.preprocess.input_width as u32;
    *out_height = m.inner.preprocess.input_height as u32;
    WavedbnStatus::Ok
}

/// Copies the sixteen voting weights into `out_weights`.
///
/// # Safety
/// `out_weights` must point to at least 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_model_weights(
    model: *const WavedbnModel,
    out_weights: *mut f64,
) -> WavedbnStatus {
    let Some(m) = model.as_ref() else {
        return fail(WavedbnStatus::InvalidArgument, "model is null");
    };
    if out_weights.is_null() {
        return fail(WavedbnStatus::InvalidArgument, "null output pointer");
    }
    ptr::copy_nonoverlapping(m.inner.weights.as_ptr(), out_weights, SUBBANDS);
    WavedbnStatus::Ok
}

unsafe fn image_from_raw(
    pixels: *const f64,
    len: usize,
    width: u32,
    height: u32,
) -> Result<Image, WavedbnStatus> {
    if pixels.is_null() {
        set_error("pixels is null");
        return Err(WavedbnStatus::InvalidArgument);
    }
    let (w, h) = (width as usize, height as usize);
    if len != w * h {
        set_error(&format!("pixel count {len} does not match {width}x{height}"));
        return Err(WavedbnStatus::DimensionMismatch);
    }
    let data = std::slice::from_raw_parts(pixels, len).to_vec();
    Image::new(w, h, data).map_err(|e| {
        set_error(&e.to_string());
        WavedbnStatus::InvalidArgument
    })
}

/// Classifies one image. Writes the winning class into `out_class`; the
/// optional `out_tally` (length `n_classes`) and `out_per_dbn` (length
/// 16) receive the vote mass per class and each DBN's prediction when
/// non-null.
///
/// # Safety
/// `model` must be a live handle, `pixels` must point to `pixel_count`
/// readable doubles, and the output pointers (when non-null) must be
/// writable with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_model_predict(
    model: *const WavedbnModel,
    pixels: *const f64,
    pixel_count: usize,
    width: u32,
    height: u32,
    out_class: *mut u32,
    out_tally: *mut f64,
    out_per_dbn: *mut u32,
) -> WavedbnStatus {
    let Some(m) = model.as_ref() else {
        return fail(WavedbnStatus::InvalidArgument, "model is null");
    };
    if out_class.is_null() {
        return fail(WavedbnStatus::InvalidArgument, "out_class is null");
    }
    let image = match image_from_raw(pixels, pixel_count, width, height) {
        Ok(img) => img,
        Err(status) => return status,
    };
    match ensemble::predict_ensemble(&m.inner, &image) {
        Ok(prediction) => {
            *out_class = prediction.predicted as u32;
            if !out_tally.is_null() {
                ptr::copy_nonoverlapping(
                    prediction.tally.tally.as_ptr(),
                    out_tally,
                    m.inner.n_classes,
                );
            }
            if !out_per_dbn.is_null() {
                for (j, &p) in prediction.per_dbn.iter().enumerate() {
                    *out_per_dbn.add(j) = p as u32;
                }
            }
            WavedbnStatus::Ok
        }
        Err(e @ ensemble::EnsembleError::DimensionMismatch { .. }) => {
            fail(WavedbnStatus::DimensionMismatch, &e.to_string())
        }
        Err(e) => fail(WavedbnStatus::InternalError, &e.to_string()),
    }
}

/// Full 2-level wavelet decomposition of a raw image.
///
/// Writes the sixteen quarter-resolution sub-bands, each of length
/// `(width/4) * (height/4)`, concatenated in the canonical order, into
/// `out_subbands` (total length `pixel_count`). `filter` selects "haar"
/// or "db4"; null means "haar".
///
/// # Safety
/// `pixels` must point to `pixel_count` readable doubles, `out_subbands`
/// to `pixel_count` writable doubles, and `filter` (when non-null) to a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wavedbn_decompose(
    pixels: *const f64,
    pixel_count: usize,
    width: u32,
    height: u32,
    filter: *const c_char,
    out_subbands: *mut f64,
) -> WavedbnStatus {
    if out_subbands.is_null() {
        return fail(WavedbnStatus::InvalidArgument, "out_subbands is null");
    }
    let filter_name = if filter.is_null() {
        "haar"
    } else {
        match CStr::from_ptr(filter).to_str() {
            Ok(s) => s,
            Err(_) => return fail(WavedbnStatus::InvalidArgument, "filter is not valid UTF-8"),
        }
    };
    let filter = match WaveletFilter::by_name(filter_name) {
        Ok(f) => f,
        Err(e) => return fail(WavedbnStatus::InvalidArgument, &e.to_string()),
    };
    let image = match image_from_raw(pixels, pixel_count, width, height) {
        Ok(img) => img,
        Err(status) => return status,
    };
    match decompose_full_2level(&image, &filter) {
        Ok(set) => {
            let band_len = pixel_count / 16;
            for (j, band) in set.subbands().iter().enumerate() {
                ptr::copy_nonoverlapping(
                    band.pixels().as_ptr(),
                    out_subbands.add(j * band_len),
                    band_len,
                );
            }
            WavedbnStatus::Ok
        }
        Err(e) => fail(WavedbnStatus::DimensionMismatch, &e.to_string()),
    }
}
