//! C ABI over the `aefi` crate: load a model bundle, score rows or raw
//! records, and compute AUC and confusion-matrix metrics.
//!
//! Every fallible function returns an [`AefiStatus`]. On failure a message is
//! kept per thread and can be read with [`aefi_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aefi::dataset::RawRecord;
use aefi::metrics::{auc, compute_metrics, ConfusionMatrix};
use aefi::service::{deserialize_model, load_bundle, ModelBundle};
use aefi::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AefiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed input: bad JSON, unknown field, bad level, missing value.
    Invalid = 3,
    UnsupportedVersion = 4,
    DimensionMismatch = 5,
    Io = 6,
    /// Metric undefined for the input, e.g. AUC with one class present.
    Undefined = 7,
    Internal = 8,
}

/// Opaque handle to a loaded model bundle.
pub struct AefiBundle {
    inner: ModelBundle,
}

/// Confusion-matrix metrics. Undefined values (zero denominators) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AefiMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub g_mean: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> AefiStatus {
    match err {
        Error::Version(_) => AefiStatus::UnsupportedVersion,
        Error::Dimension { .. } => AefiStatus::DimensionMismatch,
        Error::Io { .. } => AefiStatus::Io,
        Error::Metric(_) => AefiStatus::Undefined,
        e if e.is_validation() => AefiStatus::Invalid,
        _ => AefiStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (AefiStatus, String)>) -> AefiStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AefiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AefiStatus::Internal
        }
    }
}

fn lib(err: Error) -> (AefiStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (AefiStatus, String) {
    (AefiStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (AefiStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            AefiStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next `aefi_*` call on the same thread.
#[no_mangle]
pub extern "C" fn aefi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a bundle file. On success `*out` owns a handle to release with
/// [`aefi_bundle_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_load(
    path: *const c_char,
    out: *mut *mut AefiBundle,
) -> AefiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_str(path, "path")?;
        let inner = load_bundle(path).map_err(lib)?;
        *out = Box::into_raw(Box::new(AefiBundle { inner }));
        Ok(())
    })
}

/// Parses a bundle from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_from_json(
    json: *const c_char,
    out: *mut *mut AefiBundle,
) -> AefiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(json, "json")?;
        let inner = deserialize_model(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(AefiBundle { inner }));
        Ok(())
    })
}

/// # Safety
/// `bundle` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_free(bundle: *mut AefiBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Encoded feature dimension, or 0 for a null handle.
///
/// # Safety
/// `bundle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_dim(bundle: *const AefiBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.inner.model.dim())
}

/// Decision threshold, or NaN for a null handle.
///
/// # Safety
/// `bundle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_threshold(bundle: *const AefiBundle) -> f64 {
    bundle
        .as_ref()
        .map_or(f64::NAN, |b| b.inner.metadata.threshold)
}

/// Scores an already encoded row of `len` values.
///
/// # Safety
/// `bundle` must be a live handle, `row` must point to `len` readable
/// doubles and `score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_predict_row(
    bundle: *const AefiBundle,
    row: *const f64,
    len: usize,
    score: *mut f64,
) -> AefiStatus {
    guard(|| {
        let b = bundle.as_ref().ok_or_else(|| null("bundle"))?;
        if row.is_null() || score.is_null() {
            return Err(null(if row.is_null() { "row" } else { "score" }));
        }
        let row = std::slice::from_raw_parts(row, len);
        *score = b.inner.model.predict_score(row).map_err(lib)?;
        Ok(())
    })
}

/// Validates, encodes and scores a raw record given as a JSON object of
/// feature name to string (or null). `label` receives 1 when the score
/// reaches the bundle threshold, else 0; it may be null.
///
/// # Safety
/// `bundle` must be a live handle, `json` a NUL-terminated string, `score`
/// writable and `label` null or writable.
#[no_mangle]
pub unsafe extern "C" fn aefi_bundle_predict_record_json(
    bundle: *const AefiBundle,
    json: *const c_char,
    score: *mut f64,
    label: *mut i32,
) -> AefiStatus {
    guard(|| {
        let b = bundle.as_ref().ok_or_else(|| null("bundle"))?;
        if score.is_null() {
            return Err(null("score"));
        }
        let text = c_str(json, "json")?;
        let record: RawRecord = serde_json::from_str(text).map_err(|e| lib(e.into()))?;
        let s = b.inner.score_record(&record).map_err(lib)?;
        *score = s;
        if !label.is_null() {
            *label = i32::from(s >= b.inner.metadata.threshold);
        }
        Ok(())
    })
}

/// Rank AUC of `n` scores against 0/1 labels (1 is the positive class).
///
/// # Safety
/// `scores` and `labels` must point to `n` readable values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aefi_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> AefiStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return Err(null("scores/labels/out"));
        }
        let scores = std::slice::from_raw_parts(scores, n);
        let labels = std::slice::from_raw_parts(labels, n);
        *out = auc(scores, labels).map_err(lib)?;
        Ok(())
    })
}

/// Metrics for a confusion matrix with the positive class in the first row.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aefi_metrics(
    tp: u64,
    fn_: u64,
    fp: u64,
    tn: u64,
    out: *mut AefiMetrics,
) -> AefiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = compute_metrics(&ConfusionMatrix {
            tp,
            fn_,
            fp,
            tn,
            positive_class: 1,
        });
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = AefiMetrics {
            accuracy: v(m.accuracy),
            precision: v(m.precision),
            recall: v(m.acc_pos),
            specificity: v(m.acc_neg),
            f1: v(m.f1),
            g_mean: v(m.g_mean),
        };
        Ok(())
    })
}
