//! C ABI over the prosocial core: metric panels for canonical conversation
//! records and the trajectory model.
//!
//! Every fallible call returns a [`ProsocialStatus`]; on failure the
//! message is available from [`prosocial_last_error`] on the same thread.
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;

use prosocial_core::corpus::Conversation;
use prosocial_core::metrics::count_laughter;
use prosocial_core::resources::Resources;
use prosocial_core::scorers::{NgramLogisticModel, ToxicityConfig, ToxicityScorer};
use prosocial_core::trajectory::{assemble_panel, fit_trajectory, MetricPanel, PanelContext, TrajectoryModel};
use prosocial_core::trajectory::{METRIC_COUNT, METRIC_NAMES};
use prosocial_core::Error;

/// Number of metrics in a panel; value and mask buffers have this length.
pub const PROSOCIAL_METRIC_COUNT: usize = 22;

const _: () = assert!(PROSOCIAL_METRIC_COUNT == METRIC_COUNT);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProsocialStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed record, bad argument or wrong size.
    InvalidInput = 3,
    Io = 4,
    Config = 5,
    /// Model and input disagree on the metric order.
    Manifest = 6,
    /// Fitting failed or a statistic is undefined.
    Numeric = 7,
    Toxicity = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProsocialClassifier {
    Information = 0,
    Mentoring = 1,
}

/// Scorers and lexicons for panel computation. Toxicity is always scored
/// offline with the bundled fallback lexicon.
pub struct ProsocialContext {
    inner: PanelContext,
}

pub struct ProsocialTrajectory {
    inner: TrajectoryModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ProsocialStatus {
    match e {
        Error::Parse { .. } | Error::Schema { .. } | Error::Argument(_) | Error::Size(_) => ProsocialStatus::InvalidInput,
        Error::Io { .. } => ProsocialStatus::Io,
        Error::Config(_) => ProsocialStatus::Config,
        Error::Manifest { .. } => ProsocialStatus::Manifest,
        Error::Client { .. } | Error::Protocol(_) | Error::Transport(_) => ProsocialStatus::Toxicity,
        Error::Panel { source, .. } => status_of(source),
        _ => ProsocialStatus::Numeric,
    }
}

struct Fail(ProsocialStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ProsocialStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ProsocialStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ProsocialStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(ProsocialStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(ProsocialStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn prosocial_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Name of metric `index` as a static string, or NULL when out of range.
#[no_mangle]
pub extern "C" fn prosocial_metric_name(index: usize) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| METRIC_NAMES.iter().map(|n| CString::new(*n).expect("plain name")).collect());
    names.get(index).map_or(std::ptr::null(), |c| c.as_ptr())
}

/// Creates a context with the bundled resources and no classifiers.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn prosocial_context_new(out: *mut *mut ProsocialContext) -> ProsocialStatus {
    guard(|| {
        non_null(out, "out")?;
        let res = Resources::bundled();
        let cfg = ToxicityConfig {
            offline: true,
            ..ToxicityConfig::default()
        };
        let toxicity = ToxicityScorer::new(cfg, res.toxicity_fallback.clone())?;
        let ctx = Box::new(ProsocialContext {
            inner: PanelContext::with_defaults(res, toxicity),
        });
        *out = Box::into_raw(ctx);
        Ok(())
    })
}

/// Loads an n-gram classifier model file into the context.
///
/// # Safety
/// `ctx` must come from [`prosocial_context_new`]; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn prosocial_context_set_classifier(
    ctx: *mut ProsocialContext,
    kind: ProsocialClassifier,
    path: *const c_char,
) -> ProsocialStatus {
    guard(|| {
        non_null(ctx, "ctx")?;
        let model = NgramLogisticModel::load(&PathBuf::from(text(path, "path")?))?;
        let ctx = &mut (*ctx).inner;
        match kind {
            ProsocialClassifier::Information => ctx.information = Some(model),
            ProsocialClassifier::Mentoring => ctx.mentoring = Some(model),
        }
        Ok(())
    })
}

/// # Safety
/// `ctx` must come from [`prosocial_context_new`] and not be used after
/// this call. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn prosocial_context_free(ctx: *mut ProsocialContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Computes the panel of one canonical conversation record (a single JSON
/// line as written by `prosocial ingest`). Writes
/// [`PROSOCIAL_METRIC_COUNT`] values and mask bytes; a mask byte of 0
/// marks an undefined metric.
///
/// # Safety
/// `ctx` must be a live context, `conversation_json` a NUL-terminated
/// string, and both output buffers must hold `PROSOCIAL_METRIC_COUNT`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn prosocial_panel_compute(
    ctx: *const ProsocialContext,
    conversation_json: *const c_char,
    values_out: *mut f64,
    defined_out: *mut u8,
) -> ProsocialStatus {
    guard(|| {
        non_null(ctx, "ctx")?;
        non_null(values_out, "values_out")?;
        non_null(defined_out, "defined_out")?;
        let conv = Conversation::from_line(text(conversation_json, "conversation_json")?, 1)?;
        let panel = assemble_panel(&conv, &(*ctx).inner)?;
        let values = std::slice::from_raw_parts_mut(values_out, METRIC_COUNT);
        let defined = std::slice::from_raw_parts_mut(defined_out, METRIC_COUNT);
        values.copy_from_slice(&panel.values);
        for (d, &b) in defined.iter_mut().zip(&panel.defined) {
            *d = b as u8;
        }
        Ok(())
    })
}

/// Laughter matches in `text_in`.
///
/// # Safety
/// `text_in` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prosocial_count_laughter(text_in: *const c_char, out: *mut usize) -> ProsocialStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = count_laughter(text(text_in, "text")?);
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prosocial_trajectory_load(
    path: *const c_char,
    out: *mut *mut ProsocialTrajectory,
) -> ProsocialStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = TrajectoryModel::load(&PathBuf::from(text(path, "path")?))?;
        *out = Box::into_raw(Box::new(ProsocialTrajectory { inner }));
        Ok(())
    })
}

/// Fits the trajectory model on `rows` panels stored row-major in `values`
/// (`rows * PROSOCIAL_METRIC_COUNT` doubles).
///
/// # Safety
/// `values` must hold `rows * PROSOCIAL_METRIC_COUNT` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn prosocial_trajectory_fit(
    values: *const f64,
    rows: usize,
    out: *mut *mut ProsocialTrajectory,
) -> ProsocialStatus {
    guard(|| {
        non_null(values, "values")?;
        non_null(out, "out")?;
        let len = rows
            .checked_mul(METRIC_COUNT)
            .ok_or_else(|| Fail(ProsocialStatus::InvalidInput, format!("{rows} rows overflow")))?;
        let flat = std::slice::from_raw_parts(values, len);
        let panels = flat
            .chunks(METRIC_COUNT)
            .map(|r| MetricPanel::new(r.to_vec(), vec![true; METRIC_COUNT]))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = fit_trajectory(&panels)?;
        *out = Box::into_raw(Box::new(ProsocialTrajectory { inner }));
        Ok(())
    })
}

/// Trajectory (first-component score) of one panel.
///
/// # Safety
/// `model` must be live, `values` must hold `PROSOCIAL_METRIC_COUNT`
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prosocial_trajectory_score(
    model: *const ProsocialTrajectory,
    values: *const f64,
    out: *mut f64,
) -> ProsocialStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(values, "values")?;
        non_null(out, "out")?;
        let v = std::slice::from_raw_parts(values, METRIC_COUNT);
        *out = (*model).inner.project(v, 0);
        Ok(())
    })
}

/// Variance explained by the first `k` components.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prosocial_trajectory_explained_variance(
    model: *const ProsocialTrajectory,
    k: usize,
    out: *mut f64,
) -> ProsocialStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        *out = (*model).inner.explained_variance(k)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn prosocial_trajectory_save(
    model: *const ProsocialTrajectory,
    path: *const c_char,
) -> ProsocialStatus {
    guard(|| {
        non_null(model, "model")?;
        (*model).inner.save(&PathBuf::from(text(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used after this call.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn prosocial_trajectory_free(model: *mut ProsocialTrajectory) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
