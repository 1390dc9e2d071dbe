//! C interface to `selci`.
//!
//! Every entry point returns a [`SelciStatus`]; on failure a message is
//! available from [`selci_last_error_message`] on the calling thread.
//! Handles are created by the library and released with the matching
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use selci::dgp::{generate, make_beta, Dataset, DgpConfig, Setting};
use selci::inference::{CovMode, Flag, Method, Side};
use selci::pipeline::{compute_intervals, Analysis, CiOptions};
use selci::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelciStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelciSide {
    One = 0,
    Two = 1,
}

pub const SELCI_METHOD_T: u32 = 1;
pub const SELCI_METHOD_IV: u32 = 2;
pub const SELCI_METHOD_PS: u32 = 4;
pub const SELCI_METHOD_HR: u32 = 8;
pub const SELCI_METHOD_ALL: u32 = 15;

pub const SELCI_FLAG_NON_CONVERGED: u32 = 1;
pub const SELCI_FLAG_NORMAL_FALLBACK: u32 = 2;
pub const SELCI_FLAG_GRID_EDGE: u32 = 4;
pub const SELCI_FLAG_EMPTY_REGION: u32 = 8;
pub const SELCI_FLAG_WIDENED_TRUNCATION: u32 = 16;
pub const SELCI_FLAG_INFEASIBLE_TRUNCATION: u32 = 32;
pub const SELCI_FLAG_FAILED: u32 = 64;

/// Interval options. Obtain defaults from [`selci_ci_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelciCiOptions {
    pub alpha: f64,
    /// A `SelciSide` value.
    pub side: u32,
    /// Bitwise OR of `SELCI_METHOD_*`.
    pub methods: u32,
    /// Bootstrap replicates for the hybrid method.
    pub b: usize,
    pub kmax: usize,
    /// Bartlett lag of the variance estimate.
    pub q: usize,
    pub seed: u64,
    /// Noise scale for the selective baseline; estimated when not positive.
    pub ps_sigma: f64,
}

/// One interval. Column indices are zero-based.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelciInterval {
    pub j: usize,
    /// One `SELCI_METHOD_*` bit.
    pub method: u32,
    pub lower: f64,
    pub upper: f64,
    /// Zero-based position of `j` in the selection order.
    pub selected_order: usize,
    /// Bitwise OR of `SELCI_FLAG_*`.
    pub flags: u32,
}

/// Opaque dataset handle.
pub struct SelciDataset {
    inner: Dataset,
}

/// Opaque result of an interval computation.
pub struct SelciReport {
    analysis: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Failure = (SelciStatus, String);

fn status_of(e: &Error) -> SelciStatus {
    match e {
        Error::InvalidConfig(_) | Error::Parse { .. } | Error::Dimension(_) => SelciStatus::InvalidArgument,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => SelciStatus::Io,
        _ => SelciStatus::Numerical,
    }
}

fn lib_err(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> Failure {
    (SelciStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SelciStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (SelciStatus::Ok, String::new()),
        Ok(Err(failure)) => failure,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (SelciStatus::Panic, format!("panic: {msg}"))
        }
    };
    set_last_error(&msg);
    status
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| (SelciStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn emit_dataset(out: *mut *mut SelciDataset, ds: Dataset) {
    *out = Box::into_raw(Box::new(SelciDataset { inner: ds }));
}

fn methods_from_mask(mask: u32) -> Result<Vec<Method>, Failure> {
    if mask == 0 || mask & !SELCI_METHOD_ALL != 0 {
        return Err((SelciStatus::InvalidArgument, format!("invalid method mask {mask:#x}")));
    }
    Ok(Method::ALL.into_iter().filter(|m| mask & method_bit(*m) != 0).collect())
}

fn method_bit(m: Method) -> u32 {
    match m {
        Method::T => SELCI_METHOD_T,
        Method::Iv => SELCI_METHOD_IV,
        Method::Ps => SELCI_METHOD_PS,
        Method::Hr => SELCI_METHOD_HR,
    }
}

fn flag_bit(f: Flag) -> u32 {
    match f {
        Flag::NonConverged => SELCI_FLAG_NON_CONVERGED,
        Flag::NormalFallback => SELCI_FLAG_NORMAL_FALLBACK,
        Flag::GridEdge => SELCI_FLAG_GRID_EDGE,
        Flag::EmptyRegion => SELCI_FLAG_EMPTY_REGION,
        Flag::WidenedTruncation => SELCI_FLAG_WIDENED_TRUNCATION,
        Flag::InfeasibleTruncation => SELCI_FLAG_INFEASIBLE_TRUNCATION,
        Flag::Failed => SELCI_FLAG_FAILED,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn selci_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn selci_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a dataset from a response of length `n` and a row-major `n × p`
/// design.
///
/// # Safety
/// `y` must point to `n` doubles, `x` to `n * p` doubles, and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn selci_dataset_from_row_major(
    y: *const f64,
    x: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut SelciDataset,
) -> SelciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if y.is_null() || x.is_null() {
            return Err(null("data"));
        }
        let cells = n.checked_mul(p).ok_or((SelciStatus::OutOfRange, "n * p overflows".to_string()))?;
        let y = std::slice::from_raw_parts(y, n);
        let x = std::slice::from_raw_parts(x, cells);
        let ds = Dataset::new(DMatrix::from_row_slice(n, p, x), DVector::from_column_slice(y)).map_err(lib_err)?;
        emit_dataset(out, ds);
        Ok(())
    })
}

/// Simulates a dataset from one of the named designs (`lai`, `garch`, `ar`,
/// `iid`, `mvn`).
///
/// # Safety
/// `setting` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn selci_dataset_generate(
    setting: *const c_char,
    n: usize,
    p: usize,
    seed: u64,
    out: *mut *mut SelciDataset,
) -> SelciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let setting: Setting = c_str(setting, "setting")?.parse().map_err(lib_err)?;
        let beta = make_beta(p).map_err(lib_err)?;
        let ds = generate(&DgpConfig::new(setting, n, p, seed), &beta).map_err(lib_err)?;
        emit_dataset(out, ds);
        Ok(())
    })
}

/// Reads a CSV with header `y,x1,...,xp`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn selci_dataset_read_csv(path: *const c_char, out: *mut *mut SelciDataset) -> SelciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = c_str(path, "path")?;
        let ds = selci::io::read_dataset_file(std::path::Path::new(path)).map_err(lib_err)?;
        emit_dataset(out, ds);
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live handle; `n` and `p` may be null.
#[no_mangle]
pub unsafe extern "C" fn selci_dataset_dims(ds: *const SelciDataset, n: *mut usize, p: *mut usize) -> SelciStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if let Some(n) = n.as_mut() {
            *n = ds.inner.n();
        }
        if let Some(p) = p.as_mut() {
            *p = ds.inner.p();
        }
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn selci_dataset_free(ds: *mut SelciDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

#[no_mangle]
pub extern "C" fn selci_ci_options_default() -> SelciCiOptions {
    let d = CiOptions::default();
    SelciCiOptions {
        alpha: d.alpha,
        side: SelciSide::One as u32,
        methods: SELCI_METHOD_ALL,
        b: d.b,
        kmax: d.kmax,
        q: 1,
        seed: d.seed,
        ps_sigma: 0.0,
    }
}

/// Selects columns and computes intervals for every selected column and
/// requested method.
///
/// # Safety
/// `ds` and `opts` must be valid pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn selci_compute_intervals(
    ds: *const SelciDataset,
    opts: *const SelciCiOptions,
    out: *mut *mut SelciReport,
) -> SelciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let o = opts.as_ref().ok_or_else(|| null("options"))?;
        let options = CiOptions {
            alpha: o.alpha,
            side: match o.side {
                s if s == SelciSide::One as u32 => Side::One,
                s if s == SelciSide::Two as u32 => Side::Two,
                s => return Err((SelciStatus::InvalidArgument, format!("invalid side {s}"))),
            },
            methods: methods_from_mask(o.methods)?,
            cov_mode: CovMode::Hac { q: o.q },
            b: o.b,
            kmax: o.kmax,
            seed: o.seed,
            ps_sigma: (o.ps_sigma > 0.0).then_some(o.ps_sigma),
            ..Default::default()
        };
        let analysis = compute_intervals(&ds.inner, &options).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SelciReport { analysis }));
        Ok(())
    })
}

/// Number of intervals in `report`; zero for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn selci_report_len(report: *const SelciReport) -> usize {
    report.as_ref().map_or(0, |r| r.analysis.reports.len())
}

/// Estimated number of factors, or zero for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn selci_report_k_hat(report: *const SelciReport) -> usize {
    report.as_ref().map_or(0, |r| r.analysis.k_hat)
}

/// Copies interval `index` into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn selci_report_get(
    report: *const SelciReport,
    index: usize,
    out: *mut SelciInterval,
) -> SelciStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let reports = &report.analysis.reports;
        let r = reports.get(index).ok_or_else(|| {
            (SelciStatus::OutOfRange, format!("index {index} out of range for {} intervals", reports.len()))
        })?;
        let order = report.analysis.selection.j_hat.iter().position(|&k| k == r.j).unwrap_or(usize::MAX);
        *out = SelciInterval {
            j: r.j,
            method: method_bit(r.method),
            lower: r.lower,
            upper: r.upper,
            selected_order: order,
            flags: r.flags.iter().fold(0, |acc, f| acc | flag_bit(*f)),
        };
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn selci_report_free(report: *mut SelciReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
