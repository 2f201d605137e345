//! C ABI for operad-forge.
//!
//! Objects are opaque handles released with the matching `*_free`. Every call
//! returns an [`OfStatus`]; on failure the message is available from
//! [`of_last_error`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use operad_forge::graded::GradedVectorSpace;
use operad_forge::hochschild::{hh_cohomology, hkr_oracle, TruncatedPolyAlgebra};
use operad_forge::koszul::koszulity_check;
use operad_forge::operad::{builtin, PresentationFile, QuadraticPresentation};
use operad_forge::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Usage = 3,
    MalformedInput = 4,
    BoundExceeded = 5,
    /// a mathematical check failed (exit code 2 of the CLI)
    CheckFailed = 6,
    /// an internal error or a caught panic
    Internal = 7,
}

/// A quadratic operad presentation.
pub struct OfPresentation {
    inner: QuadraticPresentation,
}

/// A rendered command report.
pub struct OfReport {
    exit_code: i32,
    stdout: CString,
    stderr: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OfStatus {
    match e {
        Error::Usage(_) => OfStatus::Usage,
        Error::Parse(_) | Error::MalformedPresentation(_) | Error::NonEquivariantRelations | Error::InvalidPermutation(_) => {
            OfStatus::MalformedInput
        }
        Error::ArityOverflow { .. } | Error::BoundExceeded { .. } | Error::DegreeOverflow { .. } => OfStatus::BoundExceeded,
        _ => OfStatus::CheckFailed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (OfStatus, String)>) -> OfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OfStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            OfStatus::Internal
        }
    }
}

fn lift(e: Error) -> (OfStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (OfStatus, String)> {
    if p.is_null() {
        return Err((OfStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (OfStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

fn null_out() -> (OfStatus, String) {
    (OfStatus::NullArgument, "null output pointer".into())
}

/// Message of the last failed call on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn of_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn of_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builtin presentation: "com", "ass", "lie" or "gerst".
///
/// # Safety
/// `name` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn of_presentation_builtin(name: *const c_char, out: *mut *mut OfPresentation) -> OfStatus {
    guard(|| {
        let name = read_str(name)?;
        if out.is_null() {
            return Err(null_out());
        }
        let p = builtin(name).ok_or_else(|| (OfStatus::Usage, format!("unknown preset {name:?}")))?;
        *out = Box::into_raw(Box::new(OfPresentation { inner: p }));
        Ok(())
    })
}

/// Presentation from the JSON file format.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn of_presentation_from_json(json: *const c_char, out: *mut *mut OfPresentation) -> OfStatus {
    guard(|| {
        let text = read_str(json)?;
        if out.is_null() {
            return Err(null_out());
        }
        let p = PresentationFile::from_json(text).and_then(|f| f.into_presentation()).map_err(lift)?;
        *out = Box::into_raw(Box::new(OfPresentation { inner: p }));
        Ok(())
    })
}

/// Koszul dual operad of `p` as a new handle.
///
/// # Safety
/// `p` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn of_presentation_koszul_dual(p: *const OfPresentation, out: *mut *mut OfPresentation) -> OfStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return Err(null_out());
        }
        let d = (*p).inner.koszul_dual();
        *out = Box::into_raw(Box::new(OfPresentation { inner: d }));
        Ok(())
    })
}

/// Dimension of the arity-`n` component of the presented operad.
///
/// # Safety
/// `p` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn of_presentation_component_dim(p: *const OfPresentation, n: usize, out: *mut usize) -> OfStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return Err(null_out());
        }
        *out = (*p).inner.component(n).map_err(lift)?.component.dim();
        Ok(())
    })
}

/// Whether the Koszul complex on `dim_v` generators of degree 0 is acyclic
/// in every arity `1..=max_arity`.
///
/// # Safety
/// `p` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn of_koszulity_check(
    p: *const OfPresentation,
    dim_v: usize,
    max_arity: usize,
    out: *mut bool,
) -> OfStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return Err(null_out());
        }
        let v = GradedVectorSpace::concentrated(dim_v, 0);
        let r = koszulity_check(&(*p).inner, &v, max_arity).map_err(lift)?;
        *out = r.values().all(|a| a.acyclic);
        Ok(())
    })
}

/// Release a presentation handle. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn of_presentation_free(p: *mut OfPresentation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Stabilized `dim HH^n_w(k[x_1..x_vars])` at degree bound `degree`, and the HKR count.
///
/// # Safety
/// `dim` and `hkr` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn of_hochschild_dim(
    vars: usize,
    degree: i64,
    arity: usize,
    weight: i64,
    dim: *mut usize,
    hkr: *mut usize,
) -> OfStatus {
    guard(|| {
        if dim.is_null() || hkr.is_null() {
            return Err(null_out());
        }
        let a = TruncatedPolyAlgebra::new(vars, degree);
        let (d, _) = hh_cohomology(&a, arity, weight).map_err(lift)?;
        *dim = d;
        *hkr = hkr_oracle(vars, arity, weight);
        Ok(())
    })
}

/// Run a CLI command (`argv` without the program name). The report handle is
/// produced even when the command fails; `exit_code` follows the CLI contract.
///
/// # Safety
/// `argv` must hold `argc` nul-terminated strings; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn of_run(argv: *const *const c_char, argc: usize, out: *mut *mut OfReport) -> OfStatus {
    guard(|| {
        if out.is_null() || (argv.is_null() && argc > 0) {
            return Err(null_out());
        }
        let mut args = Vec::with_capacity(argc);
        for i in 0..argc {
            args.push(read_str(*argv.add(i))?.to_string());
        }
        let (code, stdout, stderr) = operad_forge::cli::execute(&args);
        let c = |s: String| CString::new(s.replace('\0', " ")).expect("no interior nul");
        *out = Box::into_raw(Box::new(OfReport { exit_code: code, stdout: c(stdout), stderr: c(stderr) }));
        Ok(())
    })
}

/// The JSON report (empty when the command failed before producing one).
///
/// # Safety
/// `r` must be a live handle; the string lives as long as the handle.
#[no_mangle]
pub unsafe extern "C" fn of_report_json(r: *const OfReport) -> *const c_char {
    if r.is_null() {
        return ptr::null();
    }
    (*r).stdout.as_ptr()
}

/// Diagnostics written by the command.
///
/// # Safety
/// `r` must be a live handle; the string lives as long as the handle.
#[no_mangle]
pub unsafe extern "C" fn of_report_diagnostics(r: *const OfReport) -> *const c_char {
    if r.is_null() {
        return ptr::null();
    }
    (*r).stderr.as_ptr()
}

/// 0 = all checks pass, 1 = usage/input error, 2 = a mathematical check failed; −1 for null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn of_report_exit_code(r: *const OfReport) -> i32 {
    if r.is_null() {
        return -1;
    }
    (*r).exit_code
}

/// Release a report handle. Null is ignored.
///
/// # Safety
/// `r` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn of_report_free(r: *mut OfReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
