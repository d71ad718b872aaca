//! C ABI over `string_spectra`.
//!
//! Operators live behind the opaque `SsOperator` handle. Every fallible call
//! returns an `SsStatus`; the message of the most recent failure on the calling
//! thread is available through `ss_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use string_spectra::coefficients::{parse_coefficient_spec, CoefficientKind};
use string_spectra::discretization::{kernel_dimensions, BoundaryCondition, DiscreteOperatorSet};
use string_spectra::error::Error;
use string_spectra::report::RunConfig;
use string_spectra::spectral::{self, Spectrum};
use string_spectra::trace;
use string_spectra::verify::{run_command, Command};

/// Result codes. `SS_OK` is zero; every other value is an error.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsStatus {
    SsOk = 0,
    SsNullPointer = 1,
    SsInvalidUtf8 = 2,
    SsInvalidArgument = 3,
    SsConfig = 4,
    SsNumerical = 5,
    SsBufferTooSmall = 6,
    SsIo = 7,
    SsChecksFailed = 8,
    SsPanic = 9,
}

/// Discretized operator set with a lazily computed spectrum.
pub struct SsOperator {
    ops: DiscreteOperatorSet,
    spectrum: Option<Spectrum>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::Syntax { .. }
        | Error::Partition(_)
        | Error::NonPositive { .. }
        | Error::OutOfDomain(_)
        | Error::Factor(_)
        | Error::GridTooSmall(..)
        | Error::Boundary(_)
        | Error::Unsupported(_) => SsStatus::SsInvalidArgument,
        Error::Config { .. } => SsStatus::SsConfig,
        Error::Io(_) => SsStatus::SsIo,
        _ => SsStatus::SsNumerical,
    }
}

fn fail(status: SsStatus, msg: impl Into<String>) -> SsStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), SsStatus>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::SsOk,
        Ok(Err(s)) => s,
        Err(_) => fail(SsStatus::SsPanic, "panic inside string_spectra"),
    }
}

fn lib<T>(r: string_spectra::error::Result<T>) -> Result<T, SsStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// # Safety
/// `p` must be null or a valid nul-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, SsStatus> {
    if p.is_null() {
        return Err(fail(SsStatus::SsNullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SsStatus::SsInvalidUtf8, format!("{what} is not UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), SsStatus> {
    if p.is_null() {
        Err(fail(SsStatus::SsNullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf`.
///
/// Writes at most `len` bytes including the terminating nul and returns the
/// full message length without the nul, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ss_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Builds an operator on `n` cells.
///
/// `rho` and `alpha` are coefficient texts such as `"const 1"` or
/// `"poly 1 0.5"`; `bc` is `max`, `min`, `zero0`, `zero1` or `omega:RE,IM`.
/// On success `*out` owns a handle to release with `ss_operator_free`.
///
/// # Safety
/// String arguments must be valid nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_operator_new(
    n: usize,
    rho: *const c_char,
    alpha: *const c_char,
    bc: *const c_char,
    out: *mut *mut SsOperator,
) -> SsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let rho = lib(parse_coefficient_spec(text(rho, "rho")?, CoefficientKind::Density))?;
        let alpha = lib(parse_coefficient_spec(text(alpha, "alpha")?, CoefficientKind::Damping))?;
        let bc: BoundaryCondition = lib(text(bc, "bc")?.parse())?;
        let ops = lib(DiscreteOperatorSet::build(n, &rho, &alpha, bc))?;
        *out = Box::into_raw(Box::new(SsOperator { ops, spectrum: None }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `op` must be null or a handle from `ss_operator_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_operator_free(op: *mut SsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Dimension of the Dirac operator, nodes plus cells.
///
/// # Safety
/// `op` must be a live handle and `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_operator_dim(op: *const SsOperator, dim: *mut usize) -> SsStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(dim, "dim")?;
        *dim = (*op).ops.dim_dirac();
        Ok(())
    })
}

/// Kernel dimensions of `T`, `T*` and `D`.
///
/// # Safety
/// `op` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_kernel_dims(
    op: *const SsOperator,
    ker_t: *mut usize,
    ker_tstar: *mut usize,
    ker_d: *mut usize,
) -> SsStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(ker_t, "ker_t")?;
        non_null(ker_tstar, "ker_tstar")?;
        non_null(ker_d, "ker_d")?;
        let k = lib(kernel_dimensions(&(*op).ops))?;
        *ker_t = k.ker_t;
        *ker_tstar = k.ker_tstar;
        *ker_d = k.ker_d;
        Ok(())
    })
}

/// Eigenvalues of `D+B`, sorted by modulus then argument.
///
/// Always stores the eigenvalue count in `*len`. Returns `SS_BUFFER_TOO_SMALL`
/// without writing when `capacity` is smaller; pass `capacity = 0` to query.
///
/// # Safety
/// `op` must be a live handle not used concurrently; `re` and `im` must hold
/// `capacity` doubles each; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum(
    op: *mut SsOperator,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> SsStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(len, "len")?;
        let h = &mut *op;
        if h.spectrum.is_none() {
            h.spectrum = Some(lib(spectral::eigen_dirac_with(&h.ops, false))?);
        }
        let ev = &h.spectrum.as_ref().expect("just computed").eigenvalues;
        *len = ev.len();
        if capacity < ev.len() {
            return Err(fail(SsStatus::SsBufferTooSmall, format!("need {} slots, have {capacity}", ev.len())));
        }
        non_null(re, "re")?;
        non_null(im, "im")?;
        for (k, l) in ev.iter().enumerate() {
            *re.add(k) = l.re;
            *im.add(k) = l.im;
        }
        Ok(())
    })
}

/// Trace coefficient `t_{2n}` by the Neumann recursion.
///
/// # Safety
/// `op` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_trace_coefficient(op: *const SsOperator, n: usize, value: *mut f64) -> SsStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(value, "value")?;
        *value = lib(trace::trace_coefficient(n, &(*op).ops))?;
        Ok(())
    })
}

fn command(name: &str) -> Option<Command> {
    [
        Command::Spectrum,
        Command::Greens,
        Command::Trace,
        Command::ResolventCheck,
        Command::SusyCheck,
        Command::Asymptotics,
        Command::Riesz,
        Command::VerifyAll,
    ]
    .into_iter()
    .find(|c| c.name() == name)
}

/// Runs a verification command with a JSON configuration (`"{}"` for defaults).
///
/// On return `*report_json` holds the report, to release with `ss_string_free`,
/// or null on error. Returns `SS_CHECKS_FAILED` when the report has failures.
///
/// # Safety
/// `name` and `config_json` must be valid strings; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_run_command(
    name: *const c_char,
    config_json: *const c_char,
    report_json: *mut *mut c_char,
) -> SsStatus {
    let mut failed = false;
    let status = guard(|| {
        non_null(report_json, "report_json")?;
        *report_json = ptr::null_mut();
        let name = text(name, "name")?;
        let cmd = command(name).ok_or_else(|| fail(SsStatus::SsInvalidArgument, format!("unknown command {name}")))?;
        let cfg = lib(RunConfig::from_json(text(config_json, "config_json")?))?;
        let rep = lib(run_command(cmd, &cfg))?;
        failed = !rep.passed();
        *report_json = CString::new(rep.to_json()).expect("JSON has no nul").into_raw();
        Ok(())
    });
    if status == SsStatus::SsOk && failed {
        fail(SsStatus::SsChecksFailed, "one or more checks failed")
    } else {
        status
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from `ss_run_command` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
