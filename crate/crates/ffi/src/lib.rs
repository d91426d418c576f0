//! C ABI over the `asymbell` library.
//!
//! Every fallible call returns an [`AsymbellStatus`] and writes its result
//! through an out pointer. On failure the message is kept per thread and can
//! be read with [`asymbell_last_error`]. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use asymbell::bounds::parseval_claim_check;
use asymbell::gf2kit::build_coset_table;
use asymbell::kvfactory::{
    build_asym_kv, eta_default, fourier_bob_transform, kv_explicit_strategy,
    kv_explicit_value_closed_form, LogBase,
};
use asymbell::scenario::json::{from_json_text, to_canonical_json, FunctionalFile};
use asymbell::scenario::{
    correlation_from_quantum, evaluate_functional, AsymmetricBellFunctional, BobSide, Correlation,
    QuantumStrategy,
};
use asymbell::solve::classical_bias_exact;
use asymbell::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymbellStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Precondition = 4,
    Resource = 5,
    Numerical = 6,
    Parse = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Asymmetric Bell functional handle.
pub struct AsymbellFunctional(AsymmetricBellFunctional);

/// Quantum strategy handle.
pub struct AsymbellStrategy(QuantumStrategy);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AsymbellParsevalResult {
    /// Largest `sum_b |Q(b|[y])|` over cosets.
    pub claim_lhs: f64,
    /// `n^{3/2}`.
    pub claim_rhs: f64,
    pub identity_lhs: f64,
    pub identity_rhs: f64,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> AsymbellStatus {
    match e {
        Error::Dimension(_) => AsymbellStatus::Dimension,
        Error::Resource(_) => AsymbellStatus::Resource,
        Error::Validation { .. } | Error::Usage(_) | Error::Mode(_) => {
            AsymbellStatus::InvalidArgument
        }
        Error::Precondition(_) => AsymbellStatus::Precondition,
        Error::Numerical(_) | Error::UndefinedRatio(_) => AsymbellStatus::Numerical,
        Error::Parse { .. } | Error::Json(_) => AsymbellStatus::Parse,
        Error::Io(_) => AsymbellStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Buffer(usize),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, records any failure and converts panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AsymbellStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            AsymbellStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            AsymbellStatus::NullPointer
        }
        Ok(Err(Fail::Buffer(needed))) => {
            set_error(format!("buffer too small, {needed} bytes needed"));
            AsymbellStatus::BufferTooSmall
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            AsymbellStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn input<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `text` plus a NUL into `buf`. `needed` always receives the full size.
unsafe fn write_c_string(
    text: &str,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> Result<(), Fail> {
    let size = text.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if cap < size || buf.is_null() {
        return Err(Fail::Buffer(size));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

fn log_base(code: u32) -> Result<LogBase, Fail> {
    match code {
        2 => Ok(LogBase::Two),
        0 => Ok(LogBase::E),
        other => Err(Fail::Lib(Error::Usage(format!(
            "log base code must be 2 or 0 (natural), got {other}"
        )))),
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn asymbell_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`. An empty
/// string means the last call succeeded. `needed` receives the size
/// including the NUL.
///
/// # Safety
/// `buf` must be writable for `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn asymbell_last_error(
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AsymbellStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match write_c_string(&msg, buf, cap, needed) {
        Ok(()) => AsymbellStatus::Ok,
        Err(_) => AsymbellStatus::BufferTooSmall,
    }
}

/// `1/2 - 1/log n`. `log_base_code` is 2 or 0 for the natural logarithm.
/// `degenerate` is set when the rate is 0.
///
/// # Safety
/// Out pointers must be valid; `degenerate` may be null.
#[no_mangle]
pub unsafe extern "C" fn asymbell_eta_default(
    n: u64,
    log_base_code: u32,
    eta: *mut f64,
    degenerate: *mut bool,
) -> AsymbellStatus {
    guard(|| {
        let out_eta = out(eta, "eta")?;
        let d = eta_default(n, log_base(log_base_code)?)?;
        *out_eta = d.value;
        if !degenerate.is_null() {
            *degenerate = d.degenerate;
        }
        Ok(())
    })
}

/// Closed-form winning probability of the explicit KV strategy at `n = 2^l`.
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_kv_explicit_value(
    l: u32,
    eta: f64,
    value: *mut f64,
) -> AsymbellStatus {
    guard(|| {
        *out(value, "value")? = kv_explicit_value_closed_form(l, eta)?;
        Ok(())
    })
}

/// Dense functional; `coeffs[(x * bob_inputs + y) * outputs + a]`.
///
/// # Safety
/// `coeffs` must hold `len` doubles; `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_functional_new(
    alice_inputs: usize,
    bob_inputs: usize,
    outputs: usize,
    coeffs: *const f64,
    len: usize,
    handle: *mut *mut AsymbellFunctional,
) -> AsymbellStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        let c = slice(coeffs, len, "coeffs")?.to_vec();
        let m = AsymmetricBellFunctional::dense(alice_inputs, bob_inputs, outputs, c)?;
        *h = Box::into_raw(Box::new(AsymbellFunctional(m)));
        Ok(())
    })
}

/// The asymmetric KV bias functional at `n = 2^l` with noise `eta`.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_functional_asym_kv(
    l: u32,
    eta: f64,
    handle: *mut *mut AsymbellFunctional,
) -> AsymbellStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        let g = build_asym_kv(l, eta)?;
        *h = Box::into_raw(Box::new(AsymbellFunctional(g.functional().clone())));
        Ok(())
    })
}

/// Parses the JSON functional format.
///
/// # Safety
/// `json` must be a NUL-terminated string; `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_functional_from_json(
    json: *const c_char,
    handle: *mut *mut AsymbellFunctional,
) -> AsymbellStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Error::Parse {
            offset: e.valid_up_to() as u64,
            message: "invalid UTF-8".into(),
        })?;
        let file: FunctionalFile = from_json_text(text)?;
        *h = Box::into_raw(Box::new(AsymbellFunctional(file.to_functional()?)));
        Ok(())
    })
}

/// Writes the canonical JSON form. With a short buffer the call fails with
/// `BufferTooSmall` and `needed` tells the required size.
///
/// # Safety
/// `handle` must come from this library; `buf` must be writable for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn asymbell_functional_to_json(
    handle: *const AsymbellFunctional,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AsymbellStatus {
    guard(|| {
        let m = &input(handle, "handle")?.0;
        let text = to_canonical_json(&FunctionalFile::from_functional(m, None)?, false)?;
        write_c_string(&text, buf, cap, needed)
    })
}

/// # Safety
/// Out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_functional_shape(
    handle: *const AsymbellFunctional,
    alice_inputs: *mut usize,
    bob_inputs: *mut usize,
    outputs: *mut usize,
) -> AsymbellStatus {
    guard(|| {
        let m = &input(handle, "handle")?.0;
        *out(alice_inputs, "alice_inputs")? = m.alice_inputs();
        *out(bob_inputs, "bob_inputs")? = m.bob_inputs();
        *out(outputs, "outputs")? = m.outputs();
        Ok(())
    })
}

/// # Safety
/// `handle` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn asymbell_functional_free(handle: *mut AsymbellFunctional) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Classical bound by full enumeration of Alice's maps. Fails with
/// `Resource` when the enumeration is over budget.
///
/// # Safety
/// `handle` must come from this library; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_classical_bias_exact(
    handle: *const AsymbellFunctional,
    value: *mut f64,
) -> AsymbellStatus {
    guard(|| {
        let m = &input(handle, "handle")?.0;
        let v = out(value, "value")?;
        *v = classical_bias_exact(m)?.value;
        Ok(())
    })
}

/// `<M, E>` for a correlation laid out like the coefficients.
///
/// # Safety
/// `correlation` must hold `len` doubles; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_evaluate(
    handle: *const AsymbellFunctional,
    correlation: *const f64,
    len: usize,
    value: *mut f64,
) -> AsymbellStatus {
    guard(|| {
        let m = &input(handle, "handle")?.0;
        let v = out(value, "value")?;
        let e = Correlation::new(
            m.alice_inputs(),
            m.bob_inputs(),
            m.outputs(),
            slice(correlation, len, "correlation")?.to_vec(),
        )?;
        *v = evaluate_functional(m, &e)?;
        Ok(())
    })
}

/// The explicit KV strategy at `n = 2^l` with Bob's POVMs replaced by the
/// Fourier-transformed observables, ready for the asymmetric KV functional.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_strategy_kv_transformed(
    l: u32,
    handle: *mut *mut AsymbellStrategy,
) -> AsymbellStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        let s = kv_explicit_strategy(l)?;
        let table = build_coset_table(l)?;
        let obs = fourier_bob_transform(
            s.bob_povms().expect("explicit strategy has POVM Bob"),
            &table,
        )?;
        *h = Box::into_raw(Box::new(AsymbellStrategy(
            s.with_bob(BobSide::Observables(obs))?,
        )));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn asymbell_strategy_free(handle: *mut AsymbellStrategy) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `<M, E>` for the correlation the strategy produces.
///
/// # Safety
/// Handles must come from this library; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_evaluate_strategy(
    functional: *const AsymbellFunctional,
    strategy: *const AsymbellStrategy,
    value: *mut f64,
) -> AsymbellStatus {
    guard(|| {
        let m = &input(functional, "functional")?.0;
        let s = &input(strategy, "strategy")?.0;
        let v = out(value, "value")?;
        *v = evaluate_functional(m, &correlation_from_quantum(s)?)?;
        Ok(())
    })
}

/// Parseval claim for one map `E([y], k)`, indexed `y * n + k` with
/// `n = 2^l`.
///
/// # Safety
/// `e` must hold `len` doubles; `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn asymbell_parseval_check(
    l: u32,
    e: *const f64,
    len: usize,
    result: *mut AsymbellParsevalResult,
) -> AsymbellStatus {
    guard(|| {
        let r = out(result, "result")?;
        let table = build_coset_table(l)?;
        let c = parseval_claim_check(slice(e, len, "e")?, &table)?;
        *r = AsymbellParsevalResult {
            claim_lhs: c.claim.lhs,
            claim_rhs: c.claim.rhs,
            identity_lhs: c.identity.lhs,
            identity_rhs: c.identity.rhs,
            passed: c.passed(),
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let mut buf = [0 as c_char; 512];
        let mut needed = 0;
        unsafe {
            assert_eq!(
                asymbell_last_error(buf.as_mut_ptr(), buf.len(), &mut needed),
                AsymbellStatus::Ok
            );
            CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
        }
    }

    #[test]
    fn version_is_package_version() {
        let v = unsafe { CStr::from_ptr(asymbell_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn eta_default_and_degenerate() {
        let (mut eta, mut deg) = (0.0, false);
        unsafe {
            assert_eq!(
                asymbell_eta_default(8, 2, &mut eta, &mut deg),
                AsymbellStatus::Ok
            );
            assert!((eta - 1.0 / 6.0).abs() < 1e-15 && !deg);
            assert_eq!(
                asymbell_eta_default(4, 2, &mut eta, &mut deg),
                AsymbellStatus::Ok
            );
            assert!(deg);
            assert_eq!(
                asymbell_eta_default(6, 2, &mut eta, ptr::null_mut()),
                AsymbellStatus::InvalidArgument
            );
            assert_eq!(
                asymbell_eta_default(8, 7, &mut eta, ptr::null_mut()),
                AsymbellStatus::InvalidArgument
            );
            assert_eq!(
                asymbell_eta_default(8, 2, ptr::null_mut(), ptr::null_mut()),
                AsymbellStatus::NullPointer
            );
        }
        assert_eq!(last_error(), "eta is null");
    }

    #[test]
    fn asym_kv_round_trip() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(
                asymbell_functional_asym_kv(2, 0.25, &mut m),
                AsymbellStatus::Ok
            );
            let mut bias = 0.0;
            assert_eq!(
                asymbell_classical_bias_exact(m, &mut bias),
                AsymbellStatus::Ok
            );
            assert_eq!(bias, 0.5625);

            let mut s = ptr::null_mut();
            assert_eq!(
                asymbell_strategy_kv_transformed(2, &mut s),
                AsymbellStatus::Ok
            );
            let mut q = 0.0;
            assert_eq!(asymbell_evaluate_strategy(m, s, &mut q), AsymbellStatus::Ok);
            assert!((q - 7.0 / 16.0).abs() < 1e-12);
            let mut closed = 0.0;
            assert_eq!(
                asymbell_kv_explicit_value(2, 0.25, &mut closed),
                AsymbellStatus::Ok
            );
            assert!((q - closed).abs() < 1e-12);

            let mut needed = 0;
            assert_eq!(
                asymbell_functional_to_json(m, ptr::null_mut(), 0, &mut needed),
                AsymbellStatus::BufferTooSmall
            );
            let mut buf = vec![0 as c_char; needed];
            assert_eq!(
                asymbell_functional_to_json(m, buf.as_mut_ptr(), needed, &mut needed),
                AsymbellStatus::Ok
            );
            let mut back = ptr::null_mut();
            assert_eq!(
                asymbell_functional_from_json(buf.as_ptr(), &mut back),
                AsymbellStatus::Ok
            );
            let (mut n, mut np, mut k) = (0, 0, 0);
            assert_eq!(
                asymbell_functional_shape(back, &mut n, &mut np, &mut k),
                AsymbellStatus::Ok
            );
            assert_eq!((n, np, k), (4, 16, 4));
            let mut again = 0.0;
            assert_eq!(
                asymbell_classical_bias_exact(back, &mut again),
                AsymbellStatus::Ok
            );
            assert_eq!(again, bias);

            asymbell_functional_free(back);
            asymbell_functional_free(m);
            asymbell_strategy_free(s);
            asymbell_functional_free(ptr::null_mut());
        }
    }

    #[test]
    fn dense_functional_and_evaluate() {
        // CHSH-like 2x2 functional with two outputs.
        let c = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(
                asymbell_functional_new(2, 2, 2, c.as_ptr(), c.len(), &mut m),
                AsymbellStatus::Ok
            );
            let e = [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
            let mut v = f64::NAN;
            assert_eq!(
                asymbell_evaluate(m, e.as_ptr(), e.len(), &mut v),
                AsymbellStatus::Ok
            );
            assert_eq!(v, 0.0);
            assert_eq!(
                asymbell_evaluate(m, e.as_ptr(), 3, &mut v),
                AsymbellStatus::Dimension
            );
            asymbell_functional_free(m);

            let mut bad = ptr::null_mut();
            assert_ne!(
                asymbell_functional_new(2, 2, 2, c.as_ptr(), 7, &mut bad),
                AsymbellStatus::Ok
            );
            assert!(bad.is_null());
            assert!(!last_error().is_empty());
        }
    }

    #[test]
    fn parseval_through_ffi() {
        let e = [1.0; 16];
        let mut r = AsymbellParsevalResult::default();
        unsafe {
            assert_eq!(
                asymbell_parseval_check(2, e.as_ptr(), e.len(), &mut r),
                AsymbellStatus::Ok
            );
        }
        assert!(r.passed);
        assert_eq!(r.claim_rhs, 8.0);
        assert!((r.identity_lhs - r.identity_rhs).abs() < 1e-9);
        let bad = [2.0; 16];
        let status = unsafe { asymbell_parseval_check(2, bad.as_ptr(), bad.len(), &mut r) };
        assert_ne!(status, AsymbellStatus::Ok);
        assert!(last_error().contains("outside [-1, 1]"), "{}", last_error());
    }

    #[test]
    fn malformed_json_is_parse_error() {
        let text = c"{\"N\": 1,";
        let mut h = ptr::null_mut();
        let s = unsafe { asymbell_functional_from_json(text.as_ptr(), &mut h) };
        assert_eq!(s, AsymbellStatus::Parse);
        assert!(h.is_null());
    }
}
