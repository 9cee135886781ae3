//! C ABI for the gencase workbench.
//!
//! Functions and inverters are opaque handles created by registry name and
//! released with the matching `_free`. Every call returns a [`GcStatus`];
//! on failure the message is kept per thread and can be read with
//! [`gc_last_error`]. Bit strings cross the boundary as NUL-terminated
//! ASCII `'0'`/`'1'` strings, leftmost bit first.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gencase::harness::{self, DeltaEstimate};
use gencase::{candidates, reductions, strata, BitString, CandidateFunction, Error, InverterProgram};
use num_traits::ToPrimitive;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownName = 3,
    CapExceeded = 4,
    Domain = 5,
    BufferTooSmall = 6,
    Runtime = 7,
    Panic = 8,
}

/// Candidate function handle.
pub struct GcCandidate(CandidateFunction);

/// Inverter program handle.
pub struct GcInverter(InverterProgram);

/// A per-input success probability. For exact results `num/den` is the
/// reduced fraction and `half_width` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GcDelta {
    pub value: f64,
    pub half_width: f64,
    pub exact: bool,
    pub num: u64,
    pub den: u64,
    pub trials: u64,
    pub success: u64,
    pub wrong_answer: u64,
    pub fuel_exhausted: u64,
    pub mean_steps: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GcPlan {
    pub k: u64,
    pub epsilon: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.as_bytes().to_vec());
}

fn status_of(e: &Error) -> GcStatus {
    match e {
        e if e.is_cap_violation() => GcStatus::CapExceeded,
        Error::CoinLengthOverflow { .. } => GcStatus::CapExceeded,
        Error::UnknownName { .. } => GcStatus::UnknownName,
        Error::Domain { .. } => GcStatus::Domain,
        Error::InvalidArgument(_) | Error::Precondition(_) | Error::TapeLength { .. } => GcStatus::InvalidArgument,
        _ => GcStatus::Runtime,
    }
}

struct Fail(GcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> GcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(GcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(GcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn bits_arg(p: *const c_char, what: &str) -> Result<BitString, Fail> {
    str_arg(p, what)?.parse().map_err(|_| Fail(GcStatus::InvalidArgument, format!("{what} is not a 0/1 string")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies `s` and a NUL into `buf`, or fails when `buf_len` is too small.
unsafe fn write_str(s: &str, buf: *mut c_char, buf_len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if s.len() + 1 > buf_len {
        return Err(Fail(GcStatus::BufferTooSmall, format!("need {} bytes, got {buf_len}", s.len() + 1)));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

fn delta_out(d: &DeltaEstimate) -> GcDelta {
    let (num, den) = d
        .delta
        .exact()
        .map(|r| (r.numer().to_u64().unwrap_or(0), r.denom().to_u64().unwrap_or(0)))
        .unwrap_or((0, 0));
    GcDelta {
        value: d.delta.as_f64(),
        half_width: d.delta.half_width(),
        exact: d.delta.is_exact(),
        num,
        den,
        trials: d.trials,
        success: d.histogram.success,
        wrong_answer: d.histogram.wrong_answer,
        fuel_exhausted: d.histogram.fuel_exhausted,
        mean_steps: d.mean_steps,
    }
}

/// Copies the calling thread's last error message (NUL-terminated, possibly
/// truncated) into `buf` and returns its full length in bytes.
///
/// # Safety
/// `buf` must be valid for `buf_len` bytes, or null when `buf_len` is 0.
#[no_mangle]
pub unsafe extern "C" fn gc_last_error(buf: *mut c_char, buf_len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && buf_len > 0 {
            let n = msg.len().min(buf_len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a candidate function by registry name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_candidate_new(name: *const c_char, out: *mut *mut GcCandidate) -> GcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let f = candidates::function(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(GcCandidate(f)));
        Ok(())
    })
}

/// Releases a candidate handle. Null is ignored.
///
/// # Safety
/// `f` must come from [`gc_candidate_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_candidate_free(f: *mut GcCandidate) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Output length `m(n)`.
///
/// # Safety
/// `f` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_candidate_output_len(f: *const GcCandidate, n: usize, out_len: *mut usize) -> GcStatus {
    guard(|| {
        let f = &handle(f, "candidate")?.0;
        let out_len = out_arg(out_len, "out_len")?;
        if !f.accepts(n) {
            return Err(Error::Domain { name: f.name().to_string(), n }.into());
        }
        *out_len = f.output_len(n);
        Ok(())
    })
}

/// Evaluates `f(x)` into `buf` and stores the step count in `steps` (may be null).
///
/// # Safety
/// `f` must be a live handle, `x` NUL-terminated, `buf` valid for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gc_evaluate(f: *const GcCandidate, x: *const c_char, buf: *mut c_char, buf_len: usize, steps: *mut u64) -> GcStatus {
    guard(|| {
        let f = &handle(f, "candidate")?.0;
        let (y, used) = harness::evaluate(f, &bits_arg(x, "x")?)?;
        write_str(&y.to_string(), buf, buf_len)?;
        if let Some(s) = steps.as_mut() {
            *s = used;
        }
        Ok(())
    })
}

/// Creates an inverter by registry name. Amplifiers named
/// `amplify:<c>:<inner>` verify against `f`, or against `identity` when
/// `f` is null.
///
/// # Safety
/// `name` must be NUL-terminated, `f` null or a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_inverter_new(name: *const c_char, f: *const GcCandidate, out: *mut *mut GcInverter) -> GcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let name = str_arg(name, "name")?;
        let a = match f.as_ref() {
            Some(f) => candidates::inverter_for(name, &f.0)?,
            None => candidates::inverter(name)?,
        };
        *out = Box::into_raw(Box::new(GcInverter(a)));
        Ok(())
    })
}

/// Releases an inverter handle. Null is ignored.
///
/// # Safety
/// `a` must come from [`gc_inverter_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_inverter_free(a: *mut GcInverter) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Coin-tape length `t(n)`.
///
/// # Safety
/// `a` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_inverter_coin_len(a: *const GcInverter, n: usize, out_len: *mut usize) -> GcStatus {
    guard(|| {
        let a = &handle(a, "inverter")?.0;
        *out_arg(out_len, "out_len")? = a.coin_len(n)?;
        Ok(())
    })
}

/// Exact `δ_{A,f}(x)` by enumerating all `2^{t(n)}` tapes.
///
/// # Safety
/// Handles must be live, `x` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_exact_delta(
    a: *const GcInverter,
    f: *const GcCandidate,
    x: *const c_char,
    fuel: u64,
    tape_cap: usize,
    out: *mut GcDelta,
) -> GcStatus {
    guard(|| {
        let (a, f) = (&handle(a, "inverter")?.0, &handle(f, "candidate")?.0);
        let out = out_arg(out, "out")?;
        *out = delta_out(&harness::exact_delta(a, f, &bits_arg(x, "x")?, fuel, tape_cap)?);
        Ok(())
    })
}

/// Monte Carlo `δ_{A,f}(x)` over `trials` seeded tapes.
///
/// # Safety
/// Handles must be live, `x` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_estimate_delta(
    a: *const GcInverter,
    f: *const GcCandidate,
    x: *const c_char,
    trials: u64,
    fuel: u64,
    seed: u64,
    confidence: f64,
    out: *mut GcDelta,
) -> GcStatus {
    guard(|| {
        let (a, f) = (&handle(a, "inverter")?.0, &handle(f, "candidate")?.0);
        let out = out_arg(out, "out")?;
        *out = delta_out(&harness::estimate_delta(a, f, &bits_arg(x, "x")?, trials, fuel, seed, confidence)?);
        Ok(())
    })
}

/// Amplifier plan `k = ⌈n^{3c}⌉`, `ε = 2^{-(n+2)/2}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_chernoff_plan(n: usize, c: f64, out: *mut GcPlan) -> GcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let p = reductions::chernoff_plan(n, c)?;
        *out = GcPlan { k: p.k, epsilon: p.epsilon };
        Ok(())
    })
}

/// Exact density `|R ∩ I_n| / 2^n` of a named reference set, as a reduced
/// fraction and a double. Any of the outputs may be null.
///
/// # Safety
/// `name` must be NUL-terminated; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_reference_density(name: *const c_char, n: usize, cap: usize, num: *mut u64, den: *mut u64, value: *mut f64) -> GcStatus {
    guard(|| {
        let set = strata::InputSetSpec::reference(str_arg(name, "name")?)?;
        let d = strata::exact_density(&set, n, cap)?;
        let r = d.value.exact().expect("exact density");
        if let Some(p) = num.as_mut() {
            *p = r.numer().to_u64().unwrap_or(0);
        }
        if let Some(p) = den.as_mut() {
            *p = r.denom().to_u64().unwrap_or(0);
        }
        if let Some(p) = value.as_mut() {
            *p = d.value.as_f64();
        }
        Ok(())
    })
}
