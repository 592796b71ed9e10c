//! C interface to the `arkc` integrators.
//!
//! Problems are opaque handles created by `arkc_problem_*` and released with
//! `arkc_problem_free`. Every fallible call returns an [`ArkcStatus`]; on
//! failure `arkc_last_error_message` holds a description for the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use arkc::adaptive::{integrate_adaptive, select_damping, AdaptiveConfig};
use arkc::integrators::{integrate_fixed, Scheme, SplitOdeProblem};
use arkc::problems::{BurgersReaction1D, LinearAdvectionDiffusion1D};
use arkc::stability::{eval_r1, eval_r2, scan_region, verify_table_entry, RegionScheme};
use arkc::{Error, IntegrationReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArkcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Divergence = 3,
    StepFailed = 4,
    StageCapExceeded = 5,
    ReduceStep = 6,
    ReferenceUnattainable = 7,
    Io = 8,
    BufferSize = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArkcScheme {
    Cheb1 = 0,
    Rkc = 1,
    Ad1 = 2,
    Arkc = 3,
}

impl From<ArkcScheme> for Scheme {
    fn from(s: ArkcScheme) -> Self {
        match s {
            ArkcScheme::Cheb1 => Scheme::Cheb1,
            ArkcScheme::Rkc => Scheme::Rkc,
            ArkcScheme::Ad1 => Scheme::Ad1,
            ArkcScheme::Arkc => Scheme::Arkc,
        }
    }
}

/// Vector field callback: write `f(y)` into `out`, both of length `n`.
pub type ArkcField = Option<unsafe extern "C" fn(y: *const f64, out: *mut f64, n: usize, user_data: *mut c_void)>;

/// Opaque problem handle.
pub struct ArkcProblem {
    problem: SplitOdeProblem,
    initial: Option<Vec<f64>>,
    t_end: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ArkcStats {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub fd_evals: u64,
    pub fa_evals: u64,
    pub s_max: u64,
    pub final_time: f64,
    /// Nonzero when `max_steps` was reached before the end time.
    pub incomplete: c_int,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArkcAdaptiveOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: f64,
    pub t0: f64,
    pub t_end: f64,
    pub max_steps: u64,
    /// `Arkc` or `Rkc`.
    pub scheme: ArkcScheme,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> ArkcStatus {
    match e {
        Error::InvalidArgument(_) => ArkcStatus::InvalidArgument,
        Error::Divergence { .. } => ArkcStatus::Divergence,
        Error::StepFailed { .. } => ArkcStatus::StepFailed,
        Error::StageCapExceeded(_) => ArkcStatus::StageCapExceeded,
        Error::ReduceStep { .. } => ArkcStatus::ReduceStep,
        Error::ReferenceUnattainable(_) => ArkcStatus::ReferenceUnattainable,
        Error::Io(_) => ArkcStatus::Io,
    }
}

struct Fail(ArkcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ArkcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ArkcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArkcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            ArkcStatus::Panic
        }
    }
}

unsafe fn handle<'a>(p: *const ArkcProblem) -> Result<&'a ArkcProblem, Fail> {
    p.as_ref().ok_or_else(|| null("problem"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn emit(out: *mut *mut ArkcProblem, value: ArkcProblem) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn fill_stats(stats: *mut ArkcStats, r: &IntegrationReport) {
    if let Some(s) = unsafe { stats.as_mut() } {
        *s = ArkcStats {
            steps_accepted: r.steps_accepted as u64,
            steps_rejected: r.steps_rejected as u64,
            fd_evals: r.fd_evals,
            fa_evals: r.fa_evals,
            s_max: r.s_max as u64,
            final_time: r.final_time,
            incomplete: r.incomplete as c_int,
        };
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn arkc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty if none). Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn arkc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Periodic linear advection-diffusion on `n_cells` cells with speed `a`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn arkc_problem_linear_ad(n_cells: usize, a: f64, out: *mut *mut ArkcProblem) -> ArkcStatus {
    guard(|| {
        let p = LinearAdvectionDiffusion1D::new(n_cells, a)?;
        emit(out, ArkcProblem { problem: p.build(), initial: Some(p.initial()), t_end: 0.5 })
    })
}

/// Burgers equation with reaction term on `n_cells` cells.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn arkc_problem_burgers(n_cells: usize, out: *mut *mut ArkcProblem) -> ArkcStatus {
    guard(|| {
        let p = BurgersReaction1D::new(n_cells)?;
        emit(out, ArkcProblem { problem: p.build(), initial: Some(p.initial()), t_end: 0.5 })
    })
}

#[derive(Clone, Copy)]
struct Callback {
    f: unsafe extern "C" fn(*const f64, *mut f64, usize, *mut c_void),
    user_data: *mut c_void,
}

// The caller promises the callbacks may be invoked from any thread.
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

impl Callback {
    fn call(&self, y: &[f64], out: &mut [f64]) {
        unsafe { (self.f)(y.as_ptr(), out.as_mut_ptr(), y.len(), self.user_data) }
    }
}

/// User-defined split problem. `advection_reaction` may be NULL. `linear`
/// nonzero means spectral radii are estimated only once.
///
/// # Safety
/// The callbacks must be safe to call with `user_data` for the lifetime of
/// the handle, from any thread; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_problem_custom(
    dimension: usize,
    diffusion: ArkcField,
    advection_reaction: ArkcField,
    user_data: *mut c_void,
    linear: c_int,
    out: *mut *mut ArkcProblem,
) -> ArkcStatus {
    guard(|| {
        if dimension == 0 {
            return Err(Fail(ArkcStatus::InvalidArgument, "dimension must be positive".into()));
        }
        let fd = Callback { f: diffusion.ok_or_else(|| null("diffusion"))?, user_data };
        let mut problem = SplitOdeProblem::new(dimension, move |y, o| fd.call(y, o)).linear(linear != 0);
        if let Some(f) = advection_reaction {
            let fa = Callback { f, user_data };
            problem = problem.with_advection_reaction(move |y, o| fa.call(y, o));
        }
        emit(out, ArkcProblem { problem, initial: None, t_end: 1.0 })
    })
}

/// # Safety
/// `problem` must be a handle from `arkc_problem_*` or NULL.
#[no_mangle]
pub unsafe extern "C" fn arkc_problem_dimension(problem: *const ArkcProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.dimension())
}

/// Copy the benchmark initial state into `y0` (length `n`). Custom problems
/// have none and return `InvalidArgument`.
///
/// # Safety
/// `problem` must be a valid handle and `y0` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_problem_initial_state(problem: *const ArkcProblem, y0: *mut f64, n: usize) -> ArkcStatus {
    guard(|| {
        let p = handle(problem)?;
        let init = p
            .initial
            .as_ref()
            .ok_or_else(|| Fail(ArkcStatus::InvalidArgument, "custom problems have no built-in initial state".into()))?;
        if n != init.len() {
            return Err(Fail(ArkcStatus::BufferSize, format!("buffer length {n}, expected {}", init.len())));
        }
        slice_mut(y0, n, "y0")?.copy_from_slice(init);
        Ok(())
    })
}

/// Release a handle. NULL is ignored.
///
/// # Safety
/// `problem` must come from `arkc_problem_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn arkc_problem_free(problem: *mut ArkcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Defaults: `atol = rtol = tol`, `h_init = 1e-3`, span `[0, t_end]`
/// (`t_end` is 1/2 for the benchmarks, 1 for custom problems).
///
/// # Safety
/// `problem` must be a valid handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn arkc_adaptive_options_default(problem: *const ArkcProblem, tol: f64) -> ArkcAdaptiveOptions {
    let t_end = problem.as_ref().map_or(1.0, |p| p.t_end);
    let c = AdaptiveConfig::with_tolerance(tol, (0.0, t_end));
    ArkcAdaptiveOptions {
        atol: c.atol,
        rtol: c.rtol,
        h_init: c.h_init,
        t0: 0.0,
        t_end,
        max_steps: c.max_steps as u64,
        scheme: ArkcScheme::Arkc,
    }
}

/// Adaptive integration from `y0` to `options.t_end`; the final state goes
/// to `y_out`. `stats` may be NULL.
///
/// # Safety
/// Pointers must be valid; `y0` and `y_out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn arkc_integrate_adaptive(
    problem: *const ArkcProblem,
    y0: *const f64,
    n: usize,
    options: *const ArkcAdaptiveOptions,
    y_out: *mut f64,
    stats: *mut ArkcStats,
) -> ArkcStatus {
    guard(|| {
        let p = handle(problem)?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        check_len(p, n)?;
        let mut cfg = AdaptiveConfig::with_tolerance(o.rtol, (o.t0, o.t_end));
        cfg.atol = o.atol;
        cfg.h_init = o.h_init;
        cfg.max_steps = usize::try_from(o.max_steps).unwrap_or(usize::MAX);
        cfg.scheme = o.scheme.into();
        let r = integrate_adaptive(&p.problem, slice(y0, n, "y0")?, &cfg)?;
        slice_mut(y_out, n, "y_out")?.copy_from_slice(&r.final_state);
        fill_stats(stats, &r);
        Ok(())
    })
}

/// `n_steps` equal steps of `scheme` with fixed stage count and damping.
///
/// # Safety
/// Pointers must be valid; `y0` and `y_out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn arkc_integrate_fixed(
    problem: *const ArkcProblem,
    y0: *const f64,
    n: usize,
    t0: f64,
    t_end: f64,
    n_steps: usize,
    scheme: ArkcScheme,
    stages: usize,
    eta: f64,
    y_out: *mut f64,
    stats: *mut ArkcStats,
) -> ArkcStatus {
    guard(|| {
        let p = handle(problem)?;
        check_len(p, n)?;
        let r = integrate_fixed(&p.problem, slice(y0, n, "y0")?, (t0, t_end), n_steps, scheme.into(), stages, eta)?;
        slice_mut(y_out, n, "y_out")?.copy_from_slice(&r.final_state);
        fill_stats(stats, &r);
        Ok(())
    })
}

fn check_len(p: &ArkcProblem, n: usize) -> Result<(), Fail> {
    if n == p.problem.dimension() {
        Ok(())
    } else {
        Err(Fail(ArkcStatus::BufferSize, format!("length {n}, problem dimension {}", p.problem.dimension())))
    }
}

fn write2(re: *mut f64, im: *mut f64, a: f64, b: f64) -> Result<(), Fail> {
    unsafe {
        *re.as_mut().ok_or_else(|| null("re"))? = a;
        *im.as_mut().ok_or_else(|| null("im"))? = b;
    }
    Ok(())
}

/// First-order stability polynomial at `(p, q)`.
///
/// # Safety
/// `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_eval_r1(p: f64, q: f64, s: usize, eta: f64, re: *mut f64, im: *mut f64) -> ArkcStatus {
    guard(|| {
        let r = eval_r1(p, q, s, eta)?;
        write2(re, im, r.re, r.im)
    })
}

/// Second-order stability polynomial at `(p, q)`.
///
/// # Safety
/// `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_eval_r2(p: f64, q: f64, s: usize, eta: f64, re: *mut f64, im: *mut f64) -> ArkcStatus {
    guard(|| {
        let r = eval_r2(p, q, s, eta)?;
        write2(re, im, r.re, r.im)
    })
}

/// Inscribed-ellipse half-axes of the stability region (default grid).
/// `second_order` selects the second-order polynomial.
///
/// # Safety
/// `d_s` and `a_s` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_scan_metrics(
    second_order: c_int,
    s: usize,
    eta: f64,
    d_s: *mut f64,
    a_s: *mut f64,
) -> ArkcStatus {
    guard(|| {
        let scheme = if second_order != 0 { RegionScheme::Arkc } else { RegionScheme::Ad1 };
        let m = scan_region(scheme, s, eta, None)?.metrics();
        write2(d_s, a_s, m.d_s, m.a_s)
    })
}

/// Damping from the standard table for `rho_A / sqrt(rho_D)` and `s` stages.
///
/// # Safety
/// `eta` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_select_damping(rho_ratio: f64, s: usize, eta: *mut f64) -> ArkcStatus {
    guard(|| {
        let v = select_damping(rho_ratio, s)?;
        *eta.as_mut().ok_or_else(|| null("eta"))? = v;
        Ok(())
    })
}

/// Whether the curve `q = ratio sqrt(-p)` lies in the stability region.
///
/// # Safety
/// `stable` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arkc_verify_table_entry(ratio: f64, s: usize, eta: f64, stable: *mut c_int) -> ArkcStatus {
    guard(|| {
        let ok = verify_table_entry(ratio, s, eta)?;
        *stable.as_mut().ok_or_else(|| null("stable"))? = ok as c_int;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn statuses_map_errors() {
        assert_eq!(status_of(&Error::StageCapExceeded(501)), ArkcStatus::StageCapExceeded);
        assert_eq!(status_of(&Error::Divergence { stage: 2 }), ArkcStatus::Divergence);
    }

    #[test]
    fn panics_are_caught() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, ArkcStatus::Panic);
        let msg = unsafe { std::ffi::CStr::from_ptr(arkc_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn null_handle_is_reported() {
        let mut y = [0.0; 4];
        let st = unsafe { arkc_problem_initial_state(ptr::null(), y.as_mut_ptr(), 4) };
        assert_eq!(st, ArkcStatus::NullPointer);
    }
}
