//! C ABI over the prior-stability library.
//!
//! A decision problem lives behind an opaque `PsProblem` handle created by
//! [`ps_problem_new`] and released by [`ps_problem_free`]. Every other call
//! returns a [`PsStatus`]; on failure the message of the most recent error on
//! the calling thread is available from [`ps_last_error_message`]. Matrices are
//! row-major `n_acts × n_states` arrays of `double`, priors are arrays of
//! `n_states` masses summing to one.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use prior_stability::{
    bayes_acts, contamination_need, expected_utility, minimize_over_band, pairwise_margin,
    robustness_radius, worst_case_margin, BandBox, BisectionConfig, DecisionProblem, Error, Need,
    Prior, Radius,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    Inconsistent = -3,
    Solver = -4,
    Panic = -5,
}

/// Opaque decision problem.
pub struct PsProblem {
    inner: DecisionProblem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> PsStatus {
    match err.root() {
        Error::Inconsistent(_) | Error::Dimension(_) => PsStatus::Inconsistent,
        Error::Solver(_) => PsStatus::Solver,
        _ => PsStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Run `body`, translating errors and panics into a status and a stored message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for `{what}`"));
            PsStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            PsStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(what))
}

unsafe fn problem<'a>(ptr: *const PsProblem) -> Result<&'a DecisionProblem, Failure> {
    ptr.as_ref()
        .map(|p| &p.inner)
        .ok_or(Failure::Null("problem"))
}

unsafe fn prior(ptr: *const f64, len: usize) -> Result<Prior, Failure> {
    Ok(Prior::new("prior", slice(ptr, len, "prior")?.to_vec())?)
}

/// Message of the last failed call on this thread, or NULL if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version has no interior NUL"),
        };
    VERSION.as_ptr()
}

/// Build a problem from a row-major utility matrix. Acts are labelled
/// `a1..an` and states `s1..sm`.
///
/// # Safety
/// `utilities` must point to `n_acts * n_states` readable doubles and `out`
/// to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ps_problem_new(
    utilities: *const f64,
    n_acts: usize,
    n_states: usize,
    out_problem: *mut *mut PsProblem,
) -> PsStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        let cells = n_acts
            .checked_mul(n_states)
            .ok_or(Failure::Lib(Error::InvalidInput(
                "matrix size overflows".into(),
            )))?;
        let flat = slice(utilities, cells, "utilities")?;
        let rows = if n_states == 0 {
            vec![Vec::new(); n_acts]
        } else {
            flat.chunks(n_states).map(<[f64]>::to_vec).collect()
        };
        let inner = DecisionProblem::from_rows(rows)?;
        *slot = Box::into_raw(Box::new(PsProblem { inner }));
        Ok(())
    })
}

/// Release a handle from [`ps_problem_new`]. NULL is ignored.
///
/// # Safety
/// `problem` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_problem_free(problem: *mut PsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of acts and states of a problem.
///
/// # Safety
/// `problem` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_problem_shape(
    problem: *const PsProblem,
    out_acts: *mut usize,
    out_states: *mut usize,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        *out(out_acts, "out_acts")? = p.num_acts();
        *out(out_states, "out_states")? = p.num_states();
        Ok(())
    })
}

/// `E_π[u_a]`.
///
/// # Safety
/// `prior_mass` must point to `n_states` doubles and `out_value` be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_expected_utility(
    problem: *const PsProblem,
    act: usize,
    prior_mass: *const f64,
    n_states: usize,
    out_value: *mut f64,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        let pi = prior(prior_mass, n_states)?;
        *out(out_value, "out_value")? = expected_utility(p, act, &pi)?;
        Ok(())
    })
}

/// Mark the Bayes acts under `prior_mass`: `out_flags[i]` is set to true for
/// optimal acts and false otherwise.
///
/// # Safety
/// `prior_mass` must point to `n_states` doubles and `out_flags` to `n_acts`
/// writable bools, where `n_acts` is the problem's act count.
#[no_mangle]
pub unsafe extern "C" fn ps_bayes_acts(
    problem: *const PsProblem,
    prior_mass: *const f64,
    n_states: usize,
    out_flags: *mut bool,
    n_acts: usize,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        if n_acts != p.num_acts() {
            return Err(Error::Dimension(format!(
                "flag buffer holds {n_acts} acts, problem has {}",
                p.num_acts()
            ))
            .into());
        }
        if out_flags.is_null() {
            return Err(Failure::Null("out_flags"));
        }
        let set = bayes_acts(p, &prior(prior_mass, n_states)?)?;
        let flags = std::slice::from_raw_parts_mut(out_flags, n_acts);
        for (i, f) in flags.iter_mut().enumerate() {
            *f = set.contains(i);
        }
        Ok(())
    })
}

/// `R_{a,b}(ε)`, the worst expected advantage of `a` over `b` in the band.
///
/// # Safety
/// `prior_mass` must point to `n_states` doubles and `out_value` be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_pairwise_margin(
    problem: *const PsProblem,
    a: usize,
    b: usize,
    prior_mass: *const f64,
    n_states: usize,
    epsilon: f64,
    out_value: *mut f64,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        let pi = prior(prior_mass, n_states)?;
        *out(out_value, "out_value")? = pairwise_margin(p, a, b, &pi, epsilon)?;
        Ok(())
    })
}

/// `R(ε) = min_{b≠a} R_{a,b}(ε)`.
///
/// # Safety
/// `prior_mass` must point to `n_states` doubles and `out_value` be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_worst_case_margin(
    problem: *const PsProblem,
    act: usize,
    prior_mass: *const f64,
    n_states: usize,
    epsilon: f64,
    out_value: *mut f64,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        let pi = prior(prior_mass, n_states)?;
        *out(out_value, "out_value")? = worst_case_margin(p, act, &pi, epsilon)?;
        Ok(())
    })
}

/// Robustness radius by bisection to `tolerance`. When `act` is not Bayes at
/// the prior, `*out_is_bayes` is false and `*out_radius` is `-INFINITY`.
///
/// # Safety
/// `prior_mass` must point to `n_states` doubles; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_robustness_radius(
    problem: *const PsProblem,
    act: usize,
    prior_mass: *const f64,
    n_states: usize,
    tolerance: f64,
    out_radius: *mut f64,
    out_is_bayes: *mut bool,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        let pi = prior(prior_mass, n_states)?;
        let radius_slot = out(out_radius, "out_radius")?;
        let bayes_slot = out(out_is_bayes, "out_is_bayes")?;
        let config = BisectionConfig::new(tolerance)?;
        match robustness_radius(p, act, &pi, &config)? {
            Radius::Value(r) => {
                *radius_slot = r;
                *bayes_slot = true;
            }
            Radius::NotBayes => {
                *radius_slot = f64::NEG_INFINITY;
                *bayes_slot = false;
            }
        }
        Ok(())
    })
}

/// Contamination need of `act`.
///
/// When some prior in a band makes `act` optimal, `*out_admissible` is true,
/// `*out_epsilon` holds the smallest such radius and, if `out_witness` is not
/// NULL, the `n_states` masses of a witness prior are written there. When no
/// prior does, `*out_admissible` is false, `*out_epsilon` is `INFINITY` and,
/// if `out_weights` is not NULL, the `n_acts` mixture weights of the dominating
/// certificate are written there (zero for `act` itself).
///
/// # Safety
/// `prior_mass` must point to `n_states` doubles; `out_witness` must be NULL
/// or hold `n_states` doubles; `out_weights` must be NULL or hold as many
/// doubles as the problem has acts.
#[no_mangle]
pub unsafe extern "C" fn ps_contamination_need(
    problem: *const PsProblem,
    act: usize,
    prior_mass: *const f64,
    n_states: usize,
    out_epsilon: *mut f64,
    out_admissible: *mut bool,
    out_witness: *mut f64,
    out_weights: *mut f64,
) -> PsStatus {
    guard(|| {
        let p = self::problem(problem)?;
        let pi = prior(prior_mass, n_states)?;
        let eps_slot = out(out_epsilon, "out_epsilon")?;
        let adm_slot = out(out_admissible, "out_admissible")?;
        match contamination_need(p, act, &pi)? {
            Need::Value { epsilon, witness } => {
                *eps_slot = epsilon;
                *adm_slot = true;
                if !out_witness.is_null() {
                    std::slice::from_raw_parts_mut(out_witness, n_states).copy_from_slice(&witness);
                }
            }
            Need::Infeasible(cert) => {
                *eps_slot = f64::INFINITY;
                *adm_slot = false;
                if !out_weights.is_null() {
                    let weights = std::slice::from_raw_parts_mut(out_weights, p.num_acts());
                    weights.fill(0.0);
                    for &(b, w) in &cert.weights {
                        weights[b] = w;
                    }
                }
            }
        }
        Ok(())
    })
}

/// Minimum of `⟨direction, π⟩` over the band of `radius` around `center`
/// intersected with the simplex. The minimizer is written to `out_point`
/// unless it is NULL.
///
/// # Safety
/// `direction` and `center` must point to `n_states` doubles; `out_point`
/// must be NULL or hold `n_states` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_minimize_over_band(
    direction: *const f64,
    center: *const f64,
    n_states: usize,
    radius: f64,
    out_value: *mut f64,
    out_point: *mut f64,
) -> PsStatus {
    guard(|| {
        let d = slice(direction, n_states, "direction")?;
        let c = slice(center, n_states, "center")?;
        let value_slot = out(out_value, "out_value")?;
        let band = BandBox::new(c, radius)?;
        let (value, point) = minimize_over_band(d, &band)?;
        *value_slot = value;
        if !out_point.is_null() {
            std::slice::from_raw_parts_mut(out_point, n_states).copy_from_slice(&point);
        }
        Ok(())
    })
}
