//! C ABI over `harmonic_ness`.
//!
//! Every fallible function returns an [`HnStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`hn_last_error_message`]. Local functions and test functions
//! cross the boundary as opaque handles that the caller must free.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use harmonic_ness::asymptotics::{self, QuadratureSpec};
use harmonic_ness::duality;
use harmonic_ness::fields::TestFunction;
use harmonic_ness::ldp::{self, FreeEnergySpec, MonotoneProfile};
use harmonic_ness::local::{Monomial, Polynomial};
use harmonic_ness::model::{self, BoundaryParams};
use harmonic_ness::moments::{self, ExponentVector};
use harmonic_ness::{Error, LocalFunction, RandomSeed};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HnStatus {
    Ok = 0,
    Domain = 1,
    Contract = 2,
    Quadrature = 3,
    Numeric = 4,
    Optimization = 5,
    Config = 6,
    Io = 7,
    NullPointer = 8,
    Panic = 9,
}

/// Opaque local function of `k` consecutive occupations.
pub struct HnLocalFunction(LocalFunction);

/// Opaque test function on `[0, 1]`.
pub struct HnTestFunction(TestFunction);

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).expect("interior NULs removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HnStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (HnStatus::Ok, None),
        Ok(Err(Failure::Null(name))) => (HnStatus::NullPointer, Some(format!("null pointer: {name}"))),
        Ok(Err(Failure::Core(e))) => {
            let status = match e {
                Error::Domain(_) => HnStatus::Domain,
                Error::Contract(_) => HnStatus::Contract,
                Error::Quadrature(_) => HnStatus::Quadrature,
                Error::Numeric(_) => HnStatus::Numeric,
                Error::Optimization(_) => HnStatus::Optimization,
                Error::Config(_) => HnStatus::Config,
                Error::Io(_) => HnStatus::Io,
            };
            (status, Some(e.to_string()))
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (HnStatus::Panic, Some(format!("panic: {what}")))
        }
    };
    set_last_error(msg);
    status
}

unsafe fn slice<'a, T>(data: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T, name: &'static str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or(Failure::Null(name))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn hn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// `eta_1`.
#[no_mangle]
pub extern "C" fn hn_local_function_density() -> *mut HnLocalFunction {
    Box::into_raw(Box::new(HnLocalFunction(LocalFunction::density())))
}

/// `eta_1 eta_2`.
#[no_mangle]
pub extern "C" fn hn_local_function_pair_product() -> *mut HnLocalFunction {
    Box::into_raw(Box::new(HnLocalFunction(LocalFunction::pair_product())))
}

/// `1{eta_1 = 0}`; bounded, so usable in free energies.
#[no_mangle]
pub extern "C" fn hn_local_function_indicator_vacuum() -> *mut HnLocalFunction {
    Box::into_raw(Box::new(HnLocalFunction(LocalFunction::indicator_vacuum())))
}

/// Polynomial `sum_t coeffs[t] prod_j eta_j^powers[t * k + j]` on a window of `k` sites.
///
/// # Safety
/// `coeffs` must hold `n_terms` values and `powers` `n_terms * k` values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_local_function_polynomial(
    k: usize,
    n_terms: usize,
    coeffs: *const f64,
    powers: *const u32,
    out: *mut *mut HnLocalFunction,
) -> HnStatus {
    guard(|| {
        let total = n_terms
            .checked_mul(k)
            .ok_or_else(|| Error::Contract("polynomial size overflows".into()))?;
        let coeffs = slice(coeffs, n_terms, "coeffs")?;
        let powers = slice(powers, total, "powers")?;
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(t, &coeff)| Monomial {
                coeff,
                powers: powers[t * k..(t + 1) * k].to_vec(),
            })
            .collect();
        let g = LocalFunction::polynomial("custom-polynomial", Polynomial::new(k, terms)?);
        write(out, Box::into_raw(Box::new(HnLocalFunction(g))), "out")
    })
}

/// # Safety
/// `g` must come from one of the constructors above and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hn_local_function_free(g: *mut HnLocalFunction) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// `phi(x) = sum_j coeffs[j] x^j`.
///
/// # Safety
/// `coeffs` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_test_function_polynomial(
    coeffs: *const f64,
    len: usize,
    out: *mut *mut HnTestFunction,
) -> HnStatus {
    guard(|| {
        let phi = TestFunction::polynomial(slice(coeffs, len, "coeffs")?.to_vec())?;
        write(out, Box::into_raw(Box::new(HnTestFunction(phi))), "out")
    })
}

/// # Safety
/// `phi` must come from [`hn_test_function_polynomial`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hn_test_function_free(phi: *mut HnTestFunction) {
    if !phi.is_null() {
        drop(Box::from_raw(phi));
    }
}

/// `nu_theta(n) = theta^n / (1 + theta)^(n + 1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_geometric_pmf(theta: f64, n: u64, out: *mut f64) -> HnStatus {
    guard(|| write(out, model::geometric_pmf(theta, n)?, "out"))
}

/// One steady-state sample on `n` sites. `theta_out` may be NULL.
///
/// # Safety
/// `eta_out` (and `theta_out` when non-NULL) must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn hn_sample_ness(
    n: usize,
    theta_left: f64,
    theta_right: f64,
    seed_master: u64,
    seed_stream: u64,
    theta_out: *mut f64,
    eta_out: *mut u64,
) -> HnStatus {
    guard(|| {
        if eta_out.is_null() {
            return Err(Failure::Null("eta_out"));
        }
        let bounds = BoundaryParams::new(theta_left, theta_right)?;
        let (profile, eta) = model::sample_ness(n, bounds, RandomSeed::new(seed_master, seed_stream))?;
        ptr::copy_nonoverlapping(eta.occupations().as_ptr(), eta_out, n);
        if !theta_out.is_null() {
            ptr::copy_nonoverlapping(profile.values().as_ptr(), theta_out, n);
        }
        Ok(())
    })
}

/// `E[prod_i U_{i:n}^alphas[i]]` for `n` sorted uniforms.
///
/// # Safety
/// `alphas` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_orderstat_product_moment(n: usize, alphas: *const u32, out: *mut f64) -> HnStatus {
    guard(|| {
        let exps = ExponentVector::new(slice(alphas, n, "alphas")?.to_vec());
        write(out, moments::uniform_orderstat_product_moment(n, &exps)?, "out")
    })
}

/// `E[prod_j Theta_{start+j}^exps[j]]` for the window starting at site `start` (1-based).
///
/// # Safety
/// `exps` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_theta_product_moment(
    start: usize,
    exps: *const u32,
    len: usize,
    n: usize,
    theta_left: f64,
    theta_right: f64,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let bounds = BoundaryParams::new(theta_left, theta_right)?;
        let v = moments::theta_product_moment(start, slice(exps, len, "exps")?, n, bounds)?;
        write(out, v, "out")
    })
}

/// Exact local-equilibrium deviation of the duality window `p` placed at `x`.
///
/// # Safety
/// `p` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_le_deviation(
    x: f64,
    p: *const u32,
    len: usize,
    n: usize,
    theta_left: f64,
    theta_right: f64,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let bounds = BoundaryParams::new(theta_left, theta_right)?;
        write(out, duality::le_deviation(x, slice(p, len, "p")?, n, bounds)?, "out")
    })
}

/// `int_0^1 h(rho(x)) phi(x) dx` with default quadrature controls.
///
/// # Safety
/// `g` and `phi` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_lln_limit(
    g: *const HnLocalFunction,
    phi: *const HnTestFunction,
    theta_left: f64,
    theta_right: f64,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let (g, phi) = (handle(g, "g")?, handle(phi, "phi")?);
        let bounds = BoundaryParams::new(theta_left, theta_right)?;
        let v = asymptotics::lln_limit(&g.0, &phi.0, bounds, &QuadratureSpec::default())?;
        write(out, v, "out")
    })
}

/// Parameter and conditional parts of the CLT variance.
///
/// # Safety
/// `g` and `phi` must be live handles; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_clt_variances(
    g: *const HnLocalFunction,
    phi: *const HnTestFunction,
    theta_left: f64,
    theta_right: f64,
    sigma_t_sq: *mut f64,
    sigma_e_sq: *mut f64,
) -> HnStatus {
    guard(|| {
        let (g, phi) = (handle(g, "g")?, handle(phi, "phi")?);
        if sigma_t_sq.is_null() || sigma_e_sq.is_null() {
            return Err(Failure::Null("sigma_t_sq/sigma_e_sq"));
        }
        let bounds = BoundaryParams::new(theta_left, theta_right)?;
        let v = asymptotics::clt_variances(&g.0, &phi.0, bounds, &QuadratureSpec::default())?;
        write(sigma_t_sq, v.sigma_t_sq, "sigma_t_sq")?;
        write(sigma_e_sq, v.sigma_e_sq, "sigma_e_sq")
    })
}

/// Free energy `F(theta, lambda)` of a bounded local function.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_free_energy(
    theta: f64,
    lambda: f64,
    g: *const HnLocalFunction,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let spec = FreeEnergySpec::new(handle(g, "g")?.0.clone())?;
        write(out, ldp::free_energy(theta, lambda, &spec)?, "out")
    })
}

/// Rate function `I(theta, x)`, the Legendre transform of the free energy.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_rate_function(
    theta: f64,
    x: f64,
    g: *const HnLocalFunction,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let spec = FreeEnergySpec::new(handle(g, "g")?.0.clone())?;
        write(out, ldp::rate_function_i(theta, x, &spec)?, "out")
    })
}

/// Path rate `J(u)` of a non-decreasing profile sampled on a uniform grid of `len` points.
///
/// # Safety
/// `grid` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hn_path_rate(
    grid: *const f64,
    len: usize,
    theta_left: f64,
    theta_right: f64,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let bounds = BoundaryParams::new(theta_left, theta_right)?;
        let u = MonotoneProfile::from_grid(slice(grid, len, "grid")?, bounds)?;
        write(out, ldp::path_rate_j(&u), "out")
    })
}
