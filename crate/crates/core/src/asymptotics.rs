//! Deterministic limits: `h`, `h'`, `V`, the LLN integral, the two CLT
//! variances and the Brownian-bridge kernel.
//!
//! Homogeneous expectations are truncated sums over `{0..=M}^k`. The cutoff is
//! certified from the growth class of `g`: with `|g| <= C prod (1+n_j)^d`,
//!
//! ```text
//! |error| <= C * k * A^(k-1) * T(M),   A = E(1+eta)^d,   T(M) = sum_{n>M} (1+n)^d nu(n)
//! ```
//!
//! and `T(M)` is bounded by the first omitted term over `1 - r`, where
//! `r = ((M+3)/(M+2))^d q` dominates every later term ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::TestFunction;
use crate::local::{LocalFunction, Polynomial};
use crate::model::{geometric_weights, BoundaryParams};
use crate::moments::{geometric_raw_moment, MAX_RAW_MOMENT};
use crate::quadrature::{integrate_bridge_kernel, integrate_unit, with_panel_doubling};

/// Largest window evaluated by `h_of`.
pub const MAX_H_WINDOW: usize = 4;
/// Largest window evaluated by `v_of`.
pub const MAX_V_WINDOW: usize = 3;

const MAX_TRUNCATION: usize = 100_000;
const MAX_ENUMERATION: f64 = 2e9;

/// Quadrature and truncation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Initial number of panels on `[0, 1]`.
    pub panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Panel doubling stops with an error past this count.
    pub max_panels: usize,
    /// State-space cutoff `M`; chosen from `tail_tol` when absent.
    pub truncation: Option<usize>,
    /// Certified bound on the truncation error of each expectation.
    pub tail_tol: f64,
    /// Relative change allowed between successive panel doublings.
    pub convergence_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels: 8,
            nodes: 10,
            max_panels: 256,
            truncation: None,
            tail_tol: 1e-12,
            convergence_tol: 1e-9,
        }
    }
}

impl QuadratureSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.panels == 0 || self.nodes == 0 || self.max_panels < self.panels {
            return Err(Error::contract("quadrature needs panels >= 1, nodes >= 1, max_panels >= panels"));
        }
        if !(self.tail_tol > 0.0 && self.convergence_tol > 0.0) {
            return Err(Error::contract("quadrature tolerances must be positive"));
        }
        Ok(())
    }
}

/// `sigma_T^2` (parameter fluctuations) and `sigma_E^2` (conditional fluctuations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltVariances {
    pub sigma_t_sq: f64,
    pub sigma_e_sq: f64,
}

impl CltVariances {
    pub fn total(&self) -> f64 {
        self.sigma_t_sq + self.sigma_e_sq
    }
}

/// Derivative of `h` along the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPrime {
    pub value: f64,
    /// Set when `rho` sits within one step of zero and a forward difference was used.
    pub one_sided: bool,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("density {rho} must be finite and >= 0")))
    }
}

/// `sum_{n > m} (1+n)^d nu_theta(n)`, bounded above.
fn tail_bound(theta: f64, d: u32, m: usize) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let q = theta / (1.0 + theta);
    let mf = m as f64;
    let r = ((mf + 3.0) / (mf + 2.0)).powi(d as i32) * q;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    let first = (mf + 2.0).powi(d as i32) * q.powf(mf + 1.0) / (1.0 + theta);
    first / (1.0 - r)
}

/// `E(1 + eta)^d` under `nu_theta`.
fn shifted_moment(theta: f64, d: u32) -> Result<f64> {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=d {
        total += binom * geometric_raw_moment(theta, j)?;
        binom = binom * f64::from(d - j) / f64::from(j + 1);
    }
    Ok(total)
}

/// Smallest `M` whose certified error for a `sites`-fold sum of a function
/// bounded by `scale * prod (1+n)^degree` is below `tol`, or a check of the
/// fixed `M` when one is given.
pub(crate) fn certify_truncation(
    theta_max: f64,
    degree: u32,
    scale: f64,
    sites: usize,
    tol: f64,
    fixed: Option<usize>,
) -> Result<usize> {
    if degree > MAX_RAW_MOMENT {
        return Err(Error::quadrature(format!(
            "growth degree {degree} is beyond the certified range ({MAX_RAW_MOMENT})"
        )));
    }
    let a = shifted_moment(theta_max, degree)?;
    let factor = scale * sites as f64 * a.powi(sites as i32 - 1);
    let error = |m: usize| factor * tail_bound(theta_max, degree, m);
    if let Some(m) = fixed {
        let e = error(m);
        return if e <= tol {
            Ok(m)
        } else {
            Err(Error::quadrature(format!(
                "truncation M = {m} leaves a certified error of {e:e} > {tol:e} at theta = {theta_max}"
            )))
        };
    }
    if factor == 0.0 {
        return Ok(0);
    }
    // geometric growth then bisection
    let mut hi = 1;
    while error(hi) > tol {
        hi *= 2;
        if hi > MAX_TRUNCATION {
            return Err(Error::quadrature(format!(
                "no truncation below {MAX_TRUNCATION} meets tolerance {tol:e} at theta = {theta_max}"
            )));
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if error(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if error(lo) <= tol { lo } else { hi })
}

fn check_enumeration(m: usize, k: usize) -> Result<()> {
    if ((m + 1) as f64).powi(k as i32) > MAX_ENUMERATION {
        return Err(Error::quadrature(format!(
            "truncated window sum over {{0..={m}}}^{k} is too large to enumerate"
        )));
    }
    Ok(())
}

/// Visits every `n in {0..=m}^k` in lexicographic order with its weight
/// `prod w[n_j]`.
fn for_each_window<F: FnMut(&[u64], f64)>(k: usize, w: &[f64], mut f: F) {
    let m = w.len() - 1;
    let mut n = vec![0u64; k];
    // prefix products; partial[j] = prod_{i<j} w[n_i]
    let mut partial = vec![1.0; k + 1];
    for j in 0..k {
        partial[j + 1] = partial[j] * w[0];
    }
    loop {
        f(&n, partial[k]);
        let mut j = k;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if (n[j] as usize) < m {
                n[j] += 1;
                break;
            }
            n[j] = 0;
        }
        for i in j..k {
            partial[i + 1] = partial[i] * w[n[i] as usize];
        }
    }
}

/// `g` with a fixed, certified cutoff, so that `h` and its differences are
/// evaluated on the same truncated state space.
struct Truncated<'a> {
    g: &'a LocalFunction,
    m: usize,
}

impl<'a> Truncated<'a> {
    fn for_h(g: &'a LocalFunction, theta_max: f64, quad: &QuadratureSpec) -> Result<Self> {
        if g.k() > MAX_H_WINDOW {
            return Err(Error::contract(format!("h is limited to windows k <= {MAX_H_WINDOW}")));
        }
        let m = certify_truncation(
            theta_max,
            g.site_degree(),
            g.growth_scale(),
            g.k(),
            quad.tail_tol,
            quad.truncation,
        )?;
        check_enumeration(m, g.k())?;
        Ok(Self { g, m })
    }

    fn for_v(g: &'a LocalFunction, theta_max: f64, quad: &QuadratureSpec) -> Result<Self> {
        if g.k() > MAX_V_WINDOW {
            return Err(Error::contract(format!("V is limited to windows k <= {MAX_V_WINDOW}")));
        }
        let scale = g.growth_scale();
        let m = certify_truncation(
            theta_max,
            2 * g.site_degree(),
            scale * scale,
            2 * g.k() - 1,
            quad.tail_tol,
            quad.truncation,
        )?;
        check_enumeration(m, g.k())?;
        Ok(Self { g, m })
    }

    fn h(&self, rho: f64) -> f64 {
        let w = geometric_weights(rho, self.m);
        let mut total = 0.0;
        for_each_window(self.g.k(), &w, |n, p| {
            if p != 0.0 {
                total += p * self.g.eval(n);
            }
        });
        total
    }

    fn h_prime(&self, rho: f64) -> HPrime {
        let delta = step(rho);
        if rho < delta {
            let d1 = (self.h(rho + delta) - self.h(rho)) / delta;
            let d2 = (self.h(rho + 0.5 * delta) - self.h(rho)) / (0.5 * delta);
            return HPrime {
                value: 2.0 * d2 - d1,
                one_sided: true,
            };
        }
        let d1 = (self.h(rho + delta) - self.h(rho - delta)) / (2.0 * delta);
        let d2 = (self.h(rho + 0.5 * delta) - self.h(rho - 0.5 * delta)) / delta;
        HPrime {
            value: (4.0 * d2 - d1) / 3.0,
            one_sided: false,
        }
    }

    /// `Var g + 2 sum_{l=1}^{k-1} Cov(g(n_0..), g(n_l..))` under `nu_rho^{⊗}`.
    fn v(&self, rho: f64) -> f64 {
        let k = self.g.k();
        let w = geometric_weights(rho, self.m);
        let base = self.m + 1;
        let size = base.pow(k as u32);
        let mut gvals = Vec::with_capacity(size);
        let mut probs = Vec::with_capacity(size);
        for_each_window(k, &w, |n, p| {
            gvals.push(if p != 0.0 { self.g.eval(n) } else { 0.0 });
            probs.push(p);
        });
        let h: f64 = gvals.iter().zip(&probs).map(|(g, p)| g * p).sum();
        let second: f64 = gvals.iter().zip(&probs).map(|(g, p)| g * g * p).sum();
        let mut v = second - h * h;

        for lag in 1..k {
            let overlap = k - lag;
            let tail = base.pow(overlap as u32);
            let head = base.pow(lag as u32);
            // cond_a: sum over the first `lag` sites, keyed by the last `overlap`
            // cond_b: sum over the last `lag` sites, keyed by the first `overlap`
            let mut cond_a = vec![0.0; tail];
            let mut cond_b = vec![0.0; tail];
            let mut overlap_prob = vec![0.0; tail];
            for idx in 0..size {
                let key_a = idx % tail;
                let key_b = idx / head;
                let (pa, pb) = (weight_of(idx / tail, lag, &w), weight_of(idx % head, lag, &w));
                cond_a[key_a] += gvals[idx] * pa;
                cond_b[key_b] += gvals[idx] * pb;
            }
            for (key, slot) in overlap_prob.iter_mut().enumerate() {
                *slot = weight_of(key, overlap, &w);
            }
            let cross: f64 = (0..tail)
                .map(|key| overlap_prob[key] * cond_a[key] * cond_b[key])
                .sum();
            v += 2.0 * (cross - h * h);
        }
        v
    }
}

/// `prod w[digit]` over the base-`(M+1)` digits of `idx` (`len` digits).
fn weight_of(mut idx: usize, len: usize, w: &[f64]) -> f64 {
    let base = w.len();
    let mut p = 1.0;
    for _ in 0..len {
        p *= w[idx % base];
        idx /= base;
    }
    p
}

fn step(rho: f64) -> f64 {
    1e-5f64.max(1e-5 * rho)
}

/// `h(rho) = E[g]` under the homogeneous product `nu_rho^{⊗k}`.
pub fn h_of(g: &LocalFunction, rho: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_rho(rho)?;
    Ok(Truncated::for_h(g, rho, quad)?.h(rho))
}

/// `h'(rho)` by a central difference with one Richardson step.
pub fn h_prime(g: &LocalFunction, rho: f64, quad: &QuadratureSpec) -> Result<HPrime> {
    check_rho(rho)?;
    Ok(Truncated::for_h(g, rho + step(rho), quad)?.h_prime(rho))
}

/// `V(rho)`: the lag-covariance sum of `g` under `nu_rho^{⊗}`.
pub fn v_of(g: &LocalFunction, rho: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_rho(rho)?;
    Ok(Truncated::for_v(g, rho, quad)?.v(rho))
}

/// `int_0^1 h(rho(x)) phi(x) dx`.
pub fn lln_limit(
    g: &LocalFunction,
    phi: &TestFunction,
    bounds: BoundaryParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    let t = Truncated::for_h(g, bounds.theta_right(), quad)?;
    let f = |x: f64| Ok(t.h(bounds.rho(x)) * phi.eval(x));
    with_panel_doubling(
        |p| integrate_unit(&f, p, quad.nodes),
        quad.panels,
        quad.max_panels,
        quad.convergence_tol,
        "LLN limit",
    )
}

pub fn clt_variances(
    g: &LocalFunction,
    phi: &TestFunction,
    bounds: BoundaryParams,
    quad: &QuadratureSpec,
) -> Result<CltVariances> {
    quad.validate()?;
    let width = bounds.width();
    let sigma_t_sq = if bounds.is_equilibrium() {
        0.0
    } else {
        let top = bounds.theta_right();
        let t = Truncated::for_h(g, top + step(top), quad)?;
        let f = |x: f64| Ok(phi.eval(x) * t.h_prime(bounds.rho(x)).value);
        let integral = with_panel_doubling(
            |p| integrate_bridge_kernel(&f, p, quad.nodes),
            quad.panels,
            quad.max_panels,
            quad.convergence_tol,
            "sigma_T^2",
        )?;
        (width * width * integral).max(0.0)
    };
    let t = Truncated::for_v(g, bounds.theta_right(), quad)?;
    let f = |x: f64| {
        let p = phi.eval(x);
        Ok(t.v(bounds.rho(x)) * p * p)
    };
    let sigma_e_sq = with_panel_doubling(
        |p| integrate_unit(&f, p, quad.nodes),
        quad.panels,
        quad.max_panels,
        quad.convergence_tol,
        "sigma_E^2",
    )?;
    Ok(CltVariances {
        sigma_t_sq,
        sigma_e_sq,
    })
}

/// `(theta_R - theta_L)^2 (min(s, t) - s t)`.
pub fn bridge_covariance(s: f64, t: f64, bounds: BoundaryParams) -> Result<f64> {
    if !((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)) {
        return Err(Error::contract(format!("bridge times ({s}, {t}) must lie in [0, 1]")));
    }
    let w = bounds.width();
    Ok(w * w * (s.min(t) - s * t))
}

/// `h(rho)` for a polynomial `g`, from the geometric raw moments; no truncation.
pub fn h_polynomial(poly: &Polynomial, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let mut total = 0.0;
    for term in &poly.terms {
        let mut v = term.coeff;
        for &p in &term.powers {
            v *= geometric_raw_moment(rho, p)?;
        }
        total += v;
    }
    Ok(total)
}
