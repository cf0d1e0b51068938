//! Self-duality polynomials `D_N(eta, xi) = prod_i C(eta_i, xi_i)` and the
//! exact local-equilibrium deviation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{BoundaryParams, Configuration};
use crate::moments::{theta_product_moment, theta_sparse_moment};

/// Largest total mass `sum_i xi_i` accepted.
pub const MAX_DUAL_MASS: u64 = 20;

/// Finitely many dual particles on sites `1..=N`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DualConfiguration {
    xi: BTreeMap<usize, u64>,
}

impl DualConfiguration {
    pub fn new<I: IntoIterator<Item = (usize, u64)>>(entries: I) -> Result<Self> {
        let mut xi = BTreeMap::new();
        for (site, mult) in entries {
            if site == 0 {
                return Err(Error::contract("dual sites are numbered from 1"));
            }
            if mult > 0 {
                *xi.entry(site).or_insert(0) += mult;
            }
        }
        let d = Self { xi };
        if d.total_mass() > MAX_DUAL_MASS {
            return Err(Error::contract(format!(
                "dual mass {} exceeds the cap {MAX_DUAL_MASS}",
                d.total_mass()
            )));
        }
        Ok(d)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `p_1 delta_start + ... + p_k delta_{start+k-1}`.
    pub fn window(start: usize, p: &[u32]) -> Result<Self> {
        Self::new(p.iter().enumerate().map(|(j, &m)| (start + j, u64::from(m))))
    }

    pub fn total_mass(&self) -> u64 {
        self.xi.values().sum()
    }

    /// Nonzero `(site, multiplicity)` pairs in increasing site order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.xi.iter().map(|(&s, &m)| (s, m))
    }

    pub fn max_site(&self) -> Option<usize> {
        self.xi.keys().next_back().copied()
    }
}

/// `C(n, k)` in 64 bits; `None` on overflow.
pub(crate) fn binomial_u64(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
        if c > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(c as u64)
}

/// `D_N(eta, xi)`; zero as soon as some site has `eta_i < xi_i`.
pub fn duality_poly(eta: &Configuration, xi: &DualConfiguration) -> Result<f64> {
    let occ = eta.occupations();
    if let Some(s) = xi.max_site() {
        if s > occ.len() {
            return Err(Error::contract(format!("dual site {s} beyond chain length {}", occ.len())));
        }
    }
    let mut value: u64 = 1;
    for (site, m) in xi.entries() {
        let c = binomial_u64(occ[site - 1], m)
            .ok_or_else(|| Error::numeric(format!("C({}, {m}) overflows 64 bits", occ[site - 1])))?;
        if c == 0 {
            return Ok(0.0);
        }
        value = value
            .checked_mul(c)
            .ok_or_else(|| Error::numeric("duality polynomial overflows 64 bits"))?;
    }
    Ok(value as f64)
}

/// `E[D_N(eta, xi)] = E[prod_i Theta_i^{xi_i}]` under the steady state.
pub fn duality_expectation_exact(xi: &DualConfiguration, n: usize, bounds: BoundaryParams) -> Result<f64> {
    let entries: Vec<(usize, u32)> = xi.entries().map(|(s, m)| (s, m as u32)).collect();
    theta_sparse_moment(&entries, n, bounds)
}

/// `E[D_N(eta, sum_j p_j delta_{floor(xN)+j})] - rho(x)^{p_1+...+p_k}`.
pub fn le_deviation(x: f64, p: &[u32], n: usize, bounds: BoundaryParams) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::contract(format!("macroscopic point x = {x} must lie in (0, 1)")));
    }
    if p.is_empty() {
        return Err(Error::contract("p_vec must be non-empty"));
    }
    let total: u32 = p.iter().sum();
    if u64::from(total) > MAX_DUAL_MASS {
        return Err(Error::contract(format!("dual mass {total} exceeds the cap {MAX_DUAL_MASS}")));
    }
    let offset = (x * n as f64).floor() as usize;
    if offset + p.len() > n {
        return Err(Error::contract(format!(
            "window {}..={} exceeds N = {n}",
            offset + 1,
            offset + p.len()
        )));
    }
    let exact = theta_product_moment(offset + 1, p, n, bounds)?;
    Ok(exact - bounds.rho(x).powi(total as i32))
}
