//! Closed-form moments of uniform order statistics and of the geometric law.
//!
//! The joint moment `E[U_{1:N}^a_1 ... U_{N:N}^a_N]` telescopes to
//! `prod_{j=1..N} j / (S_j + j)` with `S_j = a_1 + ... + a_j`. Only indices
//! with `S_j > 0` contribute, and on a run of indices where `S_j = S` is
//! constant the factors collapse again:
//!
//! ```text
//! prod_{j=a..b} j/(S+j) = prod_{m=1..S} (a-1+m)/(b+m)
//! ```
//!
//! so a moment with total exponent `L` spread over `s` sites costs `O(s L)`
//! multiplications of factors in `(0, 1]`, independent of `N`. This is what
//! keeps `N ~ 10^6` within double precision without any Gamma calls.

use std::sync::LazyLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::BoundaryParams;

/// Largest power accepted by [`geometric_raw_moment`].
pub const MAX_RAW_MOMENT: u32 = 20;

/// Exponents `(a_1, ..., a_N)` attached to the order statistics `U_{1:N} .. U_{N:N}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentVector {
    alphas: Vec<u32>,
}

impl ExponentVector {
    pub fn new(alphas: Vec<u32>) -> Self {
        Self { alphas }
    }

    pub fn zeros(n: usize) -> Self {
        Self { alphas: vec![0; n] }
    }

    /// Exponent `k` on index `r` (1-based), zero elsewhere.
    pub fn single(n: usize, r: usize, k: u32) -> Result<Self> {
        if r == 0 || r > n {
            return Err(Error::contract(format!("index {r} outside 1..={n}")));
        }
        let mut alphas = vec![0; n];
        alphas[r - 1] = k;
        Ok(Self { alphas })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.alphas
    }

    /// Nonzero entries as `(1-based index, exponent)`, increasing in index.
    pub fn sparse(&self) -> Vec<(usize, u32)> {
        self.alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(i, &a)| (i + 1, a))
            .collect()
    }
}

fn check_len(n: usize, exps: &ExponentVector) -> Result<()> {
    if n == 0 {
        return Err(Error::contract("N must be at least 1"));
    }
    if exps.len() != n {
        return Err(Error::contract(format!(
            "exponent vector has length {}, expected N = {n}",
            exps.len()
        )));
    }
    Ok(())
}

/// `E[prod_j U_{j:N}^{alpha_j}]` for natural exponents.
pub fn uniform_orderstat_product_moment(n: usize, exps: &ExponentVector) -> Result<f64> {
    check_len(n, exps)?;
    Ok(sparse_uniform_moment(n, &exps.sparse()))
}

/// Telescoped product over sparse `(site, exponent)` entries; sites strictly
/// increasing in `1..=n`, exponents positive.
pub(crate) fn sparse_uniform_moment(n: usize, entries: &[(usize, u32)]) -> f64 {
    let mut value = 1.0;
    let mut s: u64 = 0;
    for (idx, &(site, exp)) in entries.iter().enumerate() {
        debug_assert!(site >= 1 && site <= n && exp > 0);
        s += u64::from(exp);
        let run_end = entries.get(idx + 1).map_or(n, |&(next, _)| next - 1);
        // prod_{j=site..run_end} j/(s+j)
        let a = site as f64;
        let b = run_end as f64;
        for m in 1..=s {
            let m = m as f64;
            value *= (a - 1.0 + m) / (b + m);
        }
    }
    value
}

/// Exact rational evaluation of the product moment, for `N <= 64`.
pub fn uniform_orderstat_product_moment_exact(
    n: usize,
    exps: &ExponentVector,
) -> Result<BigRational> {
    check_len(n, exps)?;
    if n > 64 {
        return Err(Error::contract("exact rational path is limited to N <= 64"));
    }
    let mut value = BigRational::one();
    let mut s: u64 = 0;
    for (j, &a) in exps.as_slice().iter().enumerate() {
        s += u64::from(a);
        let j = (j + 1) as u64;
        value *= BigRational::new(BigInt::from(j), BigInt::from(s + j));
    }
    Ok(value)
}

/// The same moment through `Gamma(N+1) prod Gamma(S_j+j)/Gamma(S_j+j+1)`.
pub fn uniform_orderstat_product_moment_gamma(n: usize, exps: &ExponentVector) -> Result<f64> {
    check_len(n, exps)?;
    let mut log_value = ln_gamma(n as f64 + 1.0);
    let mut s = 0.0;
    for (j, &a) in exps.as_slice().iter().enumerate() {
        s += f64::from(a);
        let x = s + (j + 1) as f64;
        log_value += ln_gamma(x) - ln_gamma(x + 1.0);
    }
    Ok(log_value.exp())
}

/// `E[U_{r:N}^k] = r (r+1) ... (r+k-1) / ((N+1) ... (N+k))`.
pub fn single_index_moment(r: usize, k: u32, n: usize) -> f64 {
    (0..k).fold(1.0, |acc, m| {
        acc * (r as f64 + f64::from(m)) / (n as f64 + 1.0 + f64::from(m))
    })
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `E[Theta_{i,N}^p]` by the binomial expansion over `E[U_{i:N}^l]`.
pub fn theta_moment(i: usize, n: usize, p: u32, bounds: BoundaryParams) -> Result<f64> {
    if i == 0 || i > n {
        return Err(Error::contract(format!("index {i} outside 1..={n}")));
    }
    let lo = bounds.theta_left();
    let width = bounds.width();
    Ok((0..=p)
        .map(|l| {
            binomial_f64(p, l)
                * lo.powi((p - l) as i32)
                * width.powi(l as i32)
                * single_index_moment(i, l, n)
        })
        .sum())
}

/// `E[Theta_start^e_1 ... Theta_{start+k-1}^e_k]` for a window of consecutive sites.
pub fn theta_product_moment(
    start: usize,
    exps: &[u32],
    n: usize,
    bounds: BoundaryParams,
) -> Result<f64> {
    if start == 0 || start + exps.len() > n + 1 {
        return Err(Error::contract(format!(
            "window {start}..{} outside 1..={n}",
            start + exps.len()
        )));
    }
    let entries: Vec<(usize, u32)> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(j, &e)| (start + j, e))
        .collect();
    theta_sparse_moment(&entries, n, bounds)
}

/// `E[prod_s Theta_s^{e_s}]` over sparse `(site, exponent)` entries with
/// strictly increasing sites, by the multi-binomial expansion
/// `Theta = theta_L + (theta_R - theta_L) U`.
pub fn theta_sparse_moment(entries: &[(usize, u32)], n: usize, bounds: BoundaryParams) -> Result<f64> {
    if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::contract("sites must be strictly increasing"));
    }
    if entries.iter().any(|&(s, _)| s == 0 || s > n) {
        return Err(Error::contract(format!("site outside 1..={n}")));
    }
    let entries: Vec<(usize, u32)> = entries.iter().copied().filter(|&(_, e)| e > 0).collect();
    let lo = bounds.theta_left();
    let width = bounds.width();

    let mut total = 0.0;
    let mut ls = vec![0u32; entries.len()];
    let mut reduced: Vec<(usize, u32)> = Vec::with_capacity(entries.len());
    loop {
        let mut coeff = 1.0;
        for (&(_, e), &l) in entries.iter().zip(&ls) {
            coeff *= binomial_f64(e, l) * lo.powi((e - l) as i32) * width.powi(l as i32);
        }
        if coeff != 0.0 {
            reduced.clear();
            reduced.extend(
                entries
                    .iter()
                    .zip(&ls)
                    .filter(|(_, &l)| l > 0)
                    .map(|(&(s, _), &l)| (s, l)),
            );
            total += coeff * sparse_uniform_moment(n, &reduced);
        }
        // odometer over 0..=e_j
        let mut j = 0;
        loop {
            if j == ls.len() {
                return Ok(total);
            }
            if ls[j] < entries[j].1 {
                ls[j] += 1;
                break;
            }
            ls[j] = 0;
            j += 1;
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("geometric parameter {theta} must be finite and >= 0")))
    }
}

/// `E[C(eta, k)]` under `nu_theta`, which equals `theta^k`.
pub fn geometric_binom_moment(theta: f64, k: u32) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta.powi(k as i32))
}

/// Stirling numbers of the second kind `S(p, j)` for `p <= 20`.
static STIRLING2: LazyLock<Vec<Vec<u64>>> = LazyLock::new(|| {
    let size = MAX_RAW_MOMENT as usize + 1;
    let mut t = vec![vec![0u64; size]; size];
    t[0][0] = 1;
    for p in 1..size {
        for j in 1..=p {
            t[p][j] = j as u64 * t[p - 1][j] + t[p - 1][j - 1];
        }
    }
    t
});

pub fn stirling2(p: u32, j: u32) -> Result<u64> {
    if p > MAX_RAW_MOMENT {
        return Err(Error::contract(format!("moment order {p} exceeds {MAX_RAW_MOMENT}")));
    }
    Ok(if j > p { 0 } else { STIRLING2[p as usize][j as usize] })
}

/// Coefficients `c_j = S(p, j) j!` with `E[eta^p] = sum_j c_j theta^j` under `nu_theta`.
pub(crate) fn raw_moment_coefficients(p: u32) -> Result<Vec<f64>> {
    if p > MAX_RAW_MOMENT {
        return Err(Error::contract(format!("moment order {p} exceeds {MAX_RAW_MOMENT}")));
    }
    let mut factorial = 1.0;
    let mut out = Vec::with_capacity(p as usize + 1);
    for j in 0..=p {
        if j > 0 {
            factorial *= f64::from(j);
        }
        out.push(STIRLING2[p as usize][j as usize] as f64 * factorial);
    }
    Ok(out)
}

/// `E[eta^p]` under `nu_theta` via factorial moments `j! theta^j`.
pub fn geometric_raw_moment(theta: f64, p: u32) -> Result<f64> {
    check_theta(theta)?;
    let c = raw_moment_coefficients(p)?;
    Ok(c.iter().rev().fold(0.0, |acc, &cj| acc * theta + cj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::geometric_weights;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn reference_product_moments() {
        let v = uniform_orderstat_product_moment(2, &ExponentVector::new(vec![1, 0])).unwrap();
        assert!(rel(v, 1.0 / 3.0) < 1e-15);
        let v = uniform_orderstat_product_moment(3, &ExponentVector::new(vec![1, 1, 0])).unwrap();
        assert!(rel(v, 3.0 / 20.0) < 1e-15);
        for n in 1..30 {
            assert_eq!(uniform_orderstat_product_moment(n, &ExponentVector::zeros(n)).unwrap(), 1.0);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let r = uniform_orderstat_product_moment(3, &ExponentVector::new(vec![1, 0]));
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn exact_rationals_reference() {
        let v = uniform_orderstat_product_moment_exact(3, &ExponentVector::new(vec![1, 1, 0])).unwrap();
        assert_eq!(v, BigRational::new(3.into(), 20.into()));
        let v = uniform_orderstat_product_moment_exact(2, &ExponentVector::new(vec![1, 1])).unwrap();
        assert_eq!(v, BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn theta_moment_reductions() {
        let b = BoundaryParams::new(0.5, 2.5).unwrap();
        for n in 1..12 {
            for i in 1..=n {
                let m1 = theta_moment(i, n, 1, b).unwrap();
                assert!(rel(m1, 0.5 + 2.0 * i as f64 / (n as f64 + 1.0)) < 1e-14);
                assert_eq!(theta_moment(i, n, 0, b).unwrap(), 1.0);
                for p in 0..5 {
                    let w = theta_product_moment(i, &[p], n, b).unwrap();
                    assert!(rel(w, theta_moment(i, n, p, b).unwrap()) < 1e-13);
                }
            }
        }
        let unit = BoundaryParams::new(0.0, 1.0).unwrap();
        for p in 0..6 {
            let t = theta_moment(3, 7, p, unit).unwrap();
            let u = uniform_orderstat_product_moment(7, &ExponentVector::single(7, 3, p).unwrap()).unwrap();
            assert!(rel(t, u) < 1e-14);
        }
    }

    #[test]
    fn theta_moment_index_checks() {
        let b = BoundaryParams::new(0.0, 1.0).unwrap();
        assert!(theta_moment(0, 5, 1, b).is_err());
        assert!(theta_moment(6, 5, 1, b).is_err());
        assert!(theta_product_moment(4, &[1, 1, 1], 5, b).is_err());
        assert!(theta_product_moment(3, &[1, 1, 1], 5, b).is_ok());
    }

    #[test]
    fn pair_window_unit_interval() {
        let b = BoundaryParams::new(0.0, 1.0).unwrap();
        let v = theta_product_moment(1, &[1, 1], 2, b).unwrap();
        assert!(rel(v, 0.25) < 1e-15);
    }

    #[test]
    fn monotone_in_index() {
        let b = BoundaryParams::new(0.3, 1.7).unwrap();
        for p in 0..6 {
            let m: Vec<f64> = (1..=40).map(|i| theta_moment(i, 40, p, b).unwrap()).collect();
            assert!(m.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-15)));
        }
    }

    #[test]
    fn geometric_moments_against_series() {
        assert_eq!(geometric_binom_moment(3.0, 0).unwrap(), 1.0);
        assert_eq!(geometric_binom_moment(2.0, 1).unwrap(), 2.0);
        // E[C(eta, 2)] at theta = 1 by direct summation; tail (1/2)^2000 is nil.
        let w = geometric_weights(1.0, 2000);
        let series: f64 = w
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64) * (n as f64 - 1.0) / 2.0 * p)
            .sum();
        assert!((series - geometric_binom_moment(1.0, 2).unwrap()).abs() < 1e-12);

        assert_eq!(geometric_raw_moment(1.7, 0).unwrap(), 1.0);
        assert!(rel(geometric_raw_moment(1.7, 1).unwrap(), 1.7) < 1e-15);
        assert!(rel(geometric_raw_moment(1.0, 2).unwrap(), 3.0) < 1e-15);
        for &theta in &[0.2, 1.0, 2.5] {
            let w = geometric_weights(theta, 6000);
            for p in 0..8u32 {
                let series: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(n, q)| (n as f64).powi(p as i32) * q)
                    .sum();
                assert!(rel(geometric_raw_moment(theta, p).unwrap(), series) < 1e-11, "theta {theta} p {p}");
            }
        }
        assert!(geometric_raw_moment(1.0, 21).is_err());
        assert!(geometric_raw_moment(-1.0, 2).is_err());
    }

    #[test]
    fn stirling_table() {
        assert_eq!(stirling2(4, 2).unwrap(), 7);
        assert_eq!(stirling2(5, 3).unwrap(), 25);
        assert_eq!(stirling2(0, 0).unwrap(), 1);
        assert_eq!(stirling2(3, 5).unwrap(), 0);
        assert!(stirling2(21, 2).is_err());
    }

    #[test]
    fn equilibrium_factorizes() {
        let b = BoundaryParams::new(1.3, 1.3).unwrap();
        let v = theta_sparse_moment(&[(2, 3), (5, 1), (9, 2)], 10, b).unwrap();
        assert!(rel(v, 1.3f64.powi(6)) < 1e-14);
    }

    #[test]
    fn large_n_is_finite_and_accurate() {
        // E[U_{r:N}] at N = 10^6 against the closed form.
        let n = 1_000_000;
        let b = BoundaryParams::new(0.0, 1.0).unwrap();
        let v = theta_product_moment(250_000, &[1], n, b).unwrap();
        assert!(rel(v, 250_000.0 / 1_000_001.0) < 1e-14);
        let v = theta_product_moment(500_000, &[2, 1], n, b).unwrap();
        assert!(v.is_finite() && (v - 0.125).abs() < 1e-5);
    }
}
