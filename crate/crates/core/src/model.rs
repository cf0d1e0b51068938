//! The steady state as a mixture of geometric product measures whose
//! parameters are uniform order statistics on `[theta_L, theta_R]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{open_unit, RandomSeed, TAG_CONFIGURATION, TAG_PROFILE};

/// Reservoir parameters. `theta_left == theta_right` is the equilibrium case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    theta_left: f64,
    theta_right: f64,
}

impl BoundaryParams {
    pub fn new(theta_left: f64, theta_right: f64) -> Result<Self> {
        if !(theta_left.is_finite() && theta_right.is_finite()) {
            return Err(Error::domain("reservoir parameters must be finite"));
        }
        if theta_left < 0.0 {
            return Err(Error::domain(format!("theta_L = {theta_left} is negative")));
        }
        if theta_right < theta_left {
            return Err(Error::domain(format!(
                "theta_R = {theta_right} is below theta_L = {theta_left}"
            )));
        }
        Ok(Self {
            theta_left,
            theta_right,
        })
    }

    /// Same as [`BoundaryParams::new`] but rejects the degenerate equilibrium case.
    pub fn strict(theta_left: f64, theta_right: f64) -> Result<Self> {
        let b = Self::new(theta_left, theta_right)?;
        b.require_strict()?;
        Ok(b)
    }

    pub(crate) fn require_strict(&self) -> Result<()> {
        if self.theta_right > self.theta_left {
            Ok(())
        } else {
            Err(Error::domain("theta_L < theta_R is required here"))
        }
    }

    pub fn theta_left(&self) -> f64 {
        self.theta_left
    }

    pub fn theta_right(&self) -> f64 {
        self.theta_right
    }

    pub fn width(&self) -> f64 {
        self.theta_right - self.theta_left
    }

    pub fn is_equilibrium(&self) -> bool {
        self.theta_left == self.theta_right
    }

    /// Linear density profile `rho(x) = theta_L + (theta_R - theta_L) x` on `[0, 1]`.
    #[inline]
    pub fn rho(&self, x: f64) -> f64 {
        self.theta_left + self.width() * x
    }
}

/// Sorted realization of the random parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterProfile {
    values: Vec<f64>,
    bounds: BoundaryParams,
}

impl ParameterProfile {
    pub fn new(values: Vec<f64>, bounds: BoundaryParams) -> Result<Self> {
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::contract("parameter profile is not non-decreasing"));
        }
        if values
            .iter()
            .any(|&v| !(bounds.theta_left..=bounds.theta_right).contains(&v))
        {
            return Err(Error::contract("parameter profile leaves [theta_L, theta_R]"));
        }
        Ok(Self { values, bounds })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> BoundaryParams {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Occupation numbers of the `N` sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    occupations: Vec<u64>,
}

impl Configuration {
    pub fn new(occupations: Vec<u64>) -> Self {
        Self { occupations }
    }

    pub fn occupations(&self) -> &[u64] {
        &self.occupations
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.occupations
    }
}

impl From<Vec<u64>> for Configuration {
    fn from(v: Vec<u64>) -> Self {
        Self::new(v)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("geometric parameter {theta} must be finite and >= 0")))
    }
}

/// `nu_theta(n) = (1/(1+theta)) (theta/(1+theta))^n`; mean `theta`.
pub fn geometric_pmf(theta: f64, n: u64) -> Result<f64> {
    check_theta(theta)?;
    Ok(geometric_pmf_unchecked(theta, n))
}

#[inline]
pub(crate) fn geometric_pmf_unchecked(theta: f64, n: u64) -> f64 {
    if theta == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ratio = theta / (1.0 + theta);
    ratio.powf(n as f64) / (1.0 + theta)
}

/// Probability weights `nu_theta(0..=m)`, computed by the ratio recursion.
pub(crate) fn geometric_weights(theta: f64, m: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(m + 1);
    if theta == 0.0 {
        w.push(1.0);
        w.resize(m + 1, 0.0);
        return w;
    }
    let ratio = theta / (1.0 + theta);
    let mut p = 1.0 / (1.0 + theta);
    for _ in 0..=m {
        w.push(p);
        p *= ratio;
    }
    w
}

/// Inverse-CDF draw from `nu_theta` given `u` in (0, 1]: `P(eta >= n) = q^n`.
#[inline]
pub(crate) fn geometric_from_uniform(theta: f64, u: f64) -> u64 {
    if theta == 0.0 {
        return 0;
    }
    // ln q = ln(theta/(1+theta)) = -ln(1 + 1/theta)
    let ln_q = -(1.0 / theta).ln_1p();
    let x = (u.ln() / ln_q).floor();
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x as u64
    }
}

/// Draws the sorted parameters `theta_L + (theta_R - theta_L) U_{i:N}`.
pub fn sample_parameter_profile(
    n: usize,
    bounds: BoundaryParams,
    seed: RandomSeed,
) -> Result<ParameterProfile> {
    if n == 0 {
        return Err(Error::contract("system size N must be at least 1"));
    }
    let mut rng = seed.rng();
    let mut u: Vec<f64> = (0..n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
    u.sort_unstable_by(f64::total_cmp);
    let width = bounds.width();
    let values = u
        .into_iter()
        .map(|x| (bounds.theta_left + width * x).min(bounds.theta_right))
        .collect();
    Ok(ParameterProfile { values, bounds })
}

/// Draws site `i` from `nu_{profile[i]}`, one uniform per site.
pub fn sample_configuration(profile: &ParameterProfile, seed: RandomSeed) -> Configuration {
    let mut rng = seed.rng();
    let occupations = profile
        .values
        .iter()
        .map(|&theta| geometric_from_uniform(theta, open_unit(&mut rng)))
        .collect();
    Configuration { occupations }
}

/// One steady-state sample: the hidden parameter profile and the configuration.
pub fn sample_ness(
    n: usize,
    bounds: BoundaryParams,
    seed: RandomSeed,
) -> Result<(ParameterProfile, Configuration)> {
    let profile = sample_parameter_profile(n, bounds, seed.derive(TAG_PROFILE))?;
    let eta = sample_configuration(&profile, seed.derive(TAG_CONFIGURATION));
    Ok((profile, eta))
}
