//! Fields `X_N(g; phi) = (1/N) sum_{i=0}^{N-k} (tau_i g)[eta] phi(i/(N+1))`,
//! empirical profiles and block averages.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::LocalFunction;
use crate::model::Configuration;

/// Regularity class declared for a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    Continuous,
    BoundedDerivative,
    Smooth,
}

/// A test function `phi: [0, 1] -> R`.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    smoothness: Smoothness,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    coefficients: Option<Vec<f64>>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("coefficients", &self.coefficients)
            .finish()
    }
}

impl TestFunction {
    pub fn new<F>(name: &str, smoothness: Smoothness, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            smoothness,
            eval: Arc::new(f),
            coefficients: None,
        }
    }

    /// `phi(x) = c_0 + c_1 x + ... + c_d x^d`.
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::contract("test-function coefficient is not finite"));
        }
        let c = coefficients.clone();
        Ok(Self {
            name: format!("poly{coefficients:?}"),
            smoothness: Smoothness::Smooth,
            eval: Arc::new(move |x| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)),
            coefficients: Some(coefficients),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c]).expect("finite constant")
    }

    /// `phi(x) = x`.
    pub fn identity() -> Self {
        Self::polynomial(vec![0.0, 1.0]).expect("finite coefficients")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Monomial coefficients when the function was built by [`TestFunction::polynomial`].
    pub fn coefficients(&self) -> Option<&[f64]> {
        self.coefficients.as_deref()
    }

    /// Exactly zero on `[0, 1]`, as far as the representation can tell.
    pub fn is_zero(&self) -> bool {
        self.coefficients
            .as_ref()
            .is_some_and(|c| c.iter().all(|&x| x == 0.0))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }
}

/// Weighted atoms `(i/(N+1), (tau_i g)[eta] / N)` for `i = 0..=N-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProfile {
    atoms: Vec<(f64, f64)>,
}

impl EmpiricalProfile {
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `sum_i w_i phi(x_i)`, summed in atom order.
    pub fn pair(&self, phi: &TestFunction) -> f64 {
        self.atoms.iter().map(|&(x, w)| w * phi.eval(x)).sum()
    }
}

/// `(tau_i g)[eta] = g(eta_{i+1}, ..., eta_{i+k})` with sites counted from 1.
pub fn shift_apply(g: &LocalFunction, i: usize, eta: &Configuration) -> Result<f64> {
    let occ = eta.occupations();
    if i + g.k() > occ.len() {
        return Err(Error::contract(format!(
            "window {}..{} exceeds chain length {}",
            i + 1,
            i + g.k(),
            occ.len()
        )));
    }
    Ok(g.eval(&occ[i..i + g.k()]))
}

fn check_fits(g: &LocalFunction, eta: &Configuration) -> Result<()> {
    if eta.len() < g.k() {
        return Err(Error::contract(format!(
            "chain length {} is shorter than the window size {}",
            eta.len(),
            g.k()
        )));
    }
    Ok(())
}

pub fn empirical_profile(g: &LocalFunction, eta: &Configuration) -> Result<EmpiricalProfile> {
    check_fits(g, eta)?;
    let n = eta.len();
    let nf = n as f64;
    let denom = nf + 1.0;
    let atoms = eta
        .occupations()
        .windows(g.k())
        .enumerate()
        .map(|(i, w)| (i as f64 / denom, g.eval(w) / nf))
        .collect();
    Ok(EmpiricalProfile { atoms })
}

/// `X_N(g; phi)`; equal to `empirical_profile(g, eta).pair(phi)` bit for bit.
pub fn field_value(g: &LocalFunction, phi: &TestFunction, eta: &Configuration) -> Result<f64> {
    check_fits(g, eta)?;
    let nf = eta.len() as f64;
    let denom = nf + 1.0;
    Ok(eta
        .occupations()
        .windows(g.k())
        .enumerate()
        .map(|(i, w)| g.eval(w) / nf * phi.eval(i as f64 / denom))
        .sum())
}

/// Mean occupation over `|j - i| <= floor(eps N)` around site `i` (1-based).
pub fn block_average(eta: &Configuration, i: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::contract(format!("block radius eps = {eps} must lie in (0, 1)")));
    }
    let n = eta.len();
    let w = (eps * n as f64).floor() as usize;
    if i <= w || i + w > n {
        return Err(Error::contract(format!(
            "block {}..={} around site {i} leaves 1..={n}",
            i as i64 - w as i64,
            i + w
        )));
    }
    let block = &eta.occupations()[i - 1 - w..i + w];
    Ok(block.iter().map(|&x| x as f64).sum::<f64>() / block.len() as f64)
}
