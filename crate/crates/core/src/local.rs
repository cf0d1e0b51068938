//! Local functions of `k` consecutive occupation numbers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Evaluator = dyn Fn(&[u64]) -> f64 + Send + Sync;

/// One term `coeff * n_1^p_1 * ... * n_k^p_k` of a polynomial local function.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, window: &[u64]) -> f64 {
        self.powers
            .iter()
            .zip(window)
            .fold(self.coeff, |acc, (&p, &n)| acc * (n as f64).powi(p as i32))
    }
}

/// A polynomial in the occupations of a window, kept alongside the evaluator
/// so that exact mixture expectations can be assembled term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub k: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(k: usize, terms: Vec<Monomial>) -> Result<Self> {
        if k == 0 {
            return Err(Error::contract("polynomial window size must be positive"));
        }
        if let Some(t) = terms.iter().find(|t| t.powers.len() != k) {
            return Err(Error::contract(format!(
                "monomial has {} powers, expected {k}",
                t.powers.len()
            )));
        }
        if terms.iter().any(|t| !t.coeff.is_finite()) {
            return Err(Error::contract("polynomial coefficient is not finite"));
        }
        Ok(Self { k, terms })
    }

    /// Largest power carried by any single site.
    pub fn site_degree(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.powers.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn eval(&self, window: &[u64]) -> f64 {
        self.terms.iter().map(|t| t.eval(window)).sum()
    }
}

/// Growth class of a local function, used to certify state-space truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `|g| <= bound` everywhere.
    Bounded { bound: f64 },
    /// `|g(n)| <= scale * prod_j (1 + n_j)^degree`.
    Polynomial { degree: u32, scale: f64 },
}

/// A function of `k` consecutive occupation numbers.
#[derive(Clone)]
pub struct LocalFunction {
    k: usize,
    name: String,
    eval: Arc<Evaluator>,
    growth: Growth,
    polynomial: Option<Polynomial>,
}

impl fmt::Debug for LocalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalFunction")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("growth", &self.growth)
            .finish()
    }
}

impl LocalFunction {
    /// A bounded black-box local function. The caller vouches for the bound.
    pub fn bounded<F>(name: &str, k: usize, bound: f64, f: F) -> Result<Self>
    where
        F: Fn(&[u64]) -> f64 + Send + Sync + 'static,
    {
        if k == 0 {
            return Err(Error::contract("dependence set size k must be positive"));
        }
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::contract("bound must be finite and non-negative"));
        }
        Ok(Self {
            k,
            name: name.to_string(),
            eval: Arc::new(f),
            growth: Growth::Bounded { bound },
            polynomial: None,
        })
    }

    /// An unbounded black-box local function with declared polynomial growth.
    pub fn with_growth<F>(name: &str, k: usize, degree: u32, scale: f64, f: F) -> Result<Self>
    where
        F: Fn(&[u64]) -> f64 + Send + Sync + 'static,
    {
        if k == 0 {
            return Err(Error::contract("dependence set size k must be positive"));
        }
        Ok(Self {
            k,
            name: name.to_string(),
            eval: Arc::new(f),
            growth: Growth::Polynomial { degree, scale },
            polynomial: None,
        })
    }

    pub fn polynomial(name: &str, poly: Polynomial) -> Self {
        let p = poly.clone();
        let growth = if poly.total_degree() == 0 {
            Growth::Bounded {
                bound: poly.abs_coeff_sum(),
            }
        } else {
            Growth::Polynomial {
                degree: poly.site_degree(),
                scale: poly.abs_coeff_sum(),
            }
        };
        Self {
            k: poly.k,
            name: name.to_string(),
            eval: Arc::new(move |w: &[u64]| p.eval(w)),
            growth,
            polynomial: Some(poly),
        }
    }

    /// `g(eta) = eta_1`.
    pub fn density() -> Self {
        let poly = Polynomial::new(1, vec![Monomial { coeff: 1.0, powers: vec![1] }])
            .expect("valid monomial");
        Self::polynomial("density", poly)
    }

    /// `g(eta) = eta_1 * eta_2`.
    pub fn pair_product() -> Self {
        let poly = Polynomial::new(2, vec![Monomial { coeff: 1.0, powers: vec![1, 1] }])
            .expect("valid monomial");
        Self::polynomial("pair-product", poly)
    }

    /// `g(eta) = 1(eta_1 = 0)`.
    pub fn indicator_vacuum() -> Self {
        Self::bounded("indicator-vacuum", 1, 1.0, |w| if w[0] == 0 { 1.0 } else { 0.0 })
            .expect("valid bounded function")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.growth, Growth::Bounded { .. })
    }

    pub fn bound(&self) -> Option<f64> {
        match self.growth {
            Growth::Bounded { bound } => Some(bound),
            Growth::Polynomial { .. } => None,
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.polynomial.as_ref()
    }

    /// Evaluates `g` on exactly `k` occupation numbers.
    #[inline]
    pub fn eval(&self, window: &[u64]) -> f64 {
        debug_assert_eq!(window.len(), self.k);
        (self.eval)(window)
    }

    /// Per-site growth degree used for truncation bounds (0 when bounded).
    pub(crate) fn site_degree(&self) -> u32 {
        match self.growth {
            Growth::Bounded { .. } => 0,
            Growth::Polynomial { degree, .. } => degree,
        }
    }

    /// Constant `C` such that `|g(n)| <= C * prod (1+n_j)^d`.
    pub(crate) fn growth_scale(&self) -> f64 {
        match self.growth {
            Growth::Bounded { bound } => bound,
            Growth::Polynomial { scale, .. } => scale,
        }
    }
}
