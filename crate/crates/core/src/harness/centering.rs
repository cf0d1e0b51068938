use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::TestFunction;
use crate::local::{LocalFunction, Polynomial};
use crate::model::BoundaryParams;
use crate::moments::{raw_moment_coefficients, theta_product_moment};
use crate::quadrature::pairwise_sum;

/// Largest total degree accepted by [`exact_field_mean`].
pub const MAX_CENTERING_DEGREE: u32 = 6;
/// Largest window accepted by [`exact_field_mean`].
pub const MAX_CENTERING_WINDOW: usize = 3;

/// `E[g | Theta]` written in the basis `prod_j Theta_{j}^{l_j}` of the window.
fn conditional_expansion(poly: &Polynomial) -> Result<Vec<(Vec<u32>, f64)>> {
    let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for term in &poly.terms {
        let per_site = term
            .powers
            .iter()
            .map(|&p| raw_moment_coefficients(p))
            .collect::<Result<Vec<_>>>()?;
        let mut l = vec![0u32; poly.k];
        loop {
            let c = per_site
                .iter()
                .zip(&l)
                .fold(term.coeff, |acc, (cs, &lj)| acc * cs[lj as usize]);
            if c != 0.0 {
                *acc.entry(l.clone()).or_insert(0.0) += c;
            }
            let mut j = 0;
            while j < poly.k {
                if l[j] < term.powers[j] {
                    l[j] += 1;
                    break;
                }
                l[j] = 0;
                j += 1;
            }
            if j == poly.k {
                break;
            }
        }
    }
    Ok(acc.into_iter().filter(|(_, c)| *c != 0.0).collect())
}

/// `E[X_N(g; phi)]` under the steady state, exact up to rounding, for a
/// polynomial `g` of window at most 3 and degree at most 6.
pub fn exact_field_mean(
    g: &LocalFunction,
    phi: &TestFunction,
    n: usize,
    bounds: BoundaryParams,
) -> Result<f64> {
    let poly = g.as_polynomial().ok_or_else(|| {
        Error::contract(format!("exact centering needs a polynomial g, got '{}'", g.name()))
    })?;
    if poly.k > MAX_CENTERING_WINDOW {
        return Err(Error::contract(format!(
            "window {} exceeds the centering cap {MAX_CENTERING_WINDOW}",
            poly.k
        )));
    }
    if poly.total_degree() > MAX_CENTERING_DEGREE {
        return Err(Error::contract(format!(
            "degree {} exceeds the centering cap {MAX_CENTERING_DEGREE}",
            poly.total_degree()
        )));
    }
    if n < poly.k {
        return Err(Error::contract(format!("N = {n} is shorter than the window {}", poly.k)));
    }
    let basis = conditional_expansion(poly)?;
    let nf = n as f64;
    let terms = (0..=n - poly.k)
        .into_par_iter()
        .map(|i| {
            let mut e = 0.0;
            for (exps, c) in &basis {
                e += c * theta_product_moment(i + 1, exps, n, bounds)?;
            }
            Ok(e / nf * phi.eval(i as f64 / (nf + 1.0)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}
