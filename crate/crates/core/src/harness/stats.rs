use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

/// Least-squares line through `(ln N, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

/// Mean and standard error with pairwise summation, so the result depends only
/// on the order of `values`.
pub fn mean_estimate(values: &[f64]) -> MeanEstimate {
    let n = values.len();
    if n == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            standard_error: f64::NAN,
        };
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return MeanEstimate {
            mean,
            standard_error: f64::NAN,
        };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    MeanEstimate {
        mean,
        standard_error: (var / n as f64).sqrt(),
    }
}

/// `sup_x |F_n(x) - cdf(x)|`, evaluated at the sorted sample points from both
/// sides. The left limit `cdf(x-)` is taken as `cdf` at the next float below
/// `x`, so a point-mass cdf `1{x >= c}` against samples all equal to `c`
/// gives 0.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::contract(format!(
            "KS statistic needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::contract("KS samples contain NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let above = (i + 1) as f64 / n - cdf(x);
        let below = cdf(x.next_down()) - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::contract(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::contract(format!(
            "slope fit needs positive coordinates, got ({x}, {y})"
        )));
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = pairwise_sum(&lx) / m;
    let my = pairwise_sum(&ly) / m;
    let sxx = pairwise_sum(&lx.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    if sxx == 0.0 {
        return Err(Error::contract("slope fit needs at least two distinct N"));
    }
    let sxy = pairwise_sum(
        &lx.iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .collect::<Vec<_>>(),
    );
    let syy = pairwise_sum(&ly.iter().map(|y| (y - my) * (y - my)).collect::<Vec<_>>());
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res = pairwise_sum(
            &lx.iter()
                .zip(&ly)
                .map(|(x, y)| {
                    let r = y - intercept - slope * x;
                    r * r
                })
                .collect::<Vec<_>>(),
        );
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}
