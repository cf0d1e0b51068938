//! Composite Gauss–Legendre rules on `[0, 1]` and `[0, 1]^2`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Nodes and weights of the composite rule with `panels` equal panels on `[a, b]`.
pub(crate) fn composite_rule(a: f64, b: f64, panels: usize, nodes: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(nodes);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * nodes);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

/// Sum in a fixed binary-tree order, so the result does not depend on how
/// the terms were produced.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Evaluates `f` at every point in parallel, keeping input order.
fn eval_all<F>(points: &[f64], f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    points.par_iter().map(|&x| f(x)).collect()
}

/// `int_0^1 f` by the composite rule.
pub(crate) fn integrate_unit<F>(f: &F, panels: usize, nodes: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let rule = composite_rule(0.0, 1.0, panels, nodes);
    let xs: Vec<f64> = rule.iter().map(|r| r.0).collect();
    let fx = eval_all(&xs, f)?;
    let terms: Vec<f64> = rule.iter().zip(&fx).map(|((_, w), v)| w * v).collect();
    Ok(pairwise_sum(&terms))
}

/// `int_0^1 int_0^1 (min(s,t) - s t) f(s) f(t) ds dt`.
///
/// Off-diagonal panel pairs use the tensor rule. Each diagonal panel is split
/// along `s = t`; on the lower triangle the kernel is `t (1 - s)` and the inner
/// `t`-integral runs over `[a, s]`, so both halves are smooth. The upper half
/// equals the lower one by symmetry.
pub(crate) fn integrate_bridge_kernel<F>(f: &F, panels: usize, nodes: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (gx, gw) = gauss_legendre(nodes);
    let h = 1.0 / panels as f64;
    let rule = composite_rule(0.0, 1.0, panels, nodes);
    let mut points: Vec<f64> = rule.iter().map(|r| r.0).collect();
    // inner triangle points: for each panel, outer node i, inner node j
    for p in 0..panels {
        let a = h * p as f64;
        for i in 0..nodes {
            let s = rule[p * nodes + i].0;
            for &xj in &gx {
                points.push(a + 0.5 * (s - a) * (xj + 1.0));
            }
        }
    }
    let fx = eval_all(&points, f)?;
    let (outer, inner) = fx.split_at(panels * nodes);

    let kernel = |s: f64, t: f64| s.min(t) - s * t;
    let mut terms = Vec::with_capacity(panels * panels);
    for p in 0..panels {
        for q in 0..panels {
            let mut acc = 0.0;
            if p == q {
                let a = h * p as f64;
                for i in 0..nodes {
                    let (s, ws) = rule[p * nodes + i];
                    let half = 0.5 * (s - a);
                    let mut tri = 0.0;
                    for j in 0..nodes {
                        let t = a + half * (gx[j] + 1.0);
                        tri += half * gw[j] * t * inner[(p * nodes + i) * nodes + j];
                    }
                    acc += 2.0 * ws * (1.0 - s) * outer[p * nodes + i] * tri;
                }
            } else {
                for i in 0..nodes {
                    let (s, ws) = rule[p * nodes + i];
                    for j in 0..nodes {
                        let (t, wt) = rule[q * nodes + j];
                        acc += ws * wt * kernel(s, t) * outer[p * nodes + i] * outer[q * nodes + j];
                    }
                }
            }
            terms.push(acc);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Runs `rule(panels)` with panel doubling until two successive values agree
/// to `tol` (relative to `max(1, |value|)`).
pub(crate) fn with_panel_doubling<R>(
    mut rule: R,
    panels: usize,
    max_panels: usize,
    tol: f64,
    what: &str,
) -> Result<f64>
where
    R: FnMut(usize) -> Result<f64>,
{
    let mut p = panels.max(1);
    let mut prev = rule(p)?;
    while p < max_panels {
        p *= 2;
        let next = rule(p)?;
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::quadrature(format!(
        "{what}: panel doubling up to {max_panels} panels did not reach tolerance {tol:e}"
    )))
}
