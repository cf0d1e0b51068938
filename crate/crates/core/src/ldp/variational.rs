//! The two variational problems over monotone parameter profiles,
//!
//! ```text
//! sup_u [ int F(u(x), phi(x)) dx - J(u) ]      and      inf_u [ int I(u(x), mu(x)) dx + J(u) ],
//! ```
//!
//! solved by spectral projected gradient (Barzilai–Borwein steps with a
//! nonmonotone Armijo search) in the variables `v = (u_0, d_1, ..., d_M)`.
//! The feasible set `{u_0 >= theta_L, d_j >= delta_min, u_0 + sum d_j = theta_R}`
//! is a shifted simplex, so projection is a sort and a threshold.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::free_energy::{FreeEnergyEval, FreeEnergySpec};
use super::profile::{MonotoneProfile, DEFAULT_GRID_CELLS, MIN_INCREMENT_FRACTION};
use crate::asymptotics::QuadratureSpec;
use crate::error::{Error, Result};
use crate::fields::TestFunction;
use crate::model::BoundaryParams;
use crate::quadrature::{gauss_legendre, pairwise_sum, with_panel_doubling};
use crate::rng::RandomSeed;

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;

/// Controls of the profile optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Grid cells `M` of the profile.
    pub grid_cells: usize,
    /// Gauss–Legendre nodes per grid cell for the `x`-integral.
    pub nodes_per_cell: usize,
    pub max_iter: usize,
    /// First step, in units of one reference increment `(theta_R - theta_L)/M`
    /// per unit of the largest gradient entry.
    pub step: f64,
    /// Backtracking factor of the line search.
    pub shrink: f64,
    /// Stop once the projected gradient is below this in sup norm.
    pub tol: f64,
    /// Starts: the linear profile plus `multistarts - 1` random perturbations.
    pub multistarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_cells: DEFAULT_GRID_CELLS,
            nodes_per_cell: 3,
            max_iter: 500,
            step: 1.0,
            shrink: 0.5,
            tol: 1e-10,
            multistarts: 4,
            seed: 0x5eed,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_cells == 0 || self.nodes_per_cell == 0 || self.multistarts == 0 {
            return Err(Error::contract("solver needs grid_cells, nodes_per_cell and multistarts >= 1"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::contract("solver shrink factor must lie in (0, 1)"));
        }
        if !(self.step > 0.0 && self.tol > 0.0) {
            return Err(Error::contract("solver step and tolerance must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartReport {
    pub initial_value: f64,
    pub final_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient: f64,
}

/// Best value over all starts, its profile, and every local optimum found.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalResult {
    pub value: f64,
    pub profile: MonotoneProfile,
    pub starts: Vec<StartReport>,
}

/// Gauss–Legendre nodes `tau` and weights on `[0, 1]`, repeated in every cell.
struct Layout {
    cells: usize,
    tau: Vec<f64>,
    omega: Vec<f64>,
}

impl Layout {
    fn new(cells: usize, nodes: usize) -> Self {
        let (x, w) = gauss_legendre(nodes);
        Self {
            cells,
            tau: x.iter().map(|xi| 0.5 * (xi + 1.0)).collect(),
            omega: w.iter().map(|wi| 0.5 * wi).collect(),
        }
    }

    fn per_cell(&self) -> usize {
        self.tau.len()
    }

    fn abscissae(&self) -> Vec<f64> {
        let m = self.cells as f64;
        (0..self.cells)
            .flat_map(|c| self.tau.iter().map(move |t| (c as f64 + t) / m))
            .collect()
    }

    /// `u` at every node for the variables `v = (u_0, d)`.
    fn positions(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells * self.per_cell());
        let mut base = v[0];
        for c in 0..self.cells {
            let d = v[c + 1];
            out.extend(self.tau.iter().map(|t| base + t * d));
            base += d;
        }
        out
    }
}

enum Integrand<'a> {
    /// `F(u, phi_q)` at each node; maximized.
    FreeEnergy { eval: FreeEnergyEval<'a>, phi: Vec<f64> },
    /// `I(u, mu_q)` at each node; minimized.
    Rate { eval: FreeEnergyEval<'a>, mu: Vec<f64> },
}

struct Problem<'a> {
    layout: Layout,
    bounds: BoundaryParams,
    lower: Vec<f64>,
    integrand: Integrand<'a>,
}

impl Problem<'_> {
    fn reference(&self) -> f64 {
        self.bounds.width() / self.layout.cells as f64
    }

    /// Value of the minimized objective and, optionally, its gradient.
    fn evaluate(&self, v: &[f64], grad: bool) -> Result<(f64, Vec<f64>)> {
        let m = self.layout.cells;
        let mf = m as f64;
        let u = self.layout.positions(v);
        let per = self.layout.per_cell();
        // (value, d/dtheta) per node, with the sign of the minimized objective
        let node: Vec<(f64, f64)> = u
            .par_iter()
            .enumerate()
            .map(|(q, &uq)| -> Result<(f64, f64)> {
                match &self.integrand {
                    Integrand::FreeEnergy { eval, phi } => {
                        let l = phi[q];
                        if l == 0.0 {
                            return Ok((0.0, 0.0));
                        }
                        let f = eval.value(uq, l)?;
                        let d = if grad { eval.d_theta(uq, l)? } else { 0.0 };
                        Ok((-f, -d))
                    }
                    Integrand::Rate { eval, mu } => {
                        let r = if eval.k() == 1 {
                            eval.rate_k1(uq, mu[q], 0.0)?
                        } else {
                            eval.rate(uq, mu[q])?
                        };
                        if !r.value.is_finite() {
                            return Ok((f64::INFINITY, 0.0));
                        }
                        let d = if grad && r.lambda != 0.0 { -eval.d_theta(uq, r.lambda)? } else { 0.0 };
                        Ok((r.value, d))
                    }
                }
            })
            .collect::<Result<_>>()?;

        let terms: Vec<f64> = node
            .iter()
            .enumerate()
            .map(|(q, (val, _))| self.layout.omega[q % per] * val / mf)
            .collect();
        let reference = self.reference();
        let j = -pairwise_sum(&v[1..].iter().map(|d| (d / reference).ln()).collect::<Vec<_>>()) / mf;
        let value = pairwise_sum(&terms) + j;
        if !grad {
            return Ok((value, Vec::new()));
        }

        // G_q = w_q dtheta; cell totals and tau-weighted totals
        let mut cell_sum = vec![0.0; m];
        let mut cell_frac = vec![0.0; m];
        for (q, (_, d)) in node.iter().enumerate() {
            let gq = self.layout.omega[q % per] * d / mf;
            cell_sum[q / per] += gq;
            cell_frac[q / per] += self.layout.tau[q % per] * gq;
        }
        let mut g = vec![0.0; m + 1];
        let mut suffix = 0.0;
        for c in (0..m).rev() {
            g[c + 1] = suffix + cell_frac[c] - 1.0 / (mf * v[c + 1]);
            suffix += cell_sum[c];
        }
        g[0] = suffix;
        Ok((value, g))
    }

    /// Euclidean projection onto the feasible set.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let total = self.bounds.theta_right() - self.lower.iter().sum::<f64>();
        let y: Vec<f64> = v.iter().zip(&self.lower).map(|(a, b)| a - b).collect();
        let mut sorted = y.clone();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut cum = 0.0;
        let mut tau = 0.0;
        for (j, &s) in sorted.iter().enumerate() {
            cum += s;
            let t = (cum - total) / (j + 1) as f64;
            if s - t > 0.0 {
                tau = t;
            }
        }
        y.iter().zip(&self.lower).map(|(yi, lb)| lb + (yi - tau).max(0.0)).collect()
    }

    fn to_profile(&self, v: &[f64]) -> Result<MonotoneProfile> {
        MonotoneProfile::from_increments(v[0], v[1..].to_vec(), self.bounds)
    }

    fn linear_start(&self) -> Vec<f64> {
        let mut v = vec![self.reference(); self.layout.cells + 1];
        v[0] = self.bounds.theta_left();
        v
    }

    fn random_start(&self, seed: RandomSeed) -> Vec<f64> {
        let mut rng = seed.rng();
        let width = self.bounds.width();
        let u0 = self.bounds.theta_left() + 0.05 * width * rng.random::<f64>();
        let raw: Vec<f64> = (0..self.layout.cells)
            .map(|_| (0.5 * (2.0 * rng.random::<f64>() - 1.0)).exp())
            .collect();
        let scale = (self.bounds.theta_right() - u0) / raw.iter().sum::<f64>();
        let mut v = Vec::with_capacity(raw.len() + 1);
        v.push(u0);
        v.extend(raw.iter().map(|r| r * scale));
        self.project(&v)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Run {
    best: Vec<f64>,
    best_value: f64,
    report: StartReport,
    stalled_at_start: bool,
}

fn spg(problem: &Problem<'_>, start: Vec<f64>, cfg: &SolverConfig) -> Result<Run> {
    let mut x = start;
    let (mut f, mut g) = problem.evaluate(&x, true)?;
    let mut best = (f, x.clone());
    let mut report = StartReport {
        initial_value: f,
        final_value: f,
        iterations: 0,
        converged: false,
        projected_gradient: f64::NAN,
    };
    if !f.is_finite() {
        return Ok(Run {
            best: best.1,
            best_value: f,
            report,
            stalled_at_start: false,
        });
    }
    let reference = problem.reference();
    let reset_step = |g: &[f64]| cfg.step * reference / sup_norm(g).max(1e-300);
    let mut alpha = reset_step(&g);
    let mut history: VecDeque<f64> = VecDeque::from([f]);
    let mut stalled_at_start = false;

    for it in 0..cfg.max_iter {
        let unit: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
        let pg: Vec<f64> = problem.project(&unit).iter().zip(&x).map(|(p, a)| p - a).collect();
        report.projected_gradient = sup_norm(&pg);
        if report.projected_gradient <= cfg.tol {
            report.converged = true;
            break;
        }
        let stepped: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        let dir: Vec<f64> = problem.project(&stepped).iter().zip(&x).map(|(p, a)| p - a).collect();
        let slope = dot(&g, &dir);
        if slope >= 0.0 {
            stalled_at_start |= it == 0;
            break;
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let (ft, gt) = problem.evaluate(&trial, true)?;
            if ft <= f_ref + ARMIJO * t * slope {
                break Some((trial, ft, gt));
            }
            t *= cfg.shrink;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((xn, fnew, gn)) = accepted else {
            stalled_at_start |= it == 0;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        alpha = if sy > 0.0 { dot(&s, &s) / sy } else { reset_step(&gn) };
        x = xn;
        f = fnew;
        g = gn;
        history.push_back(f);
        if history.len() > HISTORY {
            history.pop_front();
        }
        if f < best.0 {
            best = (f, x.clone());
        }
        report.iterations = it + 1;
    }
    report.final_value = best.0;
    Ok(Run {
        best: best.1,
        best_value: best.0,
        report,
        stalled_at_start,
    })
}

/// Runs every start in parallel and keeps the lowest minimized value.
fn solve(problem: &Problem<'_>, cfg: &SolverConfig) -> Result<(f64, Vec<f64>, Vec<StartReport>)> {
    let runs: Vec<Run> = (0..cfg.multistarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                problem.linear_start()
            } else {
                problem.random_start(RandomSeed::new(cfg.seed, r as u64))
            };
            spg(problem, start, cfg)
        })
        .collect::<Result<_>>()?;
    if runs.iter().all(|r| r.stalled_at_start) {
        let diag: Vec<String> = runs
            .iter()
            .map(|r| format!("f0 = {:e}, |Pg| = {:e}", r.report.initial_value, r.report.projected_gradient))
            .collect();
        return Err(Error::Optimization(format!(
            "no start made line-search progress ({})",
            diag.join("; ")
        )));
    }
    // later starts must beat the incumbent by more than rounding noise
    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        let incumbent = runs[best].best_value;
        if r.best_value < incumbent - 1e-12 * incumbent.abs().max(1.0) || !incumbent.is_finite() && r.best_value.is_finite() {
            best = i;
        }
    }
    let reports = runs.iter().map(|r| r.report.clone()).collect();
    let run = &runs[best];
    Ok((run.best_value, run.best.clone(), reports))
}

fn problem_lower(bounds: BoundaryParams, cells: usize) -> Vec<f64> {
    let mut lower = vec![MIN_INCREMENT_FRACTION * bounds.width(); cells + 1];
    lower[0] = bounds.theta_left();
    lower
}

/// `theta` bound that covers every finite-difference probe above `theta_R`.
fn theta_probe_max(bounds: BoundaryParams) -> f64 {
    let top = bounds.theta_right();
    top + 3e-6 * top.max(1.0)
}

/// `sup_u [ int F(u(x), phi(x); g) dx - J(u) ]` over monotone profiles.
pub fn annealed_free_energy(
    phi: &TestFunction,
    spec: &FreeEnergySpec,
    bounds: BoundaryParams,
    solver: &SolverConfig,
) -> Result<VariationalResult> {
    bounds.require_strict()?;
    solver.validate()?;
    let layout = Layout::new(solver.grid_cells, solver.nodes_per_cell);
    let phi_nodes: Vec<f64> = layout.abscissae().iter().map(|&x| phi.eval(x)).collect();
    if phi_nodes.iter().any(|p| !p.is_finite()) {
        return Err(Error::contract("test function is not finite on [0, 1]"));
    }
    let reach = sup_norm(&phi_nodes);
    let eval = FreeEnergyEval::new(spec, theta_probe_max(bounds), reach)?;
    let problem = Problem {
        layout,
        bounds,
        lower: problem_lower(bounds, solver.grid_cells),
        integrand: Integrand::FreeEnergy { eval, phi: phi_nodes },
    };
    let (f, v, starts) = solve(&problem, solver)?;
    Ok(VariationalResult {
        value: -f,
        profile: problem.to_profile(&v)?,
        starts: starts
            .into_iter()
            .map(|s| StartReport {
                initial_value: -s.initial_value,
                final_value: -s.final_value,
                ..s
            })
            .collect(),
    })
}

/// `inf_u [ int I(u(x), mu(x); g) dx + J(u) ]` over monotone profiles.
pub fn profile_rate(
    mu_density: &TestFunction,
    spec: &FreeEnergySpec,
    bounds: BoundaryParams,
    solver: &SolverConfig,
) -> Result<VariationalResult> {
    bounds.require_strict()?;
    solver.validate()?;
    let layout = Layout::new(solver.grid_cells, solver.nodes_per_cell);
    let mu: Vec<f64> = layout.abscissae().iter().map(|&x| mu_density.eval(x)).collect();
    if mu.iter().any(|p| !p.is_finite()) {
        return Err(Error::contract("target density is not finite on [0, 1]"));
    }
    let reach = spec.lambda_min.abs().max(spec.lambda_max.abs());
    let eval = FreeEnergyEval::new(spec, theta_probe_max(bounds), reach)?;
    let problem = Problem {
        layout,
        bounds,
        lower: problem_lower(bounds, solver.grid_cells),
        integrand: Integrand::Rate { eval, mu },
    };
    let (f, v, starts) = solve(&problem, solver)?;
    Ok(VariationalResult {
        value: f,
        profile: problem.to_profile(&v)?,
        starts,
    })
}

/// `int_0^1 F(u(x), phi(x); g) dx` with `u` interpolated linearly on its grid.
pub fn inhom_free_energy(
    u: &MonotoneProfile,
    phi: &TestFunction,
    spec: &FreeEnergySpec,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if phi.is_zero() {
        return Ok(0.0);
    }
    let cells = u.cells();
    let grid = u.grid();
    let (gx, gw) = gauss_legendre(quad.nodes);
    let pass = |sub: usize| -> Result<f64> {
        let panels = cells * sub;
        let h = 1.0 / panels as f64;
        let mut points = Vec::with_capacity(panels * gx.len());
        for p in 0..panels {
            let cell = p / sub;
            for (xi, wi) in gx.iter().zip(&gw) {
                let x = (p as f64 + 0.5 * (xi + 1.0)) * h;
                let frac = x * cells as f64 - cell as f64;
                let theta = grid[cell] + frac * (grid[cell + 1] - grid[cell]);
                points.push((theta, phi.eval(x), 0.5 * h * wi));
            }
        }
        let reach = points.iter().fold(0.0f64, |a, p| a.max(p.1.abs()));
        let eval = FreeEnergyEval::new(spec, u.bounds().theta_right(), reach)?;
        let terms: Vec<f64> = points
            .par_iter()
            .map(|&(theta, l, w)| Ok(w * eval.value(theta, l)?))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms))
    };
    let max_sub = (quad.max_panels / quad.panels).max(2);
    with_panel_doubling(pass, 1, max_sub, quad.convergence_tol, "inhomogeneous free energy")
}
