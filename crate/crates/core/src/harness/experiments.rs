use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::centering::exact_field_mean;
use super::stats::{fit_log_slope, ks_statistic, mean_estimate, MeanEstimate, SlopeFit};
use super::{par_map_replicas, real, validate_ladder, ExperimentConfig, Table, Verdict};
use crate::asymptotics::{bridge_covariance, clt_variances, lln_limit, CltVariances};
use crate::duality::le_deviation;
use crate::error::{Error, Result};
use crate::fields::field_value;
use crate::model::{sample_ness, sample_parameter_profile, BoundaryParams};
use crate::quadrature::pairwise_sum;
use crate::rng::RandomSeed;

pub const MIN_CLT_REPLICAS: usize = 2000;
pub const MIN_BRIDGE_REPLICAS: usize = 2000;
pub const MIN_CONCENTRATION_REPLICAS: usize = 10_000;

/// Asymptotic 1% critical value of `sqrt(n) D_n`.
const KS_CRITICAL_1PCT: f64 = 1.6276;
const KS_SLACK: f64 = 1.4;

/// Replicas per accumulation chunk in [`orderstat_marginals`]; fixed so that
/// sums do not depend on the worker count.
const MARGINAL_CHUNK: usize = 4096;

fn size_seed(seed: RandomSeed, n: usize) -> RandomSeed {
    seed.derive(n as u64)
}

fn expected_theta(i: usize, n: usize, bounds: BoundaryParams) -> f64 {
    bounds.theta_left() + bounds.width() * i as f64 / (n as f64 + 1.0)
}

fn require_replicas(what: &str, replicas: usize, min: usize) -> Result<()> {
    if replicas < min {
        return Err(Error::contract(format!(
            "{what} needs at least {min} replicas, got {replicas}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnRow {
    pub n: usize,
    pub mean_abs_deviation: f64,
    pub standard_error: f64,
    /// `5 sqrt(sigma_T^2 + sigma_E^2) / sqrt(N)`.
    pub clt_band: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LlnReport {
    pub limit: f64,
    pub variances: CltVariances,
    pub rows: Vec<LlnRow>,
    pub verdicts: Vec<Verdict>,
}

impl LlnReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["n", "mean_abs_deviation", "standard_error", "clt_band"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                real(r.mean_abs_deviation),
                real(r.standard_error),
                real(r.clt_band),
            ]);
        }
        t
    }
}

/// Mean of `|X_N(g; phi) - lln_limit|` along the ladder.
pub fn run_lln(cfg: &ExperimentConfig) -> Result<LlnReport> {
    cfg.validate()?;
    let limit = lln_limit(&cfg.g, &cfg.phi, cfg.bounds, &cfg.quad)?;
    let variances = clt_variances(&cfg.g, &cfg.phi, cfg.bounds, &cfg.quad)?;
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for &n in &cfg.ladder {
        let base = size_seed(cfg.seed, n);
        let devs = par_map_replicas(cfg.workers, cfg.replicas, |r| {
            let (_, eta) = sample_ness(n, cfg.bounds, base.replica(r))?;
            Ok((field_value(&cfg.g, &cfg.phi, &eta)? - limit).abs())
        })?;
        let est = mean_estimate(&devs);
        rows.push(LlnRow {
            n,
            mean_abs_deviation: est.mean,
            standard_error: est.standard_error,
            clt_band: 5.0 * variances.total().sqrt() / (n as f64).sqrt(),
        });
    }
    let mut verdicts = Vec::new();
    if let Some((worst, se)) = rows
        .windows(2)
        .map(|w| {
            let ratio = w[1].mean_abs_deviation / w[0].mean_abs_deviation;
            let rel = ((w[0].standard_error / w[0].mean_abs_deviation).powi(2)
                + (w[1].standard_error / w[1].mean_abs_deviation).powi(2))
            .sqrt();
            (ratio, ratio * rel)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
    {
        verdicts.push(Verdict::at_most("deviation ratio between ladder steps", worst, se, 1.0));
    }
    let last = rows.last().expect("non-empty ladder");
    verdicts.push(Verdict::at_most(
        format!("mean deviation at N={} within CLT band", last.n),
        last.mean_abs_deviation,
        last.standard_error,
        last.clt_band,
    ));
    Ok(LlnReport {
        limit,
        variances,
        rows,
        verdicts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub replicas: usize,
    pub variances: CltVariances,
    /// Exact `E[X_N(g; phi)]` used for centering.
    pub exact_mean: f64,
    pub ks_distance: f64,
    pub ks_threshold: f64,
    /// Mean of the rescaled samples.
    pub mean: MeanEstimate,
    /// Mean of the squared rescaled samples.
    pub variance: MeanEstimate,
    /// `sqrt(N) (X_N - E X_N)` per replica.
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl CltReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["replica", "rescaled_fluctuation"]);
        for (r, z) in self.samples.iter().enumerate() {
            t.push(vec![r.to_string(), real(*z)]);
        }
        t
    }
}

/// Rescaled fluctuations `sqrt(N) (X_N - E X_N)` at the largest ladder size,
/// tested against `Normal(0, sigma_T^2 + sigma_E^2)`.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<CltReport> {
    cfg.validate()?;
    require_replicas("the CLT test", cfg.replicas, MIN_CLT_REPLICAS)?;
    let n = cfg.largest();
    let variances = clt_variances(&cfg.g, &cfg.phi, cfg.bounds, &cfg.quad)?;
    let total = variances.total();
    if !(total > 0.0) {
        return Err(Error::contract(format!(
            "limiting variance {total} is not positive; the Gaussian comparison is undefined"
        )));
    }
    let exact_mean = exact_field_mean(&cfg.g, &cfg.phi, n, cfg.bounds)?;
    let base = size_seed(cfg.seed, n);
    let scale = (n as f64).sqrt();
    let samples = par_map_replicas(cfg.workers, cfg.replicas, |r| {
        let (_, eta) = sample_ness(n, cfg.bounds, base.replica(r))?;
        Ok(scale * (field_value(&cfg.g, &cfg.phi, &eta)? - exact_mean))
    })?;
    let normal = Normal::new(0.0, total.sqrt())
        .map_err(|e| Error::numeric(format!("normal law with variance {total}: {e}")))?;
    let ks_distance = ks_statistic(&samples, |x| normal.cdf(x))?;
    let ks_threshold = KS_SLACK * KS_CRITICAL_1PCT / (cfg.replicas as f64).sqrt();
    let mean = mean_estimate(&samples);
    let squares: Vec<f64> = samples.iter().map(|z| z * z).collect();
    let variance = mean_estimate(&squares);
    let verdicts = vec![
        Verdict::at_most("KS distance to the limiting normal law", ks_distance, f64::NAN, ks_threshold),
        Verdict::within(
            "sample variance against sigma_T^2 + sigma_E^2",
            variance.mean,
            total,
            variance.standard_error,
            5.0 * variance.standard_error,
        ),
        Verdict::within(
            "exact centering against the sample mean",
            mean.mean,
            0.0,
            mean.standard_error,
            5.0 * mean.standard_error,
        ),
    ];
    Ok(CltReport {
        n,
        replicas: cfg.replicas,
        variances,
        exact_mean,
        ks_distance,
        ks_threshold,
        mean,
        variance,
        samples,
        verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeRow {
    pub s: f64,
    pub t: f64,
    pub empirical: f64,
    pub standard_error: f64,
    /// `(theta_R - theta_L)^2 (min(s, t) - s t)`.
    pub target: f64,
    /// Exact covariance of the rescaled order statistics at this `N`.
    pub finite_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    pub n: usize,
    pub replicas: usize,
    pub rows: Vec<BridgeRow>,
    pub verdicts: Vec<Verdict>,
}

impl BridgeReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["s", "t", "empirical", "standard_error", "analytic", "finite_n"]);
        for r in &self.rows {
            t.push(vec![
                real(r.s),
                real(r.t),
                real(r.empirical),
                real(r.standard_error),
                real(r.target),
                real(r.finite_n),
            ]);
        }
        t
    }
}

/// Empirical covariance of `sqrt(N) (Theta_{floor(sN)} - E Theta_{floor(sN)})`
/// over all grid pairs `s <= t`, at the largest ladder size. `Theta_0` is
/// `theta_L`.
pub fn run_bridge(cfg: &ExperimentConfig, grid: &[f64]) -> Result<BridgeReport> {
    cfg.validate()?;
    require_replicas("the bridge test", cfg.replicas, MIN_BRIDGE_REPLICAS)?;
    if grid.is_empty() {
        return Err(Error::contract("bridge grid is empty"));
    }
    if let Some(s) = grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::contract(format!("bridge grid point {s} outside [0, 1]")));
    }
    let n = cfg.largest();
    let nf = n as f64;
    let idx: Vec<usize> = grid.iter().map(|&s| ((s * nf).floor() as usize).min(n)).collect();
    let base = size_seed(cfg.seed, n);
    let bounds = cfg.bounds;
    let scale = nf.sqrt();
    let samples = par_map_replicas(cfg.workers, cfg.replicas, |r| {
        let profile = sample_parameter_profile(n, bounds, base.replica(r))?;
        let v = profile.values();
        Ok(idx
            .iter()
            .map(|&i| {
                let theta = if i == 0 { bounds.theta_left() } else { v[i - 1] };
                scale * (theta - expected_theta(i, n, bounds))
            })
            .collect::<Vec<f64>>())
    })?;
    let w2 = bounds.width() * bounds.width();
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for a in 0..grid.len() {
        for b in a..grid.len() {
            let products: Vec<f64> = samples.iter().map(|y| y[a] * y[b]).collect();
            let est = mean_estimate(&products);
            let (s, t) = (grid[a], grid[b]);
            let target = bridge_covariance(s, t, bounds)?;
            let (i, j) = (idx[a].min(idx[b]), idx[a].max(idx[b]));
            let finite_n = nf * w2 * (i as f64) * (nf + 1.0 - j as f64)
                / ((nf + 1.0) * (nf + 1.0) * (nf + 2.0));
            let threshold = 3.0 * est.standard_error + (finite_n - target).abs();
            verdicts.push(Verdict::within(
                format!("covariance at ({s}, {t})"),
                est.mean,
                target,
                est.standard_error,
                threshold,
            ));
            rows.push(BridgeRow {
                s,
                t,
                empirical: est.mean,
                standard_error: est.standard_error,
                target,
                finite_n,
            });
        }
    }
    Ok(BridgeReport {
        n,
        replicas: cfg.replicas,
        rows,
        verdicts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LeScalingReport {
    pub x: f64,
    pub p_vec: Vec<u32>,
    /// `(N, deviation)` along the ladder.
    pub rows: Vec<(usize, f64)>,
    pub fit: Option<SlopeFit>,
    /// Set when some deviation vanishes and no log-log fit exists.
    pub degenerate: bool,
    pub verdicts: Vec<Verdict>,
}

impl LeScalingReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["n", "deviation"]);
        for &(n, d) in &self.rows {
            t.push(vec![n.to_string(), real(d)]);
        }
        t
    }
}

/// Exact local-equilibrium deviations along the ladder and their log-log slope.
pub fn run_le_scaling(x: f64, p_vec: &[u32], ladder: &[usize], bounds: BoundaryParams) -> Result<LeScalingReport> {
    validate_ladder(ladder)?;
    let rows = ladder
        .iter()
        .map(|&n| Ok((n, le_deviation(x, p_vec, n, bounds)?)))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = rows.iter().any(|&(_, d)| d == 0.0);
    let mut verdicts = Vec::new();
    let fit = if degenerate {
        None
    } else {
        let pts: Vec<(f64, f64)> = rows.iter().map(|&(n, d)| (n as f64, d.abs())).collect();
        let fit = fit_log_slope(&pts)?;
        verdicts.push(Verdict::within("log-log slope", fit.slope, -1.0, 0.0, 0.15));
        verdicts.push(Verdict::at_most("1 - r^2 of the fit", 1.0 - fit.r_squared, 0.0, 0.01));
        Some(fit)
    };
    Ok(LeScalingReport {
        x,
        p_vec: p_vec.to_vec(),
        rows,
        fit,
        degenerate,
        verdicts,
    })
}

/// Threshold schedule `eps(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum EpsSchedule {
    /// `eps(N) = N^(-exponent)`.
    Power { exponent: f64 },
    Fixed { eps: f64 },
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::Power { exponent: 0.25 }
    }
}

impl EpsSchedule {
    pub fn eps(&self, n: usize) -> f64 {
        match *self {
            EpsSchedule::Power { exponent } => (n as f64).powf(-exponent),
            EpsSchedule::Fixed { eps } => eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub eps: f64,
    pub exceedances: usize,
    pub probability: f64,
    pub standard_error: f64,
    /// `min(1, sum_i Var(Theta_i) / eps^2)` with the Beta variance.
    pub union_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub replicas: usize,
    pub rows: Vec<ConcentrationRow>,
    pub verdicts: Vec<Verdict>,
}

impl ConcentrationReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n",
            "eps",
            "exceedances",
            "probability",
            "standard_error",
            "union_bound",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                real(r.eps),
                r.exceedances.to_string(),
                real(r.probability),
                real(r.standard_error),
                real(r.union_bound),
            ]);
        }
        t
    }
}

/// Empirical `P(sup_i |Theta_i - E Theta_i| >= eps(N))` along the ladder.
pub fn run_concentration(
    ladder: &[usize],
    schedule: EpsSchedule,
    bounds: BoundaryParams,
    replicas: usize,
    seed: RandomSeed,
    workers: usize,
) -> Result<ConcentrationReport> {
    validate_ladder(ladder)?;
    require_replicas("the concentration test", replicas, MIN_CONCENTRATION_REPLICAS)?;
    let w2 = bounds.width() * bounds.width();
    let mut rows = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let eps = schedule.eps(n);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::contract(format!("eps({n}) = {eps} must be positive")));
        }
        let base = size_seed(seed, n);
        let hits = par_map_replicas(workers, replicas, |r| {
            let profile = sample_parameter_profile(n, bounds, base.replica(r))?;
            let sup = profile
                .values()
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - expected_theta(k + 1, n, bounds)).abs())
                .fold(0.0, f64::max);
            Ok(sup >= eps)
        })?;
        let exceedances = hits.iter().filter(|&&h| h).count();
        let p = exceedances as f64 / replicas as f64;
        let nf = n as f64;
        let var_sum = w2 * nf / (6.0 * (nf + 1.0));
        rows.push(ConcentrationRow {
            n,
            eps,
            exceedances,
            probability: p,
            standard_error: (p * (1.0 - p) / replicas as f64).sqrt(),
            union_bound: (var_sum / (eps * eps)).min(1.0),
        });
    }
    let mut verdicts = Vec::new();
    if let Some((rise, se)) = rows
        .windows(2)
        .map(|w| {
            (
                w[1].probability - w[0].probability,
                w[0].standard_error.hypot(w[1].standard_error),
            )
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
    {
        verdicts.push(Verdict::at_most("largest increase of the tail along the ladder", rise, se, 3.0 * se));
    }
    let last = rows.last().expect("non-empty ladder");
    verdicts.push(Verdict::at_most(
        format!("tail probability at N={}", last.n),
        last.probability,
        last.standard_error,
        1e-2,
    ));
    Ok(ConcentrationReport {
        replicas,
        rows,
        verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalRow {
    pub i: usize,
    pub mean: f64,
    pub mean_target: f64,
    pub mean_se: f64,
    pub variance: f64,
    /// `i (N+1-i) (theta_R - theta_L)^2 / ((N+1)^2 (N+2))`.
    pub variance_target: f64,
    pub variance_se: f64,
    /// Same with the denominator `(N+1)^2 (N+2)^2`.
    pub squared_denominator_variance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalReport {
    pub n: usize,
    pub replicas: usize,
    pub rows: Vec<MarginalRow>,
    pub verdicts: Vec<Verdict>,
}

impl MarginalReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "i",
            "mean",
            "mean_target",
            "mean_se",
            "variance",
            "variance_target",
            "variance_se",
            "squared_denominator_variance",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.i.to_string(),
                real(r.mean),
                real(r.mean_target),
                real(r.mean_se),
                real(r.variance),
                real(r.variance_target),
                real(r.variance_se),
                real(r.squared_denominator_variance),
            ]);
        }
        t
    }
}

/// Empirical mean and variance of every `Theta_{i,N}` against the rescaled
/// `Beta(i, N+1-i)` moments.
pub fn orderstat_marginals(
    n: usize,
    bounds: BoundaryParams,
    replicas: usize,
    seed: RandomSeed,
    workers: usize,
) -> Result<MarginalReport> {
    if n == 0 {
        return Err(Error::contract("N must be at least 1"));
    }
    require_replicas("the marginal check", replicas, 100)?;
    let chunks = replicas.div_ceil(MARGINAL_CHUNK);
    let base = size_seed(seed, n);
    // per chunk and site: sums of d, d^2, d^4 with d = Theta_i - E Theta_i
    let partial = par_map_replicas(workers, chunks, |c| {
        let lo = c as usize * MARGINAL_CHUNK;
        let hi = (lo + MARGINAL_CHUNK).min(replicas);
        let mut acc = vec![[0.0f64; 3]; n];
        for r in lo..hi {
            let profile = sample_parameter_profile(n, bounds, base.replica(r as u64))?;
            for (k, &v) in profile.values().iter().enumerate() {
                let d = v - expected_theta(k + 1, n, bounds);
                let d2 = d * d;
                acc[k][0] += d;
                acc[k][1] += d2;
                acc[k][2] += d2 * d2;
            }
        }
        Ok(acc)
    })?;
    let rf = replicas as f64;
    let nf = n as f64;
    let w2 = bounds.width() * bounds.width();
    let mut rows = Vec::with_capacity(n);
    let mut verdicts = Vec::new();
    for k in 0..n {
        let total = |m: usize| pairwise_sum(&partial.iter().map(|a| a[k][m]).collect::<Vec<_>>());
        let (s1, s2, s4) = (total(0), total(1), total(2));
        let i = k + 1;
        let mean_target = expected_theta(i, n, bounds);
        let var = s2 / rf;
        let mean_d = s1 / rf;
        let mean_se = ((var - mean_d * mean_d).max(0.0) / rf).sqrt();
        let variance_se = ((s4 / rf - var * var).max(0.0) / rf).sqrt();
        let core = i as f64 * (nf + 1.0 - i as f64) * w2 / ((nf + 1.0) * (nf + 1.0));
        let row = MarginalRow {
            i,
            mean: mean_target + mean_d,
            mean_target,
            mean_se,
            variance: var,
            variance_target: core / (nf + 2.0),
            variance_se,
            squared_denominator_variance: core / ((nf + 2.0) * (nf + 2.0)),
        };
        verdicts.push(Verdict::within(
            format!("mean of Theta_{i}"),
            row.mean,
            row.mean_target,
            mean_se,
            4.0 * mean_se,
        ));
        verdicts.push(Verdict::within(
            format!("variance of Theta_{i}"),
            row.variance,
            row.variance_target,
            variance_se,
            4.0 * variance_se,
        ));
        rows.push(row);
    }
    Ok(MarginalReport {
        n,
        replicas,
        rows,
        verdicts,
    })
}
