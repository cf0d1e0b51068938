//! Monte Carlo experiments and statistical verdicts.
//!
//! Every experiment distributes its replicas over a rayon pool of
//! `workers` threads. Replica `r` at system size `N` draws from
//! `seed.derive(N).replica(r)` and results are reduced in replica order with
//! pairwise summation, so tables are bit-identical for any worker count.

mod centering;
mod experiments;
mod stats;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::QuadratureSpec;
use crate::error::{Error, Result};
use crate::fields::TestFunction;
use crate::local::LocalFunction;
use crate::model::BoundaryParams;
use crate::rng::RandomSeed;

pub use centering::{exact_field_mean, MAX_CENTERING_DEGREE, MAX_CENTERING_WINDOW};
pub use experiments::{
    orderstat_marginals, run_bridge, run_clt, run_concentration, run_le_scaling, run_lln,
    BridgeReport, BridgeRow, CltReport, ConcentrationReport, ConcentrationRow, EpsSchedule,
    LeScalingReport, LlnReport, LlnRow, MarginalReport, MarginalRow, MIN_BRIDGE_REPLICAS,
    MIN_CLT_REPLICAS, MIN_CONCENTRATION_REPLICAS,
};
pub use stats::{fit_log_slope, ks_statistic, mean_estimate, MeanEstimate, SlopeFit};

/// Inputs shared by the Monte Carlo experiments.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// System sizes, strictly increasing.
    pub ladder: Vec<usize>,
    pub replicas: usize,
    pub bounds: BoundaryParams,
    pub g: LocalFunction,
    pub phi: TestFunction,
    pub seed: RandomSeed,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub quad: QuadratureSpec,
}

impl ExperimentConfig {
    pub fn new(
        ladder: Vec<usize>,
        replicas: usize,
        bounds: BoundaryParams,
        g: LocalFunction,
        phi: TestFunction,
        seed: RandomSeed,
    ) -> Result<Self> {
        let cfg = Self {
            ladder,
            replicas,
            bounds,
            g,
            phi,
            seed,
            workers: 0,
            quad: QuadratureSpec::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_ladder(&self.ladder)?;
        if self.replicas < 2 {
            return Err(Error::contract("at least 2 replicas are required"));
        }
        if self.ladder[0] < self.g.k() {
            return Err(Error::contract(format!(
                "smallest N = {} is shorter than the window {}",
                self.ladder[0],
                self.g.k()
            )));
        }
        self.quad.validate()
    }

    /// Largest system size of the ladder.
    pub fn largest(&self) -> usize {
        *self.ladder.last().expect("validated ladder")
    }
}

pub fn validate_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::contract("N ladder is empty"));
    }
    if ladder[0] == 0 {
        return Err(Error::contract("N ladder entries must be positive"));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::contract("N ladder must be strictly increasing"));
    }
    Ok(())
}

/// Maps `f` over replica indices `0..count` on a pool of `workers` threads and
/// returns the results in index order.
pub(crate) fn par_map_replicas<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} worker threads: {e}")))?;
    pool.install(|| (0..count as u64).into_par_iter().map(&f).collect())
}

/// One statistical check. `passed` is `|effect - target| <= threshold` when a
/// target is given and `effect <= threshold` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub effect: f64,
    pub target: Option<f64>,
    pub standard_error: f64,
    pub threshold: f64,
}

impl Verdict {
    pub fn within(name: impl Into<String>, effect: f64, target: f64, se: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: (effect - target).abs() <= threshold,
            effect,
            target: Some(target),
            standard_error: se,
            threshold,
        }
    }

    pub fn at_most(name: impl Into<String>, effect: f64, se: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: effect <= threshold,
            effect,
            target: None,
            standard_error: se,
            threshold,
        }
    }
}

/// A rectangular result table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub(crate) fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with `#`-prefixed preamble lines, then the header and the rows.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> io::Result<()> {
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Locale-free shortest round-trip representation.
pub(crate) fn real(x: f64) -> String {
    format!("{x:?}")
}
