//! Run configuration: a TOML file with one table per concern.
//!
//! Every field has a default, unknown keys are rejected, and
//! [`RunConfig::to_canonical_toml`] re-serializes a parsed file into a fixed
//! layout, so parsing the canonical text gives the same configuration back.

use serde::{Deserialize, Serialize};

use crate::asymptotics::QuadratureSpec;
use crate::error::{Error, Result};
use crate::fields::TestFunction;
use crate::harness::{validate_ladder, EpsSchedule, ExperimentConfig};
use crate::ldp::{FreeEnergySpec, MonotoneProfile, SolverConfig, DEFAULT_GRID_CELLS};
use crate::local::{LocalFunction, Monomial, Polynomial};
use crate::model::BoundaryParams;
use crate::rng::RandomSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub observable: ObservableSection,
    pub experiment: ExperimentSection,
    pub quadrature: QuadratureSpec,
    pub sample: SampleSection,
    pub bridge: BridgeSection,
    pub le_scaling: LeScalingSection,
    pub concentration: ConcentrationSection,
    pub ldp: LdpSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub theta_left: f64,
    pub theta_right: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            theta_left: 0.0,
            theta_right: 2.0,
        }
    }
}

/// One monomial `coeff * n_1^p_1 ... n_k^p_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Registry of local functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LocalFunctionSpec {
    /// `g = eta_1`.
    #[default]
    Density,
    /// `g = eta_1 eta_2`.
    PairProduct,
    /// `g = 1{eta_1 = 0}`.
    IndicatorVacuum,
    CustomPolynomial { k: usize, terms: Vec<TermSpec> },
}

impl LocalFunctionSpec {
    pub fn build(&self) -> Result<LocalFunction> {
        Ok(match self {
            LocalFunctionSpec::Density => LocalFunction::density(),
            LocalFunctionSpec::PairProduct => LocalFunction::pair_product(),
            LocalFunctionSpec::IndicatorVacuum => LocalFunction::indicator_vacuum(),
            LocalFunctionSpec::CustomPolynomial { k, terms } => {
                let terms = terms
                    .iter()
                    .map(|t| Monomial {
                        coeff: t.coeff,
                        powers: t.powers.clone(),
                    })
                    .collect();
                LocalFunction::polynomial("custom-polynomial", Polynomial::new(*k, terms)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSection {
    /// Test function `phi(x) = sum_j phi[j] x^j`.
    pub phi: Vec<f64>,
    pub g: LocalFunctionSpec,
}

impl Default for ObservableSection {
    fn default() -> Self {
        Self {
            phi: vec![1.0],
            g: LocalFunctionSpec::Density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub ladder: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            ladder: vec![1000, 5000],
            replicas: 2000,
            seed: 20_240_607,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { n: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeSection {
    pub grid: Vec<f64>,
}

impl Default for BridgeSection {
    fn default() -> Self {
        Self {
            grid: vec![0.25, 0.5, 0.75],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeScalingSection {
    pub x: f64,
    pub p_vec: Vec<u32>,
    pub ladder: Vec<usize>,
}

impl Default for LeScalingSection {
    fn default() -> Self {
        Self {
            x: 0.5,
            p_vec: vec![1],
            ladder: (7..=14).map(|e| 1usize << e).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationSection {
    pub ladder: Vec<usize>,
    pub replicas: usize,
    pub eps: EpsSchedule,
}

impl Default for ConcentrationSection {
    fn default() -> Self {
        Self {
            ladder: vec![100, 1000, 10_000],
            replicas: 10_000,
            eps: EpsSchedule::default(),
        }
    }
}

/// Profile for the `path-rate` task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathSpec {
    Linear { cells: usize },
    /// `u(t) = theta_L + (theta_R - theta_L) t^exponent`.
    Power { cells: usize, exponent: f64 },
    Grid { values: Vec<f64> },
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec::Linear {
            cells: DEFAULT_GRID_CELLS,
        }
    }
}

impl PathSpec {
    pub fn build(&self, bounds: BoundaryParams) -> Result<MonotoneProfile> {
        match self {
            PathSpec::Linear { cells } => MonotoneProfile::linear(bounds, *cells),
            PathSpec::Power { cells, exponent } => {
                if !(*exponent > 0.0) {
                    return Err(Error::config("path exponent must be positive"));
                }
                let m = *cells as f64;
                let grid: Vec<f64> = (0..=*cells)
                    .map(|j| bounds.theta_left() + bounds.width() * (j as f64 / m).powf(*exponent))
                    .collect();
                MonotoneProfile::from_grid(&grid, bounds)
            }
            PathSpec::Grid { values } => MonotoneProfile::from_grid(values, bounds),
        }
    }
}

/// Numerical controls of the free energy; `g` comes from `[observable]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeEnergyControls {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub state_truncation: usize,
    pub tail_tol: f64,
    pub eigen_tol: f64,
    pub max_iter: usize,
}

impl Default for FreeEnergyControls {
    fn default() -> Self {
        Self {
            lambda_min: -50.0,
            lambda_max: 50.0,
            state_truncation: 80,
            tail_tol: 1e-12,
            eigen_tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdpSection {
    /// Site parameter for `free-energy` and `rate`.
    pub theta: f64,
    pub lambdas: Vec<f64>,
    pub x_values: Vec<f64>,
    /// The `annealed` task uses `lambda * phi`.
    pub lambda: f64,
    /// Target density `mu(x) = sum_j mu[j] x^j` for `profile-rate`.
    pub mu: Vec<f64>,
    pub path: PathSpec,
    pub free_energy: FreeEnergyControls,
    pub solver: SolverConfig,
}

impl Default for LdpSection {
    fn default() -> Self {
        Self {
            theta: 1.0,
            lambdas: (-10..=10).map(|j| f64::from(j) / 10.0).collect(),
            x_values: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            lambda: 0.2,
            mu: vec![0.5],
            path: PathSpec::default(),
            free_energy: FreeEnergyControls::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Fixed-layout TOML; `from_toml(to_canonical_toml(c)) == c`.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Structural checks that do not depend on the command being run.
    pub fn validate(&self) -> Result<()> {
        self.bounds()?;
        self.phi()?;
        self.g()?;
        validate_ladder(&self.experiment.ladder).map_err(|e| Error::config(format!("[experiment] {e}")))?;
        validate_ladder(&self.le_scaling.ladder).map_err(|e| Error::config(format!("[le_scaling] {e}")))?;
        validate_ladder(&self.concentration.ladder)
            .map_err(|e| Error::config(format!("[concentration] {e}")))?;
        if self.experiment.seed > i64::MAX as u64 {
            return Err(Error::config("[experiment] seed must fit in a signed 64-bit integer"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Result<BoundaryParams> {
        BoundaryParams::new(self.model.theta_left, self.model.theta_right)
            .map_err(|e| Error::config(format!("[model] {e}")))
    }

    pub fn phi(&self) -> Result<TestFunction> {
        if self.observable.phi.is_empty() {
            return Err(Error::config("[observable] phi needs at least one coefficient"));
        }
        TestFunction::polynomial(self.observable.phi.clone())
            .map_err(|e| Error::config(format!("[observable] phi: {e}")))
    }

    pub fn g(&self) -> Result<LocalFunction> {
        self.observable
            .g
            .build()
            .map_err(|e| Error::config(format!("[observable] g: {e}")))
    }

    pub fn seed(&self) -> RandomSeed {
        RandomSeed::new(self.experiment.seed, 0)
    }

    pub fn experiment(&self, workers: usize) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig::new(
            self.experiment.ladder.clone(),
            self.experiment.replicas,
            self.bounds()?,
            self.g()?,
            self.phi()?,
            self.seed(),
        )?
        .with_workers(workers)
        .with_quadrature(self.quadrature))
    }

    pub fn free_energy_spec(&self) -> Result<FreeEnergySpec> {
        let mut spec = FreeEnergySpec::new(self.g()?).map_err(|e| {
            Error::config(format!("{e}; LDP tasks need observable.g.kind = \"indicator-vacuum\""))
        })?;
        let c = &self.ldp.free_energy;
        spec.lambda_min = c.lambda_min;
        spec.lambda_max = c.lambda_max;
        spec.state_truncation = c.state_truncation;
        spec.tail_tol = c.tail_tol;
        spec.eigen_tol = c.eigen_tol;
        spec.max_iter = c.max_iter;
        Ok(spec)
    }

    pub fn mu(&self) -> Result<TestFunction> {
        TestFunction::polynomial(self.ldp.mu.clone()).map_err(|e| Error::config(format!("[ldp] mu: {e}")))
    }

    /// `lambda * phi` for the annealed task.
    pub fn annealed_phi(&self) -> Result<TestFunction> {
        let scaled = self.observable.phi.iter().map(|c| c * self.ldp.lambda).collect();
        TestFunction::polynomial(scaled).map_err(|e| Error::config(format!("[ldp] lambda * phi: {e}")))
    }
}
