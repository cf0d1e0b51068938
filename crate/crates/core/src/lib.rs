//! Steady state of the open harmonic chain with reservoir parameters
//! `theta_L <= theta_R`.
//!
//! The steady state of the chain on sites `1..=N` is a mixture of product
//! measures: draw `N` sorted uniforms `U_{1:N} <= ... <= U_{N:N}`, set
//! `Theta_i = theta_L + (theta_R - theta_L) U_{i:N}`, then draw each
//! occupation `eta_i` from the geometric law `nu_{Theta_i}` with mean
//! `Theta_i`. The crate samples this law, evaluates its moments exactly, and
//! computes the limits that describe it as `N` grows:
//!
//! - [`model`]: parameters, sampling and the geometric marginal.
//! - [`moments`]: exact product moments of uniform order statistics and of `Theta`.
//! - [`fields`]: empirical fields `X_N(g; phi)` and block averages.
//! - [`asymptotics`]: LLN limits, CLT variances and the bridge kernel.
//! - [`duality`]: duality polynomials and local-equilibrium deviations.
//! - [`ldp`]: free energies, rate functions and the profile variational problems.
//! - [`harness`]: Monte Carlo experiments with statistical verdicts.
//! - [`config`] and [`manifest`]: the batch front end used by the CLI.
//!
//! ```
//! use harmonic_ness::{asymptotics, fields::TestFunction, local::LocalFunction, model::BoundaryParams};
//!
//! let bounds = BoundaryParams::new(0.0, 2.0)?;
//! let limit = asymptotics::lln_limit(
//!     &LocalFunction::density(),
//!     &TestFunction::constant(1.0),
//!     bounds,
//!     &Default::default(),
//! )?;
//! assert!((limit - 1.0).abs() < 1e-9);
//! # Ok::<(), harmonic_ness::Error>(())
//! ```

pub mod asymptotics;
pub mod config;
pub mod duality;
pub mod error;
pub mod fields;
pub mod harness;
pub mod ldp;
pub mod local;
pub mod manifest;
pub mod model;
pub mod moments;
mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use local::LocalFunction;
pub use model::{BoundaryParams, Configuration, ParameterProfile};
pub use rng::RandomSeed;
