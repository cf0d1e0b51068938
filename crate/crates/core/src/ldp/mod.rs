//! Large deviations for bounded local functions: homogeneous free energies,
//! their Legendre transforms, the path rate `J`, and the two variational
//! formulas for the mixture.

mod free_energy;
mod profile;
mod variational;

pub use free_energy::{
    free_energy, free_energy_k1, free_energy_transfer, rate_function_detail, rate_function_i,
    rate_function_k1, FreeEnergySpec, RateValue,
};
pub use profile::{path_rate_j, MonotoneProfile, DEFAULT_GRID_CELLS, MIN_INCREMENT_FRACTION};
pub use variational::{
    annealed_free_energy, inhom_free_energy, profile_rate, SolverConfig, StartReport, VariationalResult,
};
