use crate::error::{Error, Result};
use crate::model::BoundaryParams;

/// Default number of grid cells on `[0, 1]`.
pub const DEFAULT_GRID_CELLS: usize = 200;

/// Relative floor on the increments: `delta_min = 1e-8 (theta_R - theta_L)`.
pub const MIN_INCREMENT_FRACTION: f64 = 1e-8;

/// A non-decreasing piecewise-linear path on the grid `j/M`, stored as its
/// starting value and its `M` increments. The final value is `theta_R` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneProfile {
    start: f64,
    increments: Vec<f64>,
    bounds: BoundaryParams,
}

impl MonotoneProfile {
    /// `u(t) = theta_L + (theta_R - theta_L) t` on `m` cells.
    pub fn linear(bounds: BoundaryParams, m: usize) -> Result<Self> {
        bounds.require_strict()?;
        if m == 0 {
            return Err(Error::contract("profile grid needs at least one cell"));
        }
        Ok(Self {
            start: bounds.theta_left(),
            increments: vec![bounds.width() / m as f64; m],
            bounds,
        })
    }

    /// Values `u_0 <= ... <= u_M` on the grid. `u_M` must equal `theta_R` up to
    /// rounding and `u_0 >= theta_L`.
    pub fn from_grid(grid: &[f64], bounds: BoundaryParams) -> Result<Self> {
        bounds.require_strict()?;
        if grid.len() < 2 {
            return Err(Error::contract("profile grid needs at least two points"));
        }
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("profile values must be finite"));
        }
        if let Some(j) = grid.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::contract(format!(
                "profile decreases between grid points {j} and {}",
                j + 1
            )));
        }
        let slack = 1e-12 * bounds.theta_right().abs().max(1.0);
        if grid[0] < bounds.theta_left() {
            return Err(Error::contract(format!(
                "profile starts at {} below theta_L = {}",
                grid[0],
                bounds.theta_left()
            )));
        }
        let last = grid[grid.len() - 1];
        if (last - bounds.theta_right()).abs() > slack {
            return Err(Error::contract(format!(
                "profile ends at {last}, expected theta_R = {}",
                bounds.theta_right()
            )));
        }
        let increments = grid.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            start: grid[0],
            increments,
            bounds,
        })
    }

    /// Start value and increments; `start + sum(increments)` must equal `theta_R`
    /// up to rounding.
    pub fn from_increments(start: f64, increments: Vec<f64>, bounds: BoundaryParams) -> Result<Self> {
        bounds.require_strict()?;
        if increments.is_empty() {
            return Err(Error::contract("profile grid needs at least one cell"));
        }
        if !start.is_finite() || increments.iter().any(|d| !d.is_finite()) {
            return Err(Error::contract("profile values must be finite"));
        }
        if increments.iter().any(|&d| d < 0.0) {
            return Err(Error::contract("profile increments must be non-negative"));
        }
        if start < bounds.theta_left() {
            return Err(Error::contract("profile starts below theta_L"));
        }
        let end = start + increments.iter().sum::<f64>();
        if (end - bounds.theta_right()).abs() > 1e-9 * bounds.theta_right().abs().max(1.0) {
            return Err(Error::contract(format!(
                "profile ends at {end}, expected theta_R = {}",
                bounds.theta_right()
            )));
        }
        Ok(Self {
            start,
            increments,
            bounds,
        })
    }

    pub fn bounds(&self) -> BoundaryParams {
        self.bounds
    }

    /// Number of grid cells `M`.
    pub fn cells(&self) -> usize {
        self.increments.len()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `delta_min` for these bounds.
    pub fn min_increment(&self) -> f64 {
        MIN_INCREMENT_FRACTION * self.bounds.width()
    }

    /// Grid values `u_0, ..., u_M`, with `u_M = theta_R` exactly.
    pub fn grid(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut u = self.start;
        out.push(u);
        for d in &self.increments {
            u += d;
            out.push(u);
        }
        *out.last_mut().expect("non-empty grid") = self.bounds.theta_right();
        out
    }

    /// Piecewise-linear interpolation at `x in [0, 1]`.
    pub fn value_at(&self, x: f64) -> f64 {
        let m = self.increments.len();
        let pos = (x.clamp(0.0, 1.0) * m as f64).min(m as f64);
        let cell = (pos.floor() as usize).min(m - 1);
        let frac = pos - cell as f64;
        let base = self.start + self.increments[..cell].iter().sum::<f64>();
        (base + frac * self.increments[cell]).min(self.bounds.theta_right())
    }
}

/// `J(u) = -(1/M) sum_j ln(M (u_{j+1} - u_j) / (theta_R - theta_L))`;
/// `+inf` when some increment is below `delta_min`.
pub fn path_rate_j(u: &MonotoneProfile) -> f64 {
    let m = u.cells() as f64;
    let reference = u.bounds.width() / m;
    // grid differences carry rounding of order eps * theta_R
    let floor = u.min_increment() - 8.0 * f64::EPSILON * u.bounds.theta_right();
    if u.increments.iter().any(|&d| d < floor) {
        return f64::INFINITY;
    }
    0.0 - u.increments.iter().map(|&d| (d / reference).ln()).sum::<f64>() / m
}
