use crate::error::{Error, Result};
use crate::local::LocalFunction;
use crate::model::geometric_weights;

const MAX_TABLE: usize = 20_000_000;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Bounded local function plus the numerical controls of its free energy.
#[derive(Debug, Clone)]
pub struct FreeEnergySpec {
    g: LocalFunction,
    /// Search interval for the Legendre transform.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Minimum per-site state cutoff; raised automatically when the tail
    /// certificate needs more states.
    pub state_truncation: usize,
    pub tail_tol: f64,
    /// Stopping threshold on successive log-eigenvalue increments.
    pub eigen_tol: f64,
    pub max_iter: usize,
}

/// Legendre-transform output with the maximizing `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateValue {
    pub value: f64,
    pub lambda: f64,
    /// The maximizer sits on the edge of the `lambda` interval.
    pub saturated: bool,
}

impl FreeEnergySpec {
    pub fn new(g: LocalFunction) -> Result<Self> {
        if !g.is_bounded() {
            return Err(Error::contract(format!(
                "free energies need a bounded local function; '{}' is unbounded",
                g.name()
            )));
        }
        Ok(Self {
            g,
            lambda_min: -50.0,
            lambda_max: 50.0,
            state_truncation: 80,
            tail_tol: 1e-12,
            eigen_tol: 1e-12,
            max_iter: 10_000,
        })
    }

    pub fn g(&self) -> &LocalFunction {
        &self.g
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lambda_min < self.lambda_max) || !self.lambda_min.is_finite() || !self.lambda_max.is_finite() {
            return Err(Error::contract("lambda interval must be finite and non-empty"));
        }
        if !(self.tail_tol > 0.0 && self.eigen_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::contract("free-energy tolerances and iteration cap must be positive"));
        }
        Ok(())
    }

    fn bound(&self) -> f64 {
        self.g.bound().expect("checked at construction")
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("theta = {theta} must be finite and >= 0")))
    }
}

/// `g` tabulated on `{0..=m}^k` with a cutoff certified for every
/// `theta <= theta_max` and `|lambda| <= lambda_abs`.
pub(crate) struct FreeEnergyEval<'a> {
    spec: &'a FreeEnergySpec,
    m: usize,
    table: Vec<f64>,
    g_min: f64,
    g_max: f64,
}

impl<'a> FreeEnergyEval<'a> {
    pub(crate) fn new(spec: &'a FreeEnergySpec, theta_max: f64, lambda_abs: f64) -> Result<Self> {
        spec.validate()?;
        check_theta(theta_max)?;
        let k = spec.g.k();
        let factor = k as f64 * (2.0 * lambda_abs * spec.bound()).exp();
        let q = theta_max / (1.0 + theta_max);
        let mut m = spec.state_truncation.max(1);
        while factor * q.powf(m as f64 + 1.0) > spec.tail_tol {
            m += 1;
            if (m + 1).checked_pow(k as u32).is_none_or(|s| s > MAX_TABLE) {
                return Err(Error::quadrature(format!(
                    "state cutoff for theta = {theta_max}, |lambda| = {lambda_abs} exceeds the enumerable range"
                )));
            }
        }
        let base = m + 1;
        let size = base
            .checked_pow(k as u32)
            .filter(|&s| s <= MAX_TABLE)
            .ok_or_else(|| Error::quadrature(format!("state table (M = {m}, k = {k}) is too large")))?;
        let mut table = Vec::with_capacity(size);
        let mut n = vec![0u64; k];
        for idx in 0..size {
            let mut r = idx;
            for j in (0..k).rev() {
                n[j] = (r % base) as u64;
                r /= base;
            }
            table.push(spec.g.eval(&n));
        }
        let g_min = table.iter().copied().fold(f64::INFINITY, f64::min);
        let g_max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            spec,
            m,
            table,
            g_min,
            g_max,
        })
    }

    pub(crate) fn k(&self) -> usize {
        self.spec.g.k()
    }

    fn g_at_origin(&self) -> f64 {
        self.table[0]
    }

    /// `F(theta, lambda)`: closed form for `k = 1`, transfer operator otherwise.
    pub(crate) fn value(&self, theta: f64, lambda: f64) -> Result<f64> {
        if self.k() == 1 {
            Ok(self.value_k1(theta, lambda))
        } else {
            self.value_transfer(theta, lambda)
        }
    }

    /// `ln(1 + sum_n expm1(lambda g(n)) nu(n))`, exact in the untruncated part.
    fn value_k1(&self, theta: f64, lambda: f64) -> f64 {
        let w = geometric_weights(theta, self.m);
        let s: f64 = self
            .table
            .iter()
            .zip(&w)
            .map(|(&g, &p)| (lambda * g).exp_m1() * p)
            .sum();
        s.ln_1p()
    }

    /// Log of the Perron root of `K(w, w') = nu(n_k) e^{lambda g(n_1..n_k)}`
    /// with the truncated marginal renormalized.
    pub(crate) fn value_transfer(&self, theta: f64, lambda: f64) -> Result<f64> {
        let k = self.k();
        let base = self.m + 1;
        let mut w = geometric_weights(theta, self.m);
        let mass: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= mass);
        if k == 1 {
            let z: f64 = self.table.iter().zip(&w).map(|(&g, &p)| (lambda * g).exp() * p).sum();
            return Ok(z.ln());
        }
        let states = base.pow(k as u32 - 1);
        let shift_mod = base.pow(k as u32 - 2);
        let kernel: Vec<f64> = self
            .table
            .iter()
            .enumerate()
            .map(|(idx, &g)| w[idx % base] * (lambda * g).exp())
            .collect();
        let mut v = vec![1.0 / states as f64; states];
        let mut next = vec![0.0; states];
        let mut prev_log = f64::NAN;
        for iter in 0..self.spec.max_iter {
            for (s, out) in next.iter_mut().enumerate() {
                let row = &kernel[s * base..(s + 1) * base];
                let target = (s % shift_mod) * base;
                *out = row.iter().zip(&v[target..target + base]).map(|(a, b)| a * b).sum();
            }
            let eig: f64 = next.iter().sum();
            if !(eig.is_finite() && eig > 0.0) {
                return Err(Error::numeric(format!("transfer eigenvalue degenerated to {eig}")));
            }
            for (vi, ni) in v.iter_mut().zip(&next) {
                *vi = ni / eig;
            }
            let log = eig.ln();
            if iter > 0 && (log - prev_log).abs() < self.spec.eigen_tol {
                return Ok(log);
            }
            prev_log = log;
        }
        Err(Error::numeric(format!(
            "power iteration did not settle within {} iterations",
            self.spec.max_iter
        )))
    }

    /// `dF/dtheta` at fixed `lambda`, by a central difference (forward near 0).
    pub(crate) fn d_theta(&self, theta: f64, lambda: f64) -> Result<f64> {
        let h = 1e-6 * theta.max(1.0);
        if theta < h {
            let f0 = self.value(theta, lambda)?;
            let f1 = self.value(theta + h, lambda)?;
            let f2 = self.value(theta + 2.0 * h, lambda)?;
            return Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h));
        }
        Ok((self.value(theta + h, lambda)? - self.value(theta - h, lambda)?) / (2.0 * h))
    }

    /// Tilted mean and variance of `g` for `k = 1`: `F'(lambda)`, `F''(lambda)`.
    fn tilted_k1(&self, theta: f64, lambda: f64) -> (f64, f64) {
        let w = geometric_weights(theta, self.m);
        let amax = self
            .table
            .iter()
            .zip(&w)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&g, _)| lambda * g)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (&g, &p) in self.table.iter().zip(&w) {
            if p == 0.0 {
                continue;
            }
            let e = (lambda * g - amax).exp() * p;
            z += e;
            s1 += e * g;
            s2 += e * g * g;
        }
        let mean = s1 / z;
        (mean, (s2 / z - mean * mean).max(0.0))
    }

    /// Degenerate cases shared by both Legendre paths, or `None` for the interior.
    fn rate_edge_cases(&self, theta: f64, x: f64) -> Option<RateValue> {
        if theta == 0.0 {
            let value = if x == self.g_at_origin() { 0.0 } else { f64::INFINITY };
            return Some(RateValue {
                value,
                lambda: 0.0,
                saturated: false,
            });
        }
        let slack = 1e-12 * self.g_max.abs().max(self.g_min.abs()).max(1.0);
        if x < self.g_min - slack || x > self.g_max + slack {
            return Some(RateValue {
                value: f64::INFINITY,
                lambda: f64::NAN,
                saturated: false,
            });
        }
        None
    }

    /// `sup_lambda (lambda x - F(theta, lambda))` by golden section, then
    /// bisection on the sign of a difference quotient.
    pub(crate) fn rate(&self, theta: f64, x: f64) -> Result<RateValue> {
        check_theta(theta)?;
        if let Some(r) = self.rate_edge_cases(theta, x) {
            return Ok(r);
        }
        let psi = |l: f64| -> Result<f64> { Ok(l * x - self.value(theta, l)?) };
        let (mut a, mut b) = (self.spec.lambda_min, self.spec.lambda_max);
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let mut fc = psi(c)?;
        let mut fd = psi(d)?;
        while b - a > 1e-3 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = psi(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = psi(d)?;
            }
        }
        let h = 1e-6;
        while b - a > 1e-9 {
            let mid = 0.5 * (a + b);
            if psi(mid + h)? > psi(mid - h)? {
                a = mid;
            } else {
                b = mid;
            }
        }
        let lambda = 0.5 * (a + b);
        let edge = 1e-6 * (self.spec.lambda_max - self.spec.lambda_min);
        let value = psi(lambda)?.max(0.0);
        Ok(RateValue {
            value,
            lambda,
            saturated: lambda - self.spec.lambda_min < edge || self.spec.lambda_max - lambda < edge,
        })
    }

    /// `k = 1` Legendre transform by safeguarded Newton on `F'(lambda) = x`.
    pub(crate) fn rate_k1(&self, theta: f64, x: f64, warm: f64) -> Result<RateValue> {
        debug_assert_eq!(self.k(), 1);
        check_theta(theta)?;
        if let Some(r) = self.rate_edge_cases(theta, x) {
            return Ok(r);
        }
        let (lo0, hi0) = (self.spec.lambda_min, self.spec.lambda_max);
        let finish = |lambda: f64, saturated: bool| -> RateValue {
            RateValue {
                value: (lambda * x - self.value_k1(theta, lambda)).max(0.0),
                lambda,
                saturated,
            }
        };
        if self.tilted_k1(theta, lo0).0 >= x {
            return Ok(finish(lo0, true));
        }
        if self.tilted_k1(theta, hi0).0 <= x {
            return Ok(finish(hi0, true));
        }
        let (mut lo, mut hi) = (lo0, hi0);
        let mut l = if warm.is_finite() { warm.clamp(lo, hi) } else { 0.0 };
        for _ in 0..200 {
            let (m1, var) = self.tilted_k1(theta, l);
            let r = m1 - x;
            if r.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
            if r > 0.0 {
                hi = l;
            } else {
                lo = l;
            }
            let newton = l - r / var;
            l = if var > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-14 * l.abs().max(1.0) {
                break;
            }
        }
        Ok(finish(l, false))
    }
}

/// `F(theta, lambda; g) = ln E[e^{lambda g(eta_1)}]` under `nu_theta`.
pub fn free_energy_k1(theta: f64, lambda: f64, g: &LocalFunction) -> Result<f64> {
    if g.k() != 1 {
        return Err(Error::contract(format!("free_energy_k1 needs k = 1, got k = {}", g.k())));
    }
    check_theta(theta)?;
    let spec = FreeEnergySpec::new(g.clone())?;
    Ok(FreeEnergyEval::new(&spec, theta, lambda.abs())?.value_k1(theta, lambda))
}

/// Free energy as the log Perron root of the truncated transfer kernel.
pub fn free_energy_transfer(theta: f64, lambda: f64, spec: &FreeEnergySpec) -> Result<f64> {
    check_theta(theta)?;
    FreeEnergyEval::new(spec, theta, lambda.abs())?.value_transfer(theta, lambda)
}

/// Free energy by the cheapest exact route for the window size.
pub fn free_energy(theta: f64, lambda: f64, spec: &FreeEnergySpec) -> Result<f64> {
    check_theta(theta)?;
    FreeEnergyEval::new(spec, theta, lambda.abs())?.value(theta, lambda)
}

fn lambda_reach(spec: &FreeEnergySpec) -> f64 {
    spec.lambda_min.abs().max(spec.lambda_max.abs())
}

/// `I(theta, x; g) = sup_lambda (lambda x - F(theta, lambda; g))`; `+inf` outside the range of `g`.
pub fn rate_function_i(theta: f64, x: f64, spec: &FreeEnergySpec) -> Result<f64> {
    Ok(rate_function_detail(theta, x, spec)?.value)
}

pub fn rate_function_detail(theta: f64, x: f64, spec: &FreeEnergySpec) -> Result<RateValue> {
    check_theta(theta)?;
    FreeEnergyEval::new(spec, theta, lambda_reach(spec))?.rate(theta, x)
}

/// The `k = 1` Newton path for the same transform.
pub fn rate_function_k1(theta: f64, x: f64, spec: &FreeEnergySpec) -> Result<RateValue> {
    if spec.g().k() != 1 {
        return Err(Error::contract("rate_function_k1 needs k = 1"));
    }
    check_theta(theta)?;
    FreeEnergyEval::new(spec, theta, lambda_reach(spec))?.rate_k1(theta, x, 0.0)
}
