//! Acceptance gate: one `[PASS]`/`[FAIL]` line per criterion, with the
//! measured effects printed above it.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use harmonic_ness::asymptotics::{h_of, QuadratureSpec};
use harmonic_ness::fields::TestFunction;
use harmonic_ness::harness::*;
use harmonic_ness::ldp::*;
use harmonic_ness::local::LocalFunction;
use harmonic_ness::model::sample_ness;
use harmonic_ness::moments::*;
use harmonic_ness::{BoundaryParams, RandomSeed};
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;

struct Gate {
    failures: usize,
}

impl Gate {
    fn run(&mut self, id: u32, title: &str, limit: Duration, check: impl FnOnce() -> Result<(), String>) {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed <= limit {
                Ok(())
            } else {
                Err(format!("runtime {elapsed:.1?} exceeds {limit:?}"))
            }
        });
        match outcome {
            Ok(()) => println!("[PASS] {id}. {title} ({elapsed:.1?})"),
            Err(why) => {
                self.failures += 1;
                println!("[FAIL] {id}. {title} ({elapsed:.1?}): {why}");
            }
        }
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn verdicts_pass(label: &str, vs: &[Verdict]) -> Result<(), String> {
    for v in vs {
        println!(
            "    {label}: {} effect={:.4e} target={:?} se={:.3e} threshold={:.3e} {}",
            v.name,
            v.effect,
            v.target,
            v.standard_error,
            v.threshold,
            if v.passed { "ok" } else { "FAILED" }
        );
    }
    match vs.iter().find(|v| !v.passed) {
        Some(v) => Err(format!("{label}: {}", v.name)),
        None => Ok(()),
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn criterion_exact_moments() -> Result<(), String> {
    let mut picker = RandomSeed::new(1001, 0).rng();
    let replicas = 1_000_000u64;
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let n = picker.random_range(1..=10usize);
        let mut alphas: Vec<u32> = (0..n).map(|_| picker.random_range(0..=3u32)).collect();
        if alphas.iter().all(|&a| a == 0) {
            alphas[picker.random_range(0..n)] = 1;
        }
        let exact = uniform_orderstat_product_moment(n, &ExponentVector::new(alphas.clone()))
            .map_err(|e| e.to_string())?;
        let root = RandomSeed::new(1002, case);
        let vals: Vec<f64> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut g = root.replica(r).rng();
                let mut u = [0.0f64; 10];
                for x in u.iter_mut().take(n) {
                    *x = g.random::<f64>();
                }
                u[..n].sort_unstable_by(f64::total_cmp);
                u[..n].iter().zip(&alphas).map(|(x, &a)| x.powi(a as i32)).product()
            })
            .collect();
        let est = mean_estimate(&vals);
        let z = (est.mean - exact) / est.standard_error;
        worst = worst.max(z.abs());
        ensure(z.abs() < 4.0, || format!("case {case} {alphas:?}: z = {z:.2}"))?;
    }
    println!("    50 Monte Carlo cases, largest |z| = {worst:.2}");
    let mut max_err: f64 = 0.0;
    for n in 1..=20 {
        for r in 1..=n {
            for k in 0..=5u32 {
                let e = ExponentVector::single(n, r, k).map_err(|e| e.to_string())?;
                let general = uniform_orderstat_product_moment(n, &e).map_err(|e| e.to_string())?;
                let exact = uniform_orderstat_product_moment_exact(n, &e)
                    .map_err(|e| e.to_string())?
                    .to_f64()
                    .unwrap_or(f64::NAN);
                let closed = single_index_moment(r, k, n);
                max_err = max_err.max((general - exact).abs()).max((closed - exact).abs());
            }
        }
    }
    println!("    single-index reduction N<=20, k<=5: max error {max_err:.2e}");
    ensure(max_err <= 1e-12, || format!("single-index error {max_err:e}"))
}

fn criterion_marginals() -> Result<(), String> {
    let b = BoundaryParams::new(0.0, 1.0).unwrap();
    let r = orderstat_marginals(10, b, 1_000_000, RandomSeed::new(2001, 0), 0).map_err(|e| e.to_string())?;
    let mut min_alt_z = f64::INFINITY;
    for row in &r.rows {
        let z_mean = (row.mean - row.mean_target) / row.mean_se;
        let z_var = (row.variance - row.variance_target) / row.variance_se;
        let z_alt = (row.variance - row.squared_denominator_variance) / row.variance_se;
        min_alt_z = min_alt_z.min(z_alt);
        println!(
            "    i={:>2} mean z={z_mean:+.2} var={:.5e} (N+2) target={:.5e} z={z_var:+.2}; (N+2)^2 target={:.5e} z={z_alt:+.1}",
            row.i, row.variance, row.variance_target, row.squared_denominator_variance
        );
    }
    println!(
        "    variance denominator: (N+1)^2 (N+2) confirmed; (N+1)^2 (N+2)^2 rejected at z >= {min_alt_z:.0}"
    );
    match r.verdicts.iter().find(|v| !v.passed) {
        Some(v) => Err(v.name.clone()),
        None => Ok(()),
    }
}

fn criterion_lln() -> Result<(), String> {
    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let gs = [LocalFunction::density(), LocalFunction::pair_product()];
    let phis = [TestFunction::constant(1.0), TestFunction::identity()];
    for g in &gs {
        for phi in &phis {
            let cfg = ExperimentConfig::new(
                vec![1000, 10_000, 100_000],
                200,
                b,
                g.clone(),
                phi.clone(),
                RandomSeed::new(3001, 0),
            )
            .map_err(|e| e.to_string())?;
            let r = run_lln(&cfg).map_err(|e| e.to_string())?;
            let label = format!("{} / {}", g.name(), phi.name());
            println!("    {label}: limit {:.6}", r.limit);
            for row in &r.rows {
                println!(
                    "      N={:>6} mean|dev|={:.4e} se={:.2e} band={:.4e}",
                    row.n, row.mean_abs_deviation, row.standard_error, row.clt_band
                );
            }
            verdicts_pass(&label, &r.verdicts)?;
        }
    }
    Ok(())
}

fn criterion_clt() -> Result<(), String> {
    for (lo, hi) in [(0.0, 2.0), (1.0, 1.0)] {
        let b = BoundaryParams::new(lo, hi).unwrap();
        let cfg = ExperimentConfig::new(
            vec![5000],
            2000,
            b,
            LocalFunction::density(),
            TestFunction::constant(1.0),
            RandomSeed::new(4001, 0),
        )
        .map_err(|e| e.to_string())?;
        let r = run_clt(&cfg).map_err(|e| e.to_string())?;
        let w = hi - lo;
        let analytic = if lo == hi {
            lo * (1.0 + lo)
        } else {
            // int_0^1 rho (1 + rho) dx for rho = lo + w x
            w * w / 12.0 + (lo + w / 2.0) + (lo * lo + lo * w + w * w / 3.0)
        };
        let label = format!("theta=({lo}, {hi})");
        println!(
            "    {label}: sigma_T^2={:.6} sigma_E^2={:.6} analytic total={analytic:.6} KS={:.4} sample var={:.4}+-{:.4}",
            r.variances.sigma_t_sq,
            r.variances.sigma_e_sq,
            r.ks_distance,
            r.variance.mean,
            r.variance.standard_error
        );
        ensure((r.variances.total() - analytic).abs() < 1e-8, || format!("{label}: variance formula"))?;
        ensure(lo != hi || r.variances.sigma_t_sq == 0.0, || format!("{label}: sigma_T^2 != 0"))?;
        ensure(r.ks_distance < 0.05, || format!("{label}: KS {:.4} >= 0.05", r.ks_distance))?;
        let z = (r.variance.mean - analytic) / r.variance.standard_error;
        ensure(z.abs() <= 5.0, || format!("{label}: variance z = {z:.2}"))?;
        verdicts_pass(&label, &r.verdicts)?;
    }
    Ok(())
}

fn criterion_bridge() -> Result<(), String> {
    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let cfg = ExperimentConfig::new(
        vec![5000],
        2000,
        b,
        LocalFunction::density(),
        TestFunction::constant(1.0),
        RandomSeed::new(5001, 0),
    )
    .map_err(|e| e.to_string())?;
    let r = run_bridge(&cfg, &[0.25, 0.5, 0.75]).map_err(|e| e.to_string())?;
    for row in &r.rows {
        let z = (row.empirical - row.target) / row.standard_error;
        println!(
            "    ({}, {}): empirical {:.5} se {:.5} target {:.5} z={z:+.2}",
            row.s, row.t, row.empirical, row.standard_error, row.target
        );
        ensure(z.abs() <= 3.0, || format!("({}, {}) z = {z:.2}", row.s, row.t))?;
    }
    Ok(())
}

fn criterion_local_equilibrium() -> Result<(), String> {
    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let ladder: Vec<usize> = (7..=14).map(|e| 1usize << e).collect();
    let cases: [(f64, &[u32]); 3] = [(0.5, &[1]), (1.0 / 3.0, &[2, 1]), (0.5, &[1, 1, 1])];
    for (x, p) in cases {
        let r = run_le_scaling(x, p, &ladder, b).map_err(|e| e.to_string())?;
        let fit = r.fit.ok_or_else(|| format!("x={x} p={p:?}: degenerate ladder"))?;
        println!(
            "    x={x:.4} p={p:?}: slope {:.4} r^2 {:.6} (|dev| at N=2^14: {:.3e})",
            fit.slope,
            fit.r_squared,
            r.rows.last().map_or(f64::NAN, |row| row.1.abs())
        );
        ensure((-1.15..=-0.85).contains(&fit.slope) && fit.r_squared > 0.99, || {
            format!("x={x} p={p:?}: slope {} r^2 {}", fit.slope, fit.r_squared)
        })?;
    }
    Ok(())
}

fn criterion_ldp() -> Result<(), String> {
    let e = |x: harmonic_ness::Error| x.to_string();
    let vacuum = FreeEnergySpec::new(LocalFunction::indicator_vacuum()).map_err(e)?;
    let pair = FreeEnergySpec::new(
        LocalFunction::bounded("equal-pair", 2, 1.0, |w| if w[0] == w[1] { 1.0 } else { 0.0 }).map_err(e)?,
    )
    .map_err(e)?;
    let thetas = [0.0, 0.25, 1.0, 3.0];
    let lambdas: Vec<f64> = (-20..=20).map(|j| f64::from(j) / 10.0).collect();
    let mut zero: f64 = 0.0;
    let mut convex: f64 = 0.0;
    let mut at_mean: f64 = 0.0;
    let mut reduction: f64 = 0.0;
    let quad = QuadratureSpec::default();
    for spec in [&vacuum, &pair] {
        for &theta in &thetas {
            zero = zero.max(free_energy(theta, 0.0, spec).map_err(e)?.abs());
            let f = lambdas
                .iter()
                .map(|&l| free_energy(theta, l, spec))
                .collect::<Result<Vec<_>, _>>()
                .map_err(e)?;
            for w in f.windows(3) {
                convex = convex.min(w[0] - 2.0 * w[1] + w[2]);
            }
            let h = h_of(spec.g(), theta, &quad).map_err(e)?;
            at_mean = at_mean.max(rate_function_i(theta, h, spec).map_err(e)?.abs());
        }
    }
    for &theta in &thetas {
        for &l in &lambdas {
            let a = free_energy_k1(theta, l, vacuum.g()).map_err(e)?;
            let b = free_energy_transfer(theta, l, &vacuum).map_err(e)?;
            reduction = reduction.max((a - b).abs());
        }
    }
    println!("    |F(theta, 0)| <= {zero:.2e}; min second difference {convex:.2e}");
    println!("    |I(theta, h(theta))| <= {at_mean:.2e}; transfer vs closed form {reduction:.2e}");
    ensure(zero <= 1e-8, || "F(theta, 0) != 0".into())?;
    ensure(convex >= -1e-9, || format!("second difference {convex:e}"))?;
    ensure(at_mean <= 1e-8, || format!("I at the mean {at_mean:e}"))?;
    ensure(reduction <= 1e-8, || format!("transfer reduction {reduction:e}"))?;

    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let j_lin = path_rate_j(&MonotoneProfile::linear(b, DEFAULT_GRID_CELLS).map_err(e)?);
    let m = 10_000;
    let grid: Vec<f64> = (0..=m).map(|j| 2.0 * (j as f64 / m as f64).powi(2)).collect();
    let j_quad = path_rate_j(&MonotoneProfile::from_grid(&grid, b).map_err(e)?);
    println!("    J(linear) = {j_lin:?}; J(quadratic) = {j_quad:.6} vs 1 - ln 2 = {:.6}", 1.0 - 2f64.ln());
    ensure(j_lin == 0.0, || format!("J(linear) = {j_lin:e}"))?;
    ensure((j_quad - (1.0 - 2f64.ln())).abs() < 1e-3, || format!("J(quadratic) = {j_quad}"))?;

    let solver = SolverConfig::default();
    let zero_phi = TestFunction::constant(0.0);
    let r = annealed_free_energy(&zero_phi, &vacuum, b, &solver).map_err(e)?;
    let linear = MonotoneProfile::linear(b, solver.grid_cells).map_err(e)?.grid();
    let dev = r
        .profile
        .grid()
        .iter()
        .zip(&linear)
        .map(|(a, l)| (a - l).abs())
        .fold(0.0, f64::max);
    println!("    annealed at phi = 0: value {:?}, argmax distance from linear {dev:.2e}", r.value);
    ensure(r.value.abs() <= 1e-12 && dev <= 1e-9, || format!("phi = 0: value {} dev {dev}", r.value))?;

    let lambda = 0.2;
    let phi = TestFunction::constant(lambda);
    let r = annealed_free_energy(&phi, &vacuum, b, &solver).map_err(e)?;
    let n = 200;
    let root = RandomSeed::new(7001, 0);
    let weights: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|rep| {
            let (_, eta) = sample_ness(n, b, root.replica(rep)).unwrap();
            let vacancies = eta.occupations().iter().filter(|&&x| x == 0).count();
            (lambda * vacancies as f64).exp()
        })
        .collect();
    let est = mean_estimate(&weights);
    let mc = est.mean.ln() / n as f64;
    let se = est.standard_error / est.mean / n as f64;
    println!(
        "    annealed at lambda = 0.2: solver {:.6} vs Monte Carlo {mc:.6} +- {se:.2e} (z = {:+.2})",
        r.value,
        (r.value - mc) / se
    );
    ensure((r.value - mc).abs() <= 3.0 * se, || format!("annealed {} vs MC {mc} (se {se:e})", r.value))
}

fn criterion_reproducibility() -> Result<(), String> {
    let e = |x: harmonic_ness::Error| x.to_string();
    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let base = ExperimentConfig::new(
        vec![500, 2000],
        2000,
        b,
        LocalFunction::pair_product(),
        TestFunction::identity(),
        RandomSeed::new(8001, 0),
    )
    .map_err(e)?;
    let csv = |t: &Table| {
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[]).unwrap();
        buf
    };
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for workers in [1, 4, 8] {
        let cfg = base.clone().with_workers(workers);
        outputs.push(vec![
            csv(&run_lln(&cfg).map_err(e)?.table()),
            csv(&run_clt(&cfg).map_err(e)?.table()),
            csv(&run_bridge(&cfg, &[0.25, 0.5, 0.75]).map_err(e)?.table()),
            csv(&run_concentration(&[100, 1000], EpsSchedule::default(), b, 10_000, RandomSeed::new(8002, 0), workers)
                .map_err(e)?
                .table()),
            csv(&orderstat_marginals(10, b, 50_000, RandomSeed::new(8003, 0), workers).map_err(e)?.table()),
        ]);
    }
    ensure(outputs[0] == outputs[1] && outputs[0] == outputs[2], || {
        "library tables differ across worker counts".into()
    })?;

    let dir = tempfile::tempdir().map_err(|x| x.to_string())?;
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[experiment]\nladder = [200, 1000]\nreplicas = 2000\n[observable]\nphi = [0.0, 1.0]\n",
    )
    .map_err(|x| x.to_string())?;
    let mut files = Vec::new();
    for workers in ["1", "4", "8"] {
        for kind in ["lln", "clt", "bridge"] {
            let out = dir.path().join(format!("{kind}-{workers}"));
            let status = Command::new(env!("CARGO_BIN_EXE_harmonic-ness"))
                .args(["verify", kind, "--workers", workers, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|x| x.to_string())?
                .status;
            ensure(matches!(status.code(), Some(0 | 1)), || format!("verify {kind} exited with {status}"))?;
            files.push(fs::read(out.join(format!("verify-{kind}.csv"))).map_err(|x| x.to_string())?);
        }
    }
    ensure(files[0..3] == files[3..6] && files[0..3] == files[6..9], || {
        "CLI outputs differ across worker counts".into()
    })?;
    println!("    5 library tables and 3 CLI outputs byte-identical for 1, 4 and 8 workers");
    Ok(())
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0 };
    gate.run(1, "exact product moments against Monte Carlo and the single-index reduction", secs(60), criterion_exact_moments);
    gate.run(2, "order-statistic marginals follow Beta(i, N+1-i)", secs(60), criterion_marginals);
    gate.run(3, "law of large numbers ladder", secs(180), criterion_lln);
    gate.run(4, "central limit theorem at N = 5000", secs(180), criterion_clt);
    gate.run(5, "Brownian-bridge covariance of the parameters", secs(120), criterion_bridge);
    gate.run(6, "local-equilibrium deviation is O(1/N)", secs(10), criterion_local_equilibrium);
    gate.run(7, "large-deviation internal consistency", secs(300), criterion_ldp);
    gate.run(8, "reproducibility across worker counts", secs(120), criterion_reproducibility);
    if gate.failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", gate.failures);
        ExitCode::FAILURE
    }
}
