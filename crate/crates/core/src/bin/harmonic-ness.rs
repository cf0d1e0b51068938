use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use harmonic_ness::config::RunConfig;
use harmonic_ness::harness::{self, Table, Verdict};
use harmonic_ness::ldp::{self, StartReport, VariationalResult};
use harmonic_ness::manifest::RunManifest;
use harmonic_ness::model::sample_ness;
use harmonic_ness::Error;

/// Batch driver for steady-state sampling, limit-theorem checks and large deviations.
#[derive(Debug, Parser)]
#[command(name = "harmonic-ness", version, about)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = "out", global = true)]
    out: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(short, long, default_value_t = 0, global = true)]
    workers: usize,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one steady-state sample: columns site, theta, eta.
    Sample,
    /// Run a Monte Carlo or exact check and report its verdicts.
    Verify {
        #[arg(value_enum)]
        kind: VerifyKind,
    },
    /// Large-deviation computations.
    Ldp {
        #[arg(value_enum)]
        task: LdpTask,
    },
    /// Print the effective configuration in canonical form.
    ShowConfig,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VerifyKind {
    Lln,
    Clt,
    Bridge,
    LeScaling,
    Concentration,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LdpTask {
    FreeEnergy,
    Rate,
    PathRate,
    Annealed,
    ProfileRate,
}

fn kind_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

enum Outcome {
    Pass,
    VerdictFailure,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numeric(_) | Error::Quadrature(_) | Error::Optimization(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let cfg = load_config(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    match cli.command {
        Command::ShowConfig => {
            print!("{}", cfg.to_canonical_toml());
            Ok(Outcome::Pass)
        }
        Command::Sample => cmd_sample(&cfg, &cli.out),
        Command::Verify { kind } => cmd_verify(kind, &cfg, &cli.out, cli.workers),
        Command::Ldp { task } => cmd_ldp(task, &cfg, &cli.out),
    }
}

fn finish<T: Serialize>(
    mut manifest: RunManifest,
    out: &Path,
    stem: &str,
    table: &Table,
    cfg: &RunConfig,
    report: &T,
) -> Result<RunManifest, Error> {
    manifest.write_table(out, stem, table)?;
    let manifest = manifest.finish(out, stem, cfg, report)?;
    for p in &manifest.outputs {
        info!("wrote {}", p.display());
    }
    Ok(manifest)
}

fn cmd_sample(cfg: &RunConfig, out: &Path) -> Result<Outcome, Error> {
    let manifest = RunManifest::start("sample", cfg);
    let (profile, eta) = sample_ness(cfg.sample.n, cfg.bounds()?, cfg.seed())?;
    let mut table = Table {
        columns: vec!["site".into(), "theta".into(), "eta".into()],
        rows: Vec::with_capacity(cfg.sample.n),
    };
    for (i, (theta, n)) in profile.values().iter().zip(eta.occupations()).enumerate() {
        table.rows.push(vec![(i + 1).to_string(), format!("{theta:?}"), n.to_string()]);
    }
    #[derive(Serialize)]
    struct SampleReport {
        n: usize,
        total_particles: u64,
    }
    let report = SampleReport {
        n: cfg.sample.n,
        total_particles: eta.occupations().iter().sum(),
    };
    finish(manifest, out, "sample", &table, cfg, &report)?;
    Ok(Outcome::Pass)
}

fn report_verdicts(verdicts: &[Verdict]) -> Outcome {
    for v in verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        let target = v.target.map_or_else(|| "-".to_string(), |t| format!("{t:.6e}"));
        println!(
            "[{tag}] {}: effect={:.6e} target={target} se={:.3e} threshold={:.3e}",
            v.name, v.effect, v.standard_error, v.threshold
        );
    }
    if verdicts.iter().all(|v| v.passed) {
        Outcome::Pass
    } else {
        Outcome::VerdictFailure
    }
}

fn cmd_verify(kind: VerifyKind, cfg: &RunConfig, out: &Path, workers: usize) -> Result<Outcome, Error> {
    let name = kind_name(&kind);
    let command = format!("verify {name}");
    let manifest = RunManifest::start(&command, cfg);
    let stem = format!("verify-{name}");
    let verdicts = match kind {
        VerifyKind::Lln => {
            let r = harness::run_lln(&cfg.experiment(workers)?)?;
            finish(manifest, out, &stem, &r.table(), cfg, &r)?;
            r.verdicts
        }
        VerifyKind::Clt => {
            let r = harness::run_clt(&cfg.experiment(workers)?)?;
            finish(manifest, out, &stem, &r.table(), cfg, &r)?;
            r.verdicts
        }
        VerifyKind::Bridge => {
            let r = harness::run_bridge(&cfg.experiment(workers)?, &cfg.bridge.grid)?;
            finish(manifest, out, &stem, &r.table(), cfg, &r)?;
            r.verdicts
        }
        VerifyKind::LeScaling => {
            let s = &cfg.le_scaling;
            let r = harness::run_le_scaling(s.x, &s.p_vec, &s.ladder, cfg.bounds()?)?;
            if r.degenerate {
                println!("deviation vanishes on the ladder; no slope fit");
            }
            finish(manifest, out, &stem, &r.table(), cfg, &r)?;
            r.verdicts
        }
        VerifyKind::Concentration => {
            let s = &cfg.concentration;
            let r = harness::run_concentration(&s.ladder, s.eps, cfg.bounds()?, s.replicas, cfg.seed(), workers)?;
            finish(manifest, out, &stem, &r.table(), cfg, &r)?;
            r.verdicts
        }
    };
    Ok(report_verdicts(&verdicts))
}

#[derive(Serialize)]
struct ProfileReport<'a> {
    value: f64,
    starts: &'a [StartReport],
}

fn profile_table(r: &VariationalResult) -> Table {
    let grid = r.profile.grid();
    let m = grid.len() - 1;
    let mut table = Table {
        columns: vec!["j".into(), "x".into(), "u".into()],
        rows: Vec::with_capacity(grid.len()),
    };
    for (j, u) in grid.iter().enumerate() {
        table
            .rows
            .push(vec![j.to_string(), format!("{:?}", j as f64 / m as f64), format!("{u:?}")]);
    }
    table
}

fn cmd_ldp(task: LdpTask, cfg: &RunConfig, out: &Path) -> Result<Outcome, Error> {
    let name = kind_name(&task);
    let manifest = RunManifest::start(&format!("ldp {name}"), cfg);
    let stem = format!("ldp-{name}");
    let theta = cfg.ldp.theta;
    match task {
        LdpTask::FreeEnergy => {
            let spec = cfg.free_energy_spec()?;
            let mut table = Table {
                columns: vec!["lambda".into(), "free_energy".into()],
                rows: Vec::new(),
            };
            let mut values = Vec::new();
            for &lambda in &cfg.ldp.lambdas {
                let f = ldp::free_energy(theta, lambda, &spec)?;
                values.push((lambda, f));
                table.rows.push(vec![format!("{lambda:?}"), format!("{f:?}")]);
            }
            finish(manifest, out, &stem, &table, cfg, &values)?;
        }
        LdpTask::Rate => {
            let spec = cfg.free_energy_spec()?;
            let mut table = Table {
                columns: vec!["x".into(), "rate".into(), "lambda".into(), "saturated".into()],
                rows: Vec::new(),
            };
            for &x in &cfg.ldp.x_values {
                let r = ldp::rate_function_detail(theta, x, &spec)?;
                table.rows.push(vec![
                    format!("{x:?}"),
                    format!("{:?}", r.value),
                    format!("{:?}", r.lambda),
                    r.saturated.to_string(),
                ]);
            }
            finish(manifest, out, &stem, &table, cfg, &cfg.ldp.x_values)?;
        }
        LdpTask::PathRate => {
            let u = cfg.ldp.path.build(cfg.bounds()?)?;
            let j = ldp::path_rate_j(&u);
            let table = Table {
                columns: vec!["cells".into(), "path_rate".into()],
                rows: vec![vec![u.cells().to_string(), format!("{j:?}")]],
            };
            println!("J = {j:?}");
            finish(manifest, out, &stem, &table, cfg, &j)?;
        }
        LdpTask::Annealed | LdpTask::ProfileRate => {
            let spec = cfg.free_energy_spec()?;
            let bounds = cfg.bounds()?;
            let r = match task {
                LdpTask::Annealed => ldp::annealed_free_energy(&cfg.annealed_phi()?, &spec, bounds, &cfg.ldp.solver)?,
                _ => ldp::profile_rate(&cfg.mu()?, &spec, bounds, &cfg.ldp.solver)?,
            };
            println!("value = {:?}", r.value);
            let report = ProfileReport {
                value: r.value,
                starts: &r.starts,
            };
            finish(manifest, out, &stem, &profile_table(&r), cfg, &report)?;
        }
    }
    Ok(Outcome::Pass)
}
