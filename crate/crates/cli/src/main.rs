mod config;
mod experiments;
mod manifest;
mod regression;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{Config, ConfigError, Experiment};
use manifest::Manifest;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "fracreg", version, about = "Experiments for parabolic equations with generalized Marchaud time derivatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory [default: `output.dir` from the config, else `out`]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve D v = f on a time grid.
    SolveOde(RunArgs),
    /// Solve the space–time Isaacs problem and certify the Pucci sandwich.
    SolveParabolic(RunArgs),
    /// Fit Hölder exponents of a solution from oscillation decay.
    EstimateHolder(RunArgs),
    /// Sweep α and test the fitted constants for blow-up.
    SweepAlpha(RunArgs),
    /// Sub-level ring scan (and optional L^ε curve) of an ODE solution.
    ProbeMeasure(RunArgs),
    /// Seeded randomized invariant suites.
    VerifyInvariants(RunArgs),
    /// Check or rewrite the regression store.
    Regression(RegressionArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Check,
    Update,
}

#[derive(Args)]
struct RegressionArgs {
    mode: Mode,
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::SolveOde(a) => run_experiment(Experiment::SolveOde, &a),
        Command::SolveParabolic(a) => run_experiment(Experiment::SolveParabolic, &a),
        Command::EstimateHolder(a) => run_experiment(Experiment::EstimateHolder, &a),
        Command::SweepAlpha(a) => run_experiment(Experiment::SweepAlpha, &a),
        Command::ProbeMeasure(a) => run_experiment(Experiment::ProbeMeasure, &a),
        Command::VerifyInvariants(a) => run_experiment(Experiment::VerifyInvariants, &a),
        Command::Regression(a) => run_regression(&a),
    };
    ExitCode::from(code)
}

/// 0 pass, 1 verified failure, 2 configuration or precondition error.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<fracreg::Error>() {
            return match e {
                fracreg::Error::Invalid(_) | fracreg::Error::Precondition(_) | fracreg::Error::Sandwich { .. } | fracreg::Error::Io(_) => 2,
                _ => 1,
            };
        }
    }
    2
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> u8 {
    let clock = Instant::now();
    let mut m = Manifest::default();
    m.set("experiment", experiment.name());
    m.set("config_path", args.config.display());
    m.set("fracreg_version", env!("CARGO_PKG_VERSION"));
    let mut out = args.out.clone();
    let result = execute(experiment, args, &mut m, &mut out);
    let code = match &result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {}: {e:#}", args.config.display());
            m.set("error", format!("{e:#}"));
            exit_code(e)
        }
    };
    m.set("status", ["pass", "fail", "error"][code as usize]);
    m.set("exit_code", code);
    m.set("elapsed_seconds", format!("{:.3}", clock.elapsed().as_secs_f64()));
    let out = out.unwrap_or_else(|| PathBuf::from("out"));
    if std::fs::create_dir_all(&out).is_ok() {
        if let Err(e) = m.write(&out.join("manifest.txt")) {
            eprintln!("error: writing manifest: {e}");
            return 2;
        }
    }
    println!("{} {}", experiment.name(), ["pass", "fail", "error"][code as usize]);
    code
}

fn execute(experiment: Experiment, args: &RunArgs, m: &mut Manifest, out: &mut Option<PathBuf>) -> Result<bool> {
    let source = std::fs::read_to_string(&args.config).map_err(|e| ConfigError { line: 0, message: format!("cannot read {}: {e}", args.config.display()) })?;
    m.set("config_sha256", hex::encode(Sha256::digest(source.as_bytes())));
    let cfg = Config::parse(&source, experiment)?;
    if out.is_none() {
        *out = cfg.raw.output.as_ref().map(|o| o.dir.clone());
    }
    let out = out.get_or_insert_with(|| PathBuf::from("out")).clone();
    for (k, v) in config::echo(&source) {
        m.set(&format!("config.{k}"), v);
    }
    set_threads(args.threads)?;
    m.set("seed", cfg.raw.seed);
    m.set("threads", args.threads.unwrap_or_else(rayon::current_num_threads));
    record_quadrature(m, &cfg.quadrature);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let t = Instant::now();
    let outcome = experiments::run(&cfg, &out)?;
    m.set("run_seconds", format!("{:.3}", t.elapsed().as_secs_f64()));
    m.set("artifacts", outcome.artifacts.join(";"));
    for (k, v) in &outcome.summary {
        m.set(&format!("result.{k}"), v);
    }
    Ok(outcome.pass)
}

fn record_quadrature(m: &mut Manifest, q: &fracreg::QuadratureSpec) {
    m.set("quadrature.tail_cutoff_error", format!("{:e}", q.tail_cutoff_error));
    m.set("quadrature.history_rel_tol", format!("{:e}", q.history_rel_tol));
    m.set("quadrature.start_basis", format!("{:?}", q.start_basis).to_lowercase());
    m.set("quadrature.gauss_points", q.gauss_points);
    m.set("quadrature.grading_levels", q.grading_levels);
    m.set("quadrature.far_field_panels", q.far_field_panels);
    m.set("quadrature.max_intervals", q.max_intervals);
}

fn run_regression(args: &RegressionArgs) -> u8 {
    let spec = fracreg::QuadratureSpec::default();
    let result = set_threads(args.threads).and_then(|_| match args.mode {
        Mode::Update => regression::update(&args.store, &args.suite, &spec).map(|n| {
            println!("wrote {n} entries to {}", args.store.display());
            true
        }),
        Mode::Check => regression::check(&args.store, &args.suite, &spec).map(|rows| report(&rows, &args.store)),
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn report(rows: &[regression::CheckRow], store: &Path) -> bool {
    let fmt = |v: f64| format!("{v:.10e}");
    for r in rows {
        let stored = r.stored.map_or("missing".to_string(), fmt);
        println!("{} {} measured={} stored={stored}", if r.pass { "PASS" } else { "FAIL" }, r.key, fmt(r.measured));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} of {} entries match {}", rows.len() - failed, rows.len(), store.display());
    failed == 0
}
