//! Command-line driver: reads an experiment configuration, runs one
//! subcommand inside a sized worker pool, and writes CSV artifacts plus a
//! run manifest into the output directory.
//!
//! Exit codes: 0 success, 1 failed property check, 2 configuration or
//! domain error, 3 exhausted resource budget.

use chebvar::config::{emit_config, parse_config, ExperimentConfig};
use chebvar::experiment::{theta_table_budgeted, thm1_report, thm2_report, variance_report};
use chebvar::galois::{build_context, classify_primes, GaloisContext};
use chebvar::report::{
    write_frequencies_csv, write_manifest, write_theta_csv, write_thm2_csv, write_variance_csv,
    ManifestInfo,
};
use chebvar::selfcheck::run_checks;
use chebvar::sieve::sieve_primes_budgeted;
use chebvar::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

const WORKERS_ENV: &str = "CHEBVAR_WORKERS";

#[derive(Parser)]
#[command(
    name = "chebvar",
    version,
    about = "Cycle-type prime statistics and square-error experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify primes by factorization pattern and report frequencies
    Classify(RunArgs),
    /// Tabulate the weighted counts theta(x; C, q, a) per residue class
    Theta(RunArgs),
    /// Sum square errors V(x, Q) over moduli for each configured x
    Variance(RunArgs),
    /// Variance rows constrained to the bound window x(log x)^-M <= Q <= x
    Thm1(RunArgs),
    /// Full-range variance asymptotics with a fitted slope
    Thm2(RunArgs),
    /// Run the property-check suite for the configured context
    Check(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Theta(_) => "theta",
            Command::Variance(_) => "variance",
            Command::Thm1(_) => "thm1",
            Command::Thm2(_) => "thm2",
            Command::Check(_) => "check",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Classify(a)
            | Command::Theta(a)
            | Command::Variance(a)
            | Command::Thm1(a)
            | Command::Thm2(a)
            | Command::Check(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's [output] dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides CHEBVAR_WORKERS and the config)
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for randomized checks (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Resource(_) => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>> {
    if let Some(w) = flag {
        if w == 0 {
            return Err(Error::Config("--workers must be >= 1".into()));
        }
        return Ok(Some(w));
    }
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let w: usize = raw
            .parse()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be an integer, got `{raw}`")))?;
        if w == 0 {
            return Err(Error::Config(format!("{WORKERS_ENV} must be >= 1")));
        }
        return Ok(Some(w));
    }
    Ok(config)
}

fn dispatch(command: &Command) -> Result<i32> {
    let started = Instant::now();
    let args = command.args();
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&out_dir)?;

    let workers = resolve_workers(args.workers, cfg.run.workers)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Resource(format!("cannot build worker pool: {e}")))?;
    let effective_workers = pool.current_num_threads();

    let code = pool.install(|| run_subcommand(command, &cfg, &out_dir))?;

    let manifest = ManifestInfo {
        version: env!("CARGO_PKG_VERSION"),
        subcommand: command.name(),
        workers: effective_workers,
        wall_seconds: started.elapsed().as_secs_f64(),
        config_text: &emit_config(&cfg),
    };
    write_artifact(&out_dir.join("manifest.txt"), |w| {
        write_manifest(w, &manifest)
    })?;
    Ok(code)
}

fn write_artifact<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn classified_to_max(cfg: &ExperimentConfig, ctx: &GaloisContext) -> Result<chebvar::galois::FrobeniusTable> {
    let x_max = *cfg.run.x_values.iter().max().expect("x_values nonempty");
    let budget = cfg.run.memory_budget_mb << 20;
    let primes = sieve_primes_budgeted(x_max, budget)?;
    classify_primes(ctx, x_max, &primes)
}

fn run_subcommand(command: &Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let ctx = build_context(&cfg.context)?;
    match command {
        Command::Classify(_) => {
            let table = classified_to_max(cfg, &ctx)?;
            write_artifact(&out_dir.join("frequencies.csv"), |w| {
                write_frequencies_csv(w, &table)
            })?;
        }
        Command::Theta(_) => {
            let table = classified_to_max(cfg, &ctx)?;
            let q_max = match cfg.run.q_rule.q_for(table.x) {
                0 => return Err(Error::Config("Q rule yields Q = 0".into())),
                q => q,
            };
            let budget = cfg.run.memory_budget_mb << 20;
            let t = theta_table_budgeted(&ctx, &table, q_max, budget)?;
            write_artifact(&out_dir.join("theta.csv"), |w| write_theta_csv(w, &ctx, &t))?;
        }
        Command::Variance(_) => {
            let table = classified_to_max(cfg, &ctx)?;
            let report = variance_report(&ctx, &table, &cfg.run.x_values, cfg.run.q_rule)?;
            write_artifact(&out_dir.join("variance.csv"), |w| {
                write_variance_csv(w, &report)
            })?;
        }
        Command::Thm1(_) => {
            let table = classified_to_max(cfg, &ctx)?;
            let report = thm1_report(
                &ctx,
                &table,
                &cfg.run.x_values,
                cfg.run.q_rule,
                cfg.run.m_exponent,
            )?;
            write_artifact(&out_dir.join("variance.csv"), |w| {
                write_variance_csv(w, &report)
            })?;
        }
        Command::Thm2(_) => {
            let table = classified_to_max(cfg, &ctx)?;
            let report = thm2_report(&ctx, &table, &cfg.run.x_values)?;
            write_artifact(&out_dir.join("thm2.csv"), |w| write_thm2_csv(w, &report))?;
        }
        Command::Check(_) => {
            let outcomes = run_checks(cfg)?;
            let mut lines = String::new();
            for o in &outcomes {
                lines.push_str(&format!(
                    "{} {}: {}\n",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                ));
            }
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            lines.push_str(&format!(
                "{} checks, {} passed, {} failed\n",
                outcomes.len(),
                outcomes.len() - failed,
                failed
            ));
            print!("{lines}");
            write_artifact(&out_dir.join("checks.txt"), |w| {
                w.write_all(lines.as_bytes())?;
                Ok(())
            })?;
            if failed > 0 {
                return Ok(1);
            }
        }
    }
    Ok(0)
}
