//! `lawprice`: batch driver for pricing-functional evaluations, collapse
//! scans, risk measures, audits and Orlicz gauges.

mod commands;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lawprice_core::formats::{from_json_str, RunConfig};

use crate::commands::{Context, Output};
use crate::error::{CliError, CliResult};
use crate::output::{config_hash, sibling, write_atomic};

const DEFAULT_TOL: f64 = 1e-9;
const THREADS_VAR: &str = "LAWPRICE_THREADS";

#[derive(Parser)]
#[command(name = "lawprice", version, about = "Law-invariant pricing on finite probability spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prices, spreads and frictionless verdicts per payoff.
    Eval(Args),
    /// Collapse-to-the-mean scan plus a spread-landscape CSV.
    Collapse(Args),
    /// Risk measures for each acceptance set and payoff.
    Risk(Args),
    /// Flag, Schur-convexity and conditioning-closure audits.
    Audit(Args),
    /// Luxemburg norms, norm axioms and the Δ₂ check.
    Orlicz(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lawprice: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    let (name, args, handler): (&'static str, Args, fn(&Context) -> CliResult<Output>) = match command {
        Command::Eval(a) => ("eval", a, commands::eval),
        Command::Collapse(a) => ("collapse", a, commands::collapse),
        Command::Risk(a) => ("risk", a, commands::risk),
        Command::Audit(a) => ("audit", a, commands::audit),
        Command::Orlicz(a) => ("orlicz", a, commands::orlicz),
    };
    configure_threads()?;
    let config_path = args.config.as_path();
    let bytes = std::fs::read(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", config_path.display())))?;
    let config: RunConfig = from_json_str(&text)?;
    config.validate()?;
    if let Some(c) = &config.command {
        if c != name {
            return Err(CliError::Config(format!("config is for `{c}`, not `{name}`")));
        }
    }
    let tol = args.tol.or(config.tolerance).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Config(format!("tolerance must be positive, got {tol}")));
    }
    let out = args.out.clone().or_else(|| config.output.clone());
    let ctx = Context {
        command: name,
        seed: args.seed.or(config.seed).unwrap_or(0),
        tol,
        base_dir: config_path.parent().map(Path::to_path_buf).unwrap_or_default(),
        config_hash: config_hash(&bytes),
        config,
    };
    let output = handler(&ctx)?;
    match out {
        Some(path) => {
            write_atomic(&path, &output.report)?;
            for (suffix, contents) in &output.attachments {
                write_atomic(&sibling(&path, suffix), contents)?;
            }
        }
        None => print!("{}", output.report),
    }
    match output.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
