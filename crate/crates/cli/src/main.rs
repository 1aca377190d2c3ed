use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hylleraas::config::{OutputFormat, Settings};
use hylleraas::error::{Error, Result};
use hylleraas::report::{emit, emit_corrections, emit_solve, run_corrections, run_solve, run_tables};

/// Helium ground state from a Hylleraas variational basis.
#[derive(Debug, Parser)]
#[command(name = "hyhe", version)]
struct Cli {
    /// `key = value` configuration file; HYHE_* variables override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Working precision in decimal digits.
    #[arg(long, global = true, value_name = "D")]
    precision: Option<u32>,
    /// Fine-structure constant.
    #[arg(long, global = true, value_name = "X")]
    alpha: Option<f64>,
    #[arg(long, global = true, value_name = "human|json|csv")]
    format: Option<OutputFormat>,
    /// Directory for persisted integral tables.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "no_cache")]
    cache_dir: Option<PathBuf>,
    /// Ignore any configured cache directory.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energies and corrections for the configured list of basis sizes.
    Tables,
    /// Optimize k and solve for one basis size.
    Solve {
        #[arg(long)]
        n: usize,
        /// Use the infinite-mass Hamiltonian.
        #[arg(long)]
        no_nuclear_motion: bool,
    },
    /// Breit and radiative corrections, term by term.
    Corrections {
        #[arg(long)]
        n: usize,
    },
    /// Like `tables` for an explicit list of sizes.
    Sweep {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        n_list: Vec<usize>,
    },
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_kv(&std::fs::read_to_string(path)?)?,
        None => Settings::default(),
    };
    s.apply_env(std::env::vars())?;
    if let Some(p) = cli.precision {
        s.run.precision_digits = p;
    }
    if let Some(a) = cli.alpha {
        s.constants.alpha = a;
    }
    if let Some(f) = cli.format {
        s.run.output = f;
    }
    if let Some(dir) = &cli.cache_dir {
        s.run.cache_dir = Some(dir.clone());
    }
    if cli.no_cache {
        s.run.cache_dir = None;
    }
    Ok(s)
}

/// Output bytes and whether every requested computation succeeded.
fn run(cli: Cli) -> Result<(Vec<u8>, bool)> {
    let mut s = settings(&cli)?;
    let format = s.run.output;
    match cli.command.unwrap_or(Command::Tables) {
        Command::Tables => {
            let doc = run_tables(&s.run, &s.constants)?;
            Ok((emit(&doc, format)?, doc.succeeded()))
        }
        Command::Sweep { n_list } => {
            s.run.n_list = n_list;
            let doc = run_tables(&s.run, &s.constants)?;
            Ok((emit(&doc, format)?, doc.succeeded()))
        }
        Command::Solve { n, no_nuclear_motion } => {
            let r = run_solve(n, !no_nuclear_motion, &s.run, &s.constants)?;
            Ok((emit_solve(&r, format)?, true))
        }
        Command::Corrections { n } => {
            let r = run_corrections(n, &s.run, &s.constants)?;
            Ok((emit_corrections(&r, format)?, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((bytes, ok)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(&bytes).and_then(|_| out.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
