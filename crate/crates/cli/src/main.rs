//! `fbmclt` command-line front end.

mod commands;
mod params;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fbmclt::Error;

use crate::commands::Output;
use crate::params::{Flags, Format, Params};

/// Quadrature and Monte Carlo laboratory for iterated fBm integrals.
///
/// Parameters resolve as: flags, then FBMCLT_* environment variables, then
/// the --config file, then per-subcommand defaults.
#[derive(Parser, Debug)]
#[command(name = "fbmclt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Limiting variance rate sigma_q^2 (q=2 deterministic, q>=3 Monte Carlo).
    Sigma,
    /// Exact second moment E[Y_(k^s) Y_(k^t)].
    Oracle,
    /// Simulate X_k(t) and report moment statistics.
    Simulate,
    /// Simulation plus limit variance and convergence-rate fit.
    Clt,
    /// Four-point growth integral for each T given by --k.
    Lemma41,
    /// q=2 contraction norms for each --k.
    Contraction,
    /// Winding functionals Z_t and Z'_t at horizon --t.
    Windings,
}

/// Process exit codes, one per error class.
mod exit {
    pub const USAGE: u8 = 2;
    pub const DOMAIN: u8 = 3;
    pub const CONFIG: u8 = 4;
    pub const NUMERICAL: u8 = 5;
    pub const CONVERGENCE: u8 = 6;
    pub const PARTIAL: u8 = 7;
    pub const IO: u8 = 8;
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => exit::DOMAIN,
        Error::Config(_) => exit::CONFIG,
        Error::Numerical(_) => exit::NUMERICAL,
        Error::Convergence { .. } => exit::CONVERGENCE,
        Error::PartialReport { .. } => exit::PARTIAL,
        Error::Io(_) => exit::IO,
    }
}

fn emit(out: &Output, params: &Params) -> Result<(), Error> {
    let body = match params.format()? {
        Format::Json => serde_json::to_string_pretty(&out.json).expect("JSON value serializes") + "\n",
        Format::Csv => out.csv.clone(),
    };
    match params.raw("output") {
        Some(path) => {
            fs::write(path, body)?;
            println!("{}", out.summary);
        }
        None => {
            io::stdout().write_all(body.as_bytes())?;
            eprintln!("{}", out.summary);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let params = Params::resolve(&cli.flags)?;
    params.format()?;
    if let Some(n) = &cli.flags.threads {
        let n: usize = n.parse().map_err(|_| Error::Config(format!("cannot parse threads = {n:?}")))?;
        if n == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = match cli.command {
        Command::Sigma => commands::sigma(&params),
        Command::Oracle => commands::oracle(&params),
        Command::Simulate => commands::simulate(&params),
        Command::Clt => commands::clt(&params),
        Command::Lemma41 => commands::lemma41(&params),
        Command::Contraction => commands::contraction(&params),
        Command::Windings => commands::windings(&params),
    }?;
    emit(&out, &params)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            if usage_error {
                eprintln!("error[usage]: invalid command line");
                return ExitCode::from(exit::USAGE);
            }
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(exit_code(&e))
        }
    }
}
