#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use output::Output;

/// Invalid parameters; exits with status 2 like a clap usage error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn resolve_seed(flag: u64) -> anyhow::Result<u64> {
    match std::env::var("AMDIM_SEED") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("AMDIM_SEED = {s:?} is not a 64-bit unsigned integer")).into()),
        _ => Ok(flag),
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let seed = resolve_seed(cli.seed)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut out = Output::new(cli.out.clone(), &cli.formats)?;
    let (name, done) = match &cli.command {
        Command::Region(a) => ("region", commands::region(a, &mut out)?),
        Command::Dimension(a) => ("dimension", commands::dimension(seed, a, &mut out)?),
        Command::EsnSweep(a) => ("esn-sweep", commands::esn_sweep(seed, a, &mut out)?),
        Command::Kac(a) => ("kac", commands::kac(seed, a, &mut out)?),
        Command::Wald(a) => ("wald", commands::wald(seed, a, &mut out)?),
        Command::Measure(a) => ("measure", commands::measure(seed, a, &mut out)?),
        Command::WalkExact(a) => ("walk-exact", commands::walk_exact(a, &mut out)?),
    };
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    out.finish(name, seed, done.params)?;
    if !done.passed {
        eprintln!("{name}: tolerance check failed");
    }
    Ok(done.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some() || e.downcast_ref::<amdim::AmError>().is_some();
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_TOLERANCE })
        }
    }
}
