//! Command-line front end: config resolution, the `run` and `oracle`
//! commands, and result files.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plot;

use std::fmt;
use std::io::Write;

use clap::{Parser, Subcommand};
use distbandit_core::experiment::run_experiment;
use distbandit_core::solve_offline;

use config::{merge_sources, parse_config, ExperimentFlags, RunFlags};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration; exit code 2.
    Config(String),
    /// File system failure; exit code 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "distbandit", version, about = "Distributional-utility bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run replicated episodes and write gap.csv, bias.csv, weights.csv and summary.json.
    Run {
        #[command(flatten)]
        shared: ExperimentFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Solve for the truncated-simplex optimum and print it.
    Oracle {
        #[command(flatten)]
        shared: ExperimentFlags,
    },
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Executes a parsed command line, printing progress to `out`.
pub fn execute(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { shared, run } => {
            let resolved = parse_config(merge_sources(&shared, Some(&run))?)?;
            let cfg = &resolved.experiment;
            let result = run_experiment(cfg, resolved.jobs).map_err(|e| CliError::Config(e.to_string()))?;
            let files = output::write_all(&result, &cfg.output_dir, resolved.jobs, resolved.plots)?;
            writeln!(out, "ustar = {}", output::sig9(result.oracle.ustar)).map_err(io_err)?;
            for m in &result.modes {
                let g = m.final_gap();
                writeln!(out, "{}: final gap {} (se {})", m.mode.label(), output::sig9(g.mean), output::sig9(g.se)).map_err(io_err)?;
            }
            writeln!(out, "wrote {} to {}", files.join(", "), cfg.output_dir.display()).map_err(io_err)?;
        }
        Command::Oracle { shared } => {
            let resolved = parse_config(merge_sources(&shared, None)?)?;
            let cfg = &resolved.experiment;
            let instance = cfg.instance().map_err(|e| CliError::Config(e.to_string()))?;
            let res = solve_offline(&instance, cfg.gamma, &cfg.oracle_options()).map_err(|e| CliError::Config(e.to_string()))?;
            let w: Vec<String> = res.wstar.as_slice().iter().map(|x| output::sig9(*x)).collect();
            writeln!(out, "wstar = [{}]", w.join(", ")).map_err(io_err)?;
            writeln!(out, "ustar = {}", output::sig9(res.ustar)).map_err(io_err)?;
            writeln!(out, "certificate = {:e}", res.certificate).map_err(io_err)?;
            writeln!(out, "method = {:?}, iterations = {}, flagged = {}", res.method, res.iterations, res.flagged).map_err(io_err)?;
        }
    }
    Ok(())
}
