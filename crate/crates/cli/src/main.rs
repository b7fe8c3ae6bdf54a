//! `refsde`: run Skorokhod, penalization and Monte-Carlo convergence
//! experiments from a config file or a built-in benchmark.

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Builtin, Format, Kind, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "refsde", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve and verify the Skorokhod problem for a deterministic driver.
    Skorokhod(Common),
    /// Penalty sweep with a-priori bound checks and limits at continuity points.
    Penalize(Common),
    /// Monte-Carlo paths of the penalized scheme with aggregate statistics.
    Simulate(Common),
    /// Marginal and strong convergence over an (n, mesh) sweep.
    Converge(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in benchmark config instead of a file.
    #[arg(long, value_enum, conflicts_with = "config")]
    builtin: Option<Builtin>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Number of Monte-Carlo paths.
    #[arg(long, value_name = "M")]
    paths: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format; repeat for several.
    #[arg(long, value_enum)]
    format: Vec<Format>,
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::Skorokhod(c) => (Kind::Skorokhod, c),
            Command::Penalize(c) => (Kind::Penalize, c),
            Command::Simulate(c) => (Kind::Simulate, c),
            Command::Converge(c) => (Kind::Converge, c),
        }
    }
}

fn execute(kind: Kind, c: Common) -> Result<i32, CliError> {
    let flags = Overrides {
        config: c.config,
        builtin: c.builtin,
        seed: c.seed,
        paths: c.paths,
        out: c.out,
        formats: c.format,
    };
    let cfg = config::resolve(kind, &flags)?;
    let outcome = run::run(&cfg)?;
    println!(
        "{}",
        json!({"summary": outcome.summary, "artifacts": outcome.artifacts})
    );
    Ok(if outcome.failure_rate() > cfg.max_failure_rate {
        2
    } else if outcome.acceptance == Some(false) {
        3
    } else {
        0
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Validation {
                field: "arguments".into(),
                message: e.render().to_string().trim().to_string(),
            };
            eprintln!("{}", err.record());
            return ExitCode::from(1);
        }
    };
    let (kind, common) = cli.command.split();
    match execute(kind, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
