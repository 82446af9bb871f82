//! Command-line driver for the `lklab` experiments.
//!
//! Each subcommand reads a flat `key = value` document (see [`config`]),
//! writes its artifacts into `--out` and exits with 0 when the verdict
//! passes, 2 when it fails and 1 on any error.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::Config;
pub use run::{run, Options, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] lklab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "lklab", version, about = "Anisotropic Lorentz-Karamata norms and hyperbolic-cross approximation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment document (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Range of n, as `a:b`.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Samples per axis (norm, block-norm) or extra refinement exponent (theorem experiments).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Anisotropic norm of a catalog function.
    Norm,
    /// Enumerate a hyperbolic cross or one of its shells.
    Cross,
    /// Norms of Dirichlet blocks against their predicted order.
    BlockNorm,
    /// Y-shell sums against their bound.
    Lemma1,
    /// κ-shell sums against their bound.
    Lemma2,
    /// Normalised extremal errors against the predicted order.
    Theorem1Lower,
    /// Projection errors of class members against the predicted order.
    Theorem1Upper,
    /// Slowly varying class audit of a weight.
    SvCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Norm => "norm",
            Self::Cross => "cross",
            Self::BlockNorm => "block-norm",
            Self::Lemma1 => "lemma1",
            Self::Lemma2 => "lemma2",
            Self::Theorem1Lower => "theorem1-lower",
            Self::Theorem1Upper => "theorem1-upper",
            Self::SvCheck => "sv-check",
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let config = match &cli.config {
        Some(path) => Config::parse(&std::fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    let opts = Options {
        out: cli.out.clone(),
        window: cli.window.as_deref().map(config::parse_window).transpose()?,
        grid: cli.grid,
    };
    run(cli.command, config, &opts)
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommand_names() {
        for (name, cmd) in [
            ("block-norm", Command::BlockNorm),
            ("theorem1-lower", Command::Theorem1Lower),
            ("sv-check", Command::SvCheck),
        ] {
            let cli = Cli::try_parse_from(["lklab", name, "--window", "3:4"]).unwrap();
            assert_eq!(cli.command, cmd);
            assert_eq!(cmd.name(), name);
        }
    }
}
