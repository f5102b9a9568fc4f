//! `cvxmf`: construct convex test functions, estimate their spectra, run the
//! verification suite and build Cantor schemes. Outputs are files or stdout;
//! nothing is interactive.

mod cantor_cmd;
mod construct;
mod output;
mod spectrum_cmd;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Invalid parameters.
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    /// Missing or unreadable input.
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    /// A check failed or an internal computation went wrong.
    pub fn check(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "cvxmf",
    version,
    about = "Convex functions, Hölder exponents and multifractal spectra"
)]
struct Cli {
    /// JSON file with defaults for the subcommand's options; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "CVXMF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a convex function expression.
    Construct(construct::ConstructArgs),
    /// Estimate the spectrum of a function file and check the upper bound.
    Spectrum(spectrum_cmd::SpectrumArgs),
    /// Run the verification suite.
    Verify(verify::VerifyArgs),
    /// Covering counts and local dimensions of a Cantor scheme.
    Cantor(cantor_cmd::CantorArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(default)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of stdout. The file is replaced atomically.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    fn merge(self, file: OutputArgs) -> Self {
        Self {
            format: self.format.or(file.format),
            out: self.out.or(file.out),
        }
    }
}

/// Reads `--config` into the options type of the subcommand.
fn load_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("bad config {}: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::check(format!("thread pool: {e}")))?;
    }
    let config = cli.config.as_ref();
    match cli.command {
        Command::Construct(a) => construct::run(a.merge(load_config(config)?)),
        Command::Spectrum(a) => spectrum_cmd::run(a.merge(load_config(config)?)),
        Command::Verify(a) => verify::run(a.merge(load_config(config)?)),
        Command::Cantor(a) => cantor_cmd::run(a.merge(load_config(config)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
