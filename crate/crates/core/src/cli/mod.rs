//! Command-line front end: argument parsing, configuration and the
//! subcommand runners behind the `taskdyn` binary.

pub mod commands;
pub mod config;
pub mod figures;
pub mod output;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;

/// Exit code for configuration and input errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for runtime divergence.
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trajectory diverged at t = {t_blowup}")]
    Diverged { t_blowup: f64 },
    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Diverged { .. } => EXIT_DIVERGED,
            CliError::Model(crate::Error::StepSizeCollapse { .. })
            | CliError::Model(crate::Error::MaxSteps(_))
            | CliError::Model(crate::Error::DivergedTrajectory) => EXIT_DIVERGED,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "taskdyn", version, about = "Simulate and analyze task-dynamic gesture models")]
pub struct Cli {
    /// JSON run configuration. Without it every setting takes its default.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a configuration value by dotted path, e.g. `model.k=4000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads for sweeps and figure batches.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output directory (default: `output.path` or the current directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate one gesture and write its trajectory.
    Simulate,
    /// Sweep one parameter and tabulate the kinematic landmarks.
    Sweep,
    /// Tabulate the restoring force components over a position range.
    Forces,
    /// Fit power laws of time-to-peak and peak velocity against stiffness.
    Powerlaw,
    /// Estimate stiffness and ratio from an observed trajectory.
    Fit {
        /// Observed `t,x[,v]` CSV; overrides `fit.observed`.
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Regenerate the data behind one of the reference figures.
    Reproduce {
        /// Figure number, 1 to 4.
        figure: String,
    },
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set when a trajectory diverged after its output was written.
    pub diverged: Option<f64>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.diverged.is_some() {
            EXIT_DIVERGED
        } else {
            0
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => "{}".to_string(),
    };
    RunConfig::load(&text, &cli.set)
}

pub fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Parses the configuration, then runs the command on a pool of `--jobs`
/// threads. Nothing is written unless the configuration is valid.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = load_config(cli)?;
    let figure = match &cli.command {
        Command::Reproduce { figure } => Some(figures::Figure::parse(figure)?),
        _ => None,
    };
    let dir = out_dir(cli, &cfg);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs: must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate => commands::simulate(&cfg, &dir),
        Command::Sweep => commands::sweep(&cfg, &dir),
        Command::Forces => commands::forces(&cfg, &dir),
        Command::Powerlaw => commands::powerlaw(&cfg, &dir),
        Command::Fit { data } => commands::fit(&cfg, data.as_deref(), &dir),
        Command::Reproduce { .. } => figures::reproduce(figure.expect("parsed above"), &dir),
    })
}
