//! Command-line front end: scene synthesis, aspect classification, slope
//! estimation, parameter sweeps and reservoir traces.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_aspect, cmd_slope, cmd_sweep, cmd_synth, cmd_trace, Report};
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cvrc", version, about = "Reservoir computing on interferometric phase differences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: DEM, interferogram, differences and truth.
    Synth(Common),
    /// Train, classify and evaluate aspect.
    Aspect(Common),
    /// Estimate east-west slope angles along rows.
    Slope(Common),
    /// Sweep reservoir size and frame size.
    Sweep(Common),
    /// Export per-step reservoir states along one scan line.
    Trace(Common),
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// key = value config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// cvrc, rvrc or neighbor.
    #[arg(long, value_name = "METHOD")]
    pub baseline: Option<String>,
    /// Scan line such as `i=210` or `j=270,i=10-411`.
    #[arg(long, value_name = "SPEC")]
    pub trace: Option<String>,
    /// simplified or general.
    #[arg(long, value_name = "MODE")]
    pub dynamics: Option<String>,
}

impl Common {
    /// Reads the config file, if any, then applies the flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        let overrides = [
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|s| s.to_string())),
            ("aspect.baseline", self.baseline.clone()),
            ("aspect.trace", self.trace.clone()),
            ("reservoir.dynamics", self.dynamics.clone()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(|e| CliError::Usage(format!("--{}: {e}", key.rsplit('.').next().unwrap())))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let (common, cmd): (&Common, fn(&RunConfig) -> Result<Report, CliError>) = match &cli.command {
        Command::Synth(c) => (c, cmd_synth),
        Command::Aspect(c) => (c, cmd_aspect),
        Command::Slope(c) => (c, cmd_slope),
        Command::Sweep(c) => (c, cmd_sweep),
        Command::Trace(c) => (c, cmd_trace),
    };
    cmd(&common.resolve()?)
}
