//! Command-line front end: configuration, subcommands and dataset writers.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mntc_core::Branch;

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Format, RunConfig};
pub use error::CliError;
pub use output::Dataset;

#[derive(Debug, Parser)]
#[command(name = "mntc", version, about = "Polariton spectra, packet dynamics and phase maps of a lossy multimode cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomised fit starts
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Photon loss rates, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Packet centre wavevector
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Polariton branch: up or lp
    #[arg(long, global = true)]
    pub branch: Option<Branch>,
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Number of sites and cavity modes
    #[arg(long, global = true)]
    pub nmodes: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Branch energies, relaxation rates and group velocities
    Spectrum,
    /// Population, centre of mass and MSD of a branch-projected packet
    Dynamics,
    /// Crossover and power-law fits of MSD series
    Fit {
        /// Fit a trajectory file written by `dynamics` instead of simulating
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Quadrant map of the squared Rabi splitting and the exceptional point
    Phase,
    #[command(hide = true)]
    Oracle,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = &self.out {
            cfg.output.path = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.output.format = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.gamma {
            cfg.scan.gammas = Some(v.clone());
        }
        if let Some(v) = self.p {
            cfg.packet.p = Some(v);
        }
        if let Some(v) = self.branch {
            cfg.packet.branch = v;
        }
        if let Some(v) = self.tmax {
            cfg.time.t_max = v;
        }
        if let Some(v) = self.dt {
            cfg.time.dt = v;
        }
        if let Some(v) = self.nmodes {
            cfg.model.n_modes = v;
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    if let Command::Fit { trajectory: Some(path) } = &cli.command {
        cfg.fit.trajectory = Some(path.clone());
    }
    Ok(cfg)
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Dataset, CliError> {
    match command {
        Command::Spectrum => commands::cmd_spectrum(cfg),
        Command::Dynamics => commands::cmd_dynamics(cfg),
        Command::Fit { .. } => commands::cmd_fit(cfg),
        Command::Phase => commands::cmd_phase(cfg),
        Command::Oracle => commands::cmd_oracle(cfg),
    }
}

/// Runs one invocation and writes its dataset.
pub fn execute(cli: &Cli) -> Result<Dataset, CliError> {
    let cfg = resolve_config(cli)?;
    let ds = dispatch(&cli.command, &cfg)?;
    match &cfg.output.path {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            ds.write(&cfg, cfg.output.format, &mut w)?;
            w.flush()?;
            if let Some(s) = &ds.summary {
                println!("{s}");
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            ds.write(&cfg, cfg.output.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(ds)
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("mntc: {e}");
            e.exit_code()
        }
    }
}
