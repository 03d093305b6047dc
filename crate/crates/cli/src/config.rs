//! Run configuration: a TOML file, overlaid by command-line flags.

use std::path::{Path, PathBuf};

use mntc_core::fitkit::FitOptions;
use mntc_core::moments::TimeGrid;
use mntc_core::phasemap::GridSpec;
use mntc_core::{Branch, ModelParams, WavePacketSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Destination file; standard output when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Packet settings; an absent `p` takes the branch default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketConfig {
    pub p: Option<f64>,
    pub w: f64,
    pub branch: Branch,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self { p: None, w: 10.0, branch: Branch::Upper }
    }
}

impl PacketConfig {
    pub fn resolve(&self) -> WavePacketSpec {
        let p = self.p.unwrap_or(match self.branch {
            Branch::Upper => 0.5,
            Branch::Lower => 0.03,
        });
        WavePacketSpec::new(p, self.w, self.branch)
    }
}

/// Explicit lists that replace one axis of a sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub gammas: Option<Vec<f64>>,
    pub qs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Trajectory file from `dynamics` to fit instead of simulating.
    pub trajectory: Option<PathBuf>,
    /// Crossover fits stop where the population falls below this fraction
    /// of its initial value.
    pub population_cutoff: f64,
    /// Power-law window; chosen from the data when absent.
    pub window: Option<(f64, f64)>,
    pub max_iterations: usize,
    pub gradient_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let opts = FitOptions::default();
        Self {
            trajectory: None,
            population_cutoff: 1e-4,
            window: None,
            max_iterations: opts.max_iterations,
            gradient_tol: opts.gradient_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelParams,
    pub packet: PacketConfig,
    pub time: TimeGrid,
    pub grid: GridSpec,
    pub scan: ScanSpec,
    pub fit: FitConfig,
    pub output: OutputSpec,
}

fn field(path: &str) -> impl Fn(mntc_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{path}: {e}"))
}

fn check_list(path: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("{path}: list is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{path}: values must be finite")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn packet_spec(&self) -> WavePacketSpec {
        self.packet.resolve()
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            seed: self.seed,
            max_iterations: self.fit.max_iterations,
            gradient_tol: self.fit.gradient_tol,
        }
    }

    /// Loss rates for `dynamics` and `fit`, defaulting per branch.
    pub fn dynamics_gammas(&self, for_fit: bool) -> Vec<f64> {
        if let Some(g) = &self.scan.gammas {
            return g.clone();
        }
        match (self.packet.branch, for_fit) {
            (Branch::Upper, false) => vec![0.1, 0.67, 1.0],
            (Branch::Upper, true) => (1..=12).map(|i| i as f64 / 10.0).collect(),
            (Branch::Lower, _) => vec![0.01, 0.05, 0.07],
        }
    }

    pub fn spectrum_gammas(&self) -> Vec<f64> {
        self.scan.gammas.clone().unwrap_or_else(|| vec![0.1, 0.6, 1.0])
    }

    pub fn validate_spectral(&self) -> Result<(), CliError> {
        self.model.validate_spectral().map_err(field("model"))?;
        if self.grid.q_points == 0 || self.grid.gamma_points == 0 {
            return Err(CliError::Config("grid: point counts must be >= 1".into()));
        }
        let axes = [self.grid.q_min, self.grid.q_max, self.grid.gamma_min, self.grid.gamma_max];
        if axes.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("grid: bounds must be finite".into()));
        }
        if self.grid.q_max < self.grid.q_min || self.grid.gamma_max < self.grid.gamma_min {
            return Err(CliError::Config("grid: max must not be below min".into()));
        }
        if self.grid.gamma_min < 0.0 {
            return Err(CliError::Config("grid.gamma_min: must be >= 0".into()));
        }
        if let Some(g) = &self.scan.gammas {
            check_list("scan.gammas", g)?;
            if g.iter().any(|&v| v < 0.0) {
                return Err(CliError::Config("scan.gammas: values must be >= 0".into()));
            }
        }
        if let Some(q) = &self.scan.qs {
            check_list("scan.qs", q)?;
        }
        Ok(())
    }

    pub fn validate_dynamics(&self) -> Result<(), CliError> {
        self.validate_spectral()?;
        self.model.validate().map_err(field("model"))?;
        self.packet_spec().validate().map_err(field("packet"))?;
        self.time.validate().map_err(field("time"))?;
        if !(self.fit.population_cutoff > 0.0 && self.fit.population_cutoff < 1.0) {
            return Err(CliError::Config("fit.population_cutoff: must lie in (0, 1)".into()));
        }
        if let Some((lo, hi)) = self.fit.window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::Config("fit.window: need lo < hi".into()));
            }
        }
        if self.fit.max_iterations == 0 || !(self.fit.gradient_tol > 0.0) {
            return Err(CliError::Config(
                "fit: max_iterations and gradient_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}
