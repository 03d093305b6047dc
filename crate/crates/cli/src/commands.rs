use std::path::Path;

use mntc_core::fitkit::{self, FitResult, PowerLawFit};
use mntc_core::moments::{Dynamics, Trajectory};
use mntc_core::phasemap;
use mntc_core::refprop::{self, LatticePropagator, LatticeState, MAX_ORACLE_SITES, ORACLE_DT};
use mntc_core::spectrum;
use mntc_core::{Branch, Error};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{format_number, Dataset, Value};

const SPECTRUM_COLUMNS: [&str; 10] = [
    "q", "gamma", "re_eps_up", "re_eps_lp", "im_eps_up", "im_eps_lp", "gamma_up", "gamma_lp",
    "vg_up", "vg_lp",
];

fn spectrum_row(cfg: &RunConfig, q: f64, gamma: f64) -> Vec<Value> {
    let p = cfg.model.with_gamma(gamma);
    let (up, lp) = spectrum::eigenvalues(&p, q);
    let (gu, gl) = spectrum::relaxation_rates(&p, q);
    let (vu, vl) = spectrum::group_velocity(&p, q).unwrap_or((f64::NAN, f64::NAN));
    [q, gamma, up.re, lp.re, up.im, lp.im, gu, gl, vu, vl].into_iter().map(Value::Num).collect()
}

/// Branch energies, rates and velocities. With `scan.qs` the rows run over
/// the γ grid for each listed q; otherwise over the q grid for each γ.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Dataset, CliError> {
    cfg.validate_spectral()?;
    let mut ds = Dataset::new("spectrum", &SPECTRUM_COLUMNS);
    let pairs: Vec<(f64, f64)> = match &cfg.scan.qs {
        Some(qs) => {
            let gammas = cfg.grid.gamma_grid();
            qs.iter().flat_map(|&q| gammas.iter().map(move |&g| (q, g))).collect()
        }
        None => {
            let qs = cfg.grid.q_grid();
            cfg.spectrum_gammas()
                .into_iter()
                .flat_map(|g| qs.iter().map(move |&q| (q, g)).collect::<Vec<_>>())
                .collect()
        }
    };
    ds.rows = pairs.par_iter().map(|&(q, g)| spectrum_row(cfg, q, g)).collect();
    Ok(ds)
}

fn trajectories(cfg: &RunConfig, gammas: &[f64]) -> Result<Vec<Trajectory>, CliError> {
    let spec = cfg.packet_spec();
    gammas
        .iter()
        .map(|&g| {
            let dynamics = Dynamics::new(&spec, &cfg.model.with_gamma(g))?;
            Ok(dynamics.trajectory(&cfg.time)?)
        })
        .collect()
}

/// Population, centre of mass and MSD of the packet for each loss rate.
pub fn cmd_dynamics(cfg: &RunConfig) -> Result<Dataset, CliError> {
    cfg.validate_dynamics()?;
    let mut ds = Dataset::new(
        "dynamics",
        &["branch", "gamma", "t", "population", "cm", "cm_approx", "msd", "vterm_avg", "vterm_corr"],
    );
    let trajs = trajectories(cfg, &cfg.dynamics_gammas(false))?;
    let mut widths = Vec::new();
    for tr in &trajs {
        widths.push(format!("gamma={} W={}", format_number(tr.gamma), format_number(tr.width)));
        for i in 0..tr.len() {
            let t = tr.times[i];
            let vt = tr.velocity_terms[i];
            ds.push(vec![
                tr.branch.to_string().into(),
                tr.gamma.into(),
                t.into(),
                tr.population[i].into(),
                tr.cm[i].into(),
                tr.cm_approx[i].into(),
                tr.msd[i].into(),
                vt.avg_vg.into(),
                vt.correction(t).into(),
            ]);
        }
    }
    ds.summary = Some(format!("branch={} {}", cfg.packet.branch, widths.join(" ")));
    Ok(ds)
}

/// One (branch, γ) series to fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub branch: Branch,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    pub msd: Vec<f64>,
}

impl From<&Trajectory> for Series {
    fn from(tr: &Trajectory) -> Self {
        Self {
            branch: tr.branch,
            gamma: tr.gamma,
            times: tr.times.clone(),
            population: tr.population.clone(),
            msd: tr.msd.clone(),
        }
    }
}

/// Reads the series of a `dynamics` CSV file.
pub fn read_trajectory_file(path: &Path) -> Result<Vec<Series>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_trajectory_csv(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<Series>, CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| CliError::Config("trajectory file is empty".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::Config(format!("trajectory header lacks column `{name}`")))
    };
    let (ib, ig, it, ip, im) = (find("branch")?, find("gamma")?, find("t")?, find("population")?, find("msd")?);
    let mut out: Vec<Series> = Vec::new();
    for (n, line) in lines {
        let bad = |what: &str| CliError::Config(format!("line {}: {what}", n + 1));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(bad(&format!("expected {} fields, found {}", cols.len(), cells.len())));
        }
        let num = |i: usize| cells[i].parse::<f64>().map_err(|_| bad(&format!("`{}` is not a number", cells[i])));
        let branch: Branch = cells[ib].parse().map_err(|_| bad(&format!("unknown branch `{}`", cells[ib])))?;
        let (gamma, t, p, m) = (num(ig)?, num(it)?, num(ip)?, num(im)?);
        match out.last_mut() {
            Some(s) if s.branch == branch && s.gamma == gamma => {
                s.times.push(t);
                s.population.push(p);
                s.msd.push(m);
            }
            _ => out.push(Series { branch, gamma, times: vec![t], population: vec![p], msd: vec![m] }),
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("trajectory file has no data rows".into()));
    }
    Ok(out)
}

enum FitOutcome {
    Crossover(FitResult),
    PowerLaw(PowerLawFit),
}

fn fit_series(cfg: &RunConfig, s: &Series) -> Result<FitOutcome, Error> {
    match s.branch {
        Branch::Upper => {
            let cutoff = fitkit::decay_cutoff(&s.times, &s.population, cfg.fit.population_cutoff);
            let end = s.times.iter().take_while(|&&t| t <= cutoff).count();
            let fit = fitkit::fit_crossover(&s.times[..end], &s.msd[..end], &cfg.fit_options())?;
            Ok(FitOutcome::Crossover(fit))
        }
        Branch::Lower => {
            let window = match cfg.fit.window {
                Some(w) => w,
                None => fitkit::ballistic_window(&s.times, &s.msd)?,
            };
            Ok(FitOutcome::PowerLaw(fitkit::fit_powerlaw(&s.times, &s.msd, window)?))
        }
    }
}

/// Crossover fits for the upper branch, power-law fits for the lower.
/// A failed fit becomes a row with its error in `status`.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Dataset, CliError> {
    cfg.validate_dynamics()?;
    let series: Vec<Series> = match &cfg.fit.trajectory {
        Some(path) => read_trajectory_file(path)?,
        None => trajectories(cfg, &cfg.dynamics_gammas(true))?.iter().map(Series::from).collect(),
    };
    let mut ds = Dataset::new(
        "fit",
        &[
            "branch", "gamma", "model", "alpha", "tau", "residual_rms", "iterations", "beta",
            "prefactor", "r_squared", "t_lo", "t_hi", "status",
        ],
    );
    let nan = f64::NAN;
    ds.rows = series
        .par_iter()
        .map(|s| {
            let head: Vec<Value> = vec![s.branch.to_string().into(), s.gamma.into()];
            let tail: Vec<Value> = match fit_series(cfg, s) {
                Ok(FitOutcome::Crossover(f)) => vec![
                    "crossover".into(),
                    f.alpha.into(),
                    f.tau.into(),
                    f.residual_rms.into(),
                    f.iterations.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    f.window.0.into(),
                    f.window.1.into(),
                    "ok".into(),
                ],
                Ok(FitOutcome::PowerLaw(f)) => vec![
                    "powerlaw".into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    Value::Int(0),
                    f.beta.into(),
                    f.prefactor.into(),
                    f.r_squared.into(),
                    f.window.0.into(),
                    f.window.1.into(),
                    "ok".into(),
                ],
                Err(e) => {
                    let model = if s.branch == Branch::Upper { "crossover" } else { "powerlaw" };
                    let mut v: Vec<Value> = vec![model.into()];
                    v.extend([nan, nan, nan].map(Value::Num));
                    v.push(Value::Int(0));
                    v.extend([nan, nan, nan, nan, nan].map(Value::Num));
                    v.push(e.to_string().replace(',', ";").into());
                    v
                }
            };
            head.into_iter().chain(tail).collect()
        })
        .collect();
    Ok(ds)
}

/// Phase-diagram sweep with the exceptional point in the summary.
pub fn cmd_phase(cfg: &RunConfig) -> Result<Dataset, CliError> {
    cfg.validate_spectral()?;
    let qs = cfg.scan.qs.clone().unwrap_or_else(|| cfg.grid.q_grid());
    let gammas = cfg.scan.gammas.clone().unwrap_or_else(|| cfg.grid.gamma_grid());
    let cells = phasemap::sweep(&cfg.model, &qs, &gammas).map_err(|e| CliError::Config(format!("grid: {e}")))?;
    let mut ds = Dataset::new(
        "phase",
        &[
            "q", "gamma", "re_d2", "im_d2", "quadrant", "gamma_up", "gamma_lp", "vg_up", "vg_lp",
            "re_eps_up", "re_eps_lp",
        ],
    );
    for c in cells {
        ds.push(vec![
            c.q.into(),
            c.gamma.into(),
            c.re_d2.into(),
            c.im_d2.into(),
            c.quadrant.to_string().into(),
            c.gamma_up.into(),
            c.gamma_lp.into(),
            c.vg_up.into(),
            c.vg_lp.into(),
            c.re_eps_up.into(),
            c.re_eps_lp.into(),
        ]);
    }
    ds.summary = Some(match phasemap::find_exceptional_point(&cfg.model) {
        Ok(ep) => format!(
            "exceptional point k_r={} gamma_c={} residual={} verified={}",
            format_number(ep.q),
            format_number(ep.gamma),
            format_number(ep.residual),
            ep.verified()
        ),
        Err(e) => format!("no exceptional point: {e}"),
    });
    Ok(ds)
}

/// Brute-force lattice integration next to the spectral moments.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<Dataset, CliError> {
    cfg.validate_dynamics()?;
    if cfg.model.n_modes > MAX_ORACLE_SITES {
        return Err(CliError::Config(format!(
            "model.n_modes: the lattice oracle accepts at most {MAX_ORACLE_SITES} sites"
        )));
    }
    let mut ds = Dataset::new(
        "oracle",
        &[
            "branch", "gamma", "t", "population", "cm", "msd", "population_lattice", "cm_lattice",
            "msd_lattice",
        ],
    );
    let spec = cfg.packet_spec();
    for gamma in cfg.dynamics_gammas(false) {
        let params = cfg.model.with_gamma(gamma);
        let dynamics = Dynamics::new(&spec, &params)?;
        let prop = LatticePropagator::new(&params, ORACLE_DT)?;
        let mut state = LatticeState::from_packet(dynamics.modes());
        let var0 = refprop::oracle_moments(&state)?.variance();
        for t in cfg.time.times() {
            state = prop.advance(&state, t - state.t);
            let lat = refprop::oracle_moments(&state)?;
            let m = dynamics.site_moments(t)?;
            ds.push(vec![
                spec.branch.to_string().into(),
                gamma.into(),
                t.into(),
                dynamics.population(t).into(),
                m.mean().into(),
                dynamics.msd_from(&m).into(),
                lat.population.into(),
                lat.n_mean.into(),
                (lat.variance() - var0).into(),
            ]);
        }
    }
    Ok(ds)
}
