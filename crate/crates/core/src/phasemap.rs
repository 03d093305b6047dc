//! Phase diagram of the complex Rabi splitting over the (q, γ) plane.
//!
//! Each cell is labelled by the quadrant of Δ² = (δ + iγ)² + 4g² in the
//! complex plane, counted counter-clockwise from (+, +).

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{self, ModelParams};

/// Values of Re Δ² or Im Δ² closer to zero than this are a boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
    Boundary,
}

impl Quadrant {
    pub fn of(re: f64, im: f64) -> Self {
        if re.abs() < BOUNDARY_TOLERANCE || im.abs() < BOUNDARY_TOLERANCE {
            return Quadrant::Boundary;
        }
        match (re > 0.0, im > 0.0) {
            (true, true) => Quadrant::I,
            (false, true) => Quadrant::II,
            (false, false) => Quadrant::III,
            (true, false) => Quadrant::IV,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
            Quadrant::Boundary => "boundary",
        })
    }
}

/// Spectral summary of one (q, γ) point. Group velocities are NaN at an
/// exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub q: f64,
    pub gamma: f64,
    pub re_d2: f64,
    pub im_d2: f64,
    pub quadrant: Quadrant,
    pub gamma_up: f64,
    pub gamma_lp: f64,
    pub vg_up: f64,
    pub vg_lp: f64,
    pub re_eps_up: f64,
    pub re_eps_lp: f64,
}

pub fn classify(params: &ModelParams, q: f64, gamma: f64) -> PhaseCell {
    let p = params.with_gamma(gamma);
    let d = spectrum::detuning(&p, q);
    let (re_d2, im_d2) = spectrum::rabi_squared_parts(d, gamma, p.g);
    let (gamma_up, gamma_lp) = spectrum::relaxation_rates(&p, q);
    let (vg_up, vg_lp) = spectrum::group_velocity(&p, q).unwrap_or((f64::NAN, f64::NAN));
    let (up, lp) = spectrum::eigenvalues(&p, q);
    PhaseCell {
        q,
        gamma,
        re_d2,
        im_d2,
        quadrant: Quadrant::of(re_d2, im_d2),
        gamma_up,
        gamma_lp,
        vg_up,
        vg_lp,
        re_eps_up: up.re,
        re_eps_lp: lp.re,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExceptionalPoint {
    pub q: f64,
    pub gamma: f64,
    /// |Δ| at (q, γ).
    pub residual: f64,
    /// Smallest |Δ| over the four neighbours at distance `step`.
    pub neighbour_min: f64,
    pub step: f64,
}

impl ExceptionalPoint {
    pub fn verified(&self) -> bool {
        self.residual < 1e-12 && self.neighbour_min > 0.0
    }
}

/// (k_r, 2g), checked by |Δ| there and at its four neighbours one default
/// grid step away.
pub fn find_exceptional_point(params: &ModelParams) -> Result<ExceptionalPoint> {
    let q = spectrum::resonance_wavevector(params)?;
    let gamma = spectrum::critical_gamma(params);
    let rabi = |q: f64, gamma: f64| spectrum::rabi_splitting(&params.with_gamma(gamma), q).norm();
    let step = GridSpec::default().gamma_step();
    let neighbour_min = [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)]
        .iter()
        .map(|(dq, dg)| rabi(q + dq, gamma + dg))
        .fold(f64::INFINITY, f64::min);
    Ok(ExceptionalPoint { q, gamma, residual: rabi(q, gamma), neighbour_min, step })
}

/// Uniform sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub q_points: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            q_min: 0.0,
            q_max: std::f64::consts::PI,
            q_points: 400,
            gamma_min: 0.0,
            gamma_max: 1.2,
            gamma_points: 240,
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl GridSpec {
    pub fn q_grid(&self) -> Vec<f64> {
        linspace(self.q_min, self.q_max, self.q_points)
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        linspace(self.gamma_min, self.gamma_max, self.gamma_points)
    }

    fn gamma_step(&self) -> f64 {
        (self.gamma_max - self.gamma_min) / (self.gamma_points.max(2) - 1) as f64
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParams(format!("{name} grid is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(format!("{name} grid must be finite and increasing")));
    }
    Ok(())
}

/// Every (q, γ) cell, q-major.
pub fn sweep(params: &ModelParams, q_grid: &[f64], gamma_grid: &[f64]) -> Result<Vec<PhaseCell>> {
    check_axis("q", q_grid)?;
    check_axis("gamma", gamma_grid)?;
    if gamma_grid[0] < 0.0 {
        return Err(Error::InvalidParams("gamma grid must be non-negative".into()));
    }
    Ok(q_grid
        .par_iter()
        .flat_map_iter(|&q| gamma_grid.iter().map(move |&g| classify(params, q, g)))
        .collect())
}
