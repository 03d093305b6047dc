//! Curve fits for mean-squared-displacement series.
//!
//! The crossover model f(t) = α²τ²(t/τ − 1 + e^{−t/τ}) interpolates between
//! ballistic spreading α²t²/2 for t ≪ τ and diffusion α²τt for t ≫ τ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum series length accepted by [`fit_crossover`].
pub const MIN_CROSSOVER_POINTS: usize = 10;

/// x − 1 + e^{−x}, with its Taylor series near zero.
fn phi(x: f64) -> f64 {
    if x < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for n in 3..=12 {
            term *= -x / n as f64;
            sum += term;
        }
        sum
    } else {
        x - 1.0 + (-x).exp()
    }
}

/// x − 2 + (2 + x)e^{−x}, so that ∂f/∂ln τ = α²τ² ψ(t/τ); series
/// Σ_{n≥3} (−1)^{n+1}(n − 2)xⁿ/n! near zero.
fn psi(x: f64) -> f64 {
    if x < 0.1 {
        let mut pow = x * x * x / 6.0;
        let mut sum = pow;
        for n in 4..=14 {
            pow *= -x / n as f64;
            sum += (n - 2) as f64 * pow;
        }
        sum
    } else {
        x - 2.0 + (2.0 + x) * (-x).exp()
    }
}

/// f(t) = α²τ²(t/τ − 1 + e^{−t/τ}); zero when τ = 0.
pub fn crossover_model(alpha: f64, tau: f64, t: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    alpha * alpha * tau * tau * phi(t / tau)
}

/// (∂f/∂ln α, ∂f/∂ln τ).
pub fn crossover_gradient(alpha: f64, tau: f64, t: f64) -> (f64, f64) {
    let scale = alpha * alpha * tau * tau;
    let x = t / tau;
    (2.0 * scale * phi(x), scale * psi(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub tau: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub seed: u64,
    pub max_iterations: usize,
    /// Bound on the gradient of the cost normalised by ‖y‖².
    pub gradient_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { seed: 0, max_iterations: 500, gradient_tol: 1e-8 }
    }
}

struct Problem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    inv_norm: f64,
}

impl Problem<'_> {
    /// Scaled residuals (f − y)/‖y‖ and Jacobian rows in (ln α, ln τ).
    fn evaluate(&self, theta: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (alpha, tau) = (theta[0].exp(), theta[1].exp());
        let mut r = Vec::with_capacity(self.t.len());
        let mut jac = Vec::with_capacity(self.t.len());
        for (&t, &y) in self.t.iter().zip(self.y) {
            r.push((crossover_model(alpha, tau, t) - y) * self.inv_norm);
            let (ja, jt) = crossover_gradient(alpha, tau, t);
            jac.push([ja * self.inv_norm, jt * self.inv_norm]);
        }
        (r, jac)
    }

    fn cost(&self, theta: [f64; 2]) -> f64 {
        let (alpha, tau) = (theta[0].exp(), theta[1].exp());
        self.t
            .iter()
            .zip(self.y)
            .map(|(&t, &y)| ((crossover_model(alpha, tau, t) - y) * self.inv_norm).powi(2))
            .sum::<f64>()
            * 0.5
    }
}

struct Run {
    theta: [f64; 2],
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn normal_equations(r: &[f64], jac: &[[f64; 2]]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut g = [0.0; 2];
    for (ri, ji) in r.iter().zip(jac) {
        for k in 0..2 {
            g[k] += ji[k] * ri;
            for l in 0..2 {
                a[k][l] += ji[k] * ji[l];
            }
        }
    }
    (a, g)
}

fn levenberg_marquardt(problem: &Problem, start: [f64; 2], opts: &FitOptions) -> Run {
    let mut theta = start;
    let mut lambda = 1e-3;
    let mut cost = problem.cost(theta);
    for it in 0..opts.max_iterations {
        let (r, jac) = problem.evaluate(theta);
        let (a, g) = normal_equations(&r, &jac);
        if g[0].hypot(g[1]) < opts.gradient_tol {
            return Run { theta, cost, iterations: it, converged: true };
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let m = [[a[0][0] * (1.0 + lambda), a[0][1]], [a[1][0], a[1][1] * (1.0 + lambda)]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() > 0.0 && det.is_finite() {
                let step = [
                    -(m[1][1] * g[0] - m[0][1] * g[1]) / det,
                    -(m[0][0] * g[1] - m[1][0] * g[0]) / det,
                ];
                let trial = [theta[0] + step[0], theta[1] + step[1]];
                let trial_cost = problem.cost(trial);
                if trial_cost.is_finite() && trial_cost <= cost {
                    theta = trial;
                    cost = trial_cost;
                    lambda = (lambda * 0.1).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            let (r, jac) = problem.evaluate(theta);
            let (_, g) = normal_equations(&r, &jac);
            let converged = g[0].hypot(g[1]) < opts.gradient_tol;
            return Run { theta, cost, iterations: it + 1, converged };
        }
    }
    let (r, jac) = problem.evaluate(theta);
    let (_, g) = normal_equations(&r, &jac);
    Run { theta, cost, iterations: opts.max_iterations, converged: g[0].hypot(g[1]) < opts.gradient_tol }
}

fn check_series(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::DegenerateData(format!("{} times but {} values", t.len(), y.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("series contains non-finite values".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateData("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Least-squares fit of [`crossover_model`] to (t, y).
///
/// Levenberg–Marquardt in (ln α, ln τ) from five starts: τ₀ ∈ {t_max/100,
/// t_max/10, t_max/3} with α₀ from the early quadratic coefficient, and two
/// seeded log-uniform draws. The best converged start wins.
pub fn fit_crossover(t: &[f64], y: &[f64], opts: &FitOptions) -> Result<FitResult> {
    check_series(t, y)?;
    if t.len() < MIN_CROSSOVER_POINTS {
        return Err(Error::DegenerateData(format!(
            "need at least {MIN_CROSSOVER_POINTS} points, got {}",
            t.len()
        )));
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateData("series is identically zero".into()));
    }
    let t_max = t[t.len() - 1];
    if t_max <= 0.0 {
        return Err(Error::DegenerateData("series needs positive times".into()));
    }

    let early = (t.len() / 10).max(3);
    let (num, den) = t[..early]
        .iter()
        .zip(&y[..early])
        .fold((0.0, 0.0), |(n, d), (&ti, &yi)| (n + yi * ti * ti, d + ti.powi(4)));
    let alpha0 = if den > 0.0 && num > 0.0 {
        (2.0 * num / den).sqrt()
    } else {
        (2.0 * y.iter().cloned().fold(0.0, f64::max)).sqrt() / t_max
    };
    let alpha0 = if alpha0 > 0.0 { alpha0 } else { 1.0 };

    let mut starts: Vec<[f64; 2]> =
        [100.0, 10.0, 3.0].iter().map(|d| [alpha0.ln(), (t_max / d).ln()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..2 {
        let la = alpha0.ln() + rng.random_range(-10f64.ln()..10f64.ln());
        let lt = rng.random_range((t_max / 1000.0).ln()..(10.0 * t_max).ln());
        starts.push([la, lt]);
    }

    let problem = Problem { t, y, inv_norm: 1.0 / norm };
    let runs: Vec<Run> = starts.iter().map(|s| levenberg_marquardt(&problem, *s, opts)).collect();
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .ok_or_else(|| {
            Error::NonConvergence(format!(
                "no start reached gradient norm {:e} in {} iterations",
                opts.gradient_tol, opts.max_iterations
            ))
        })?;
    let (alpha, tau) = (best.theta[0].exp(), best.theta[1].exp());
    let rms = (t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| (crossover_model(alpha, tau, ti) - yi).powi(2))
        .sum::<f64>()
        / t.len() as f64)
        .sqrt();
    Ok(FitResult {
        alpha,
        tau,
        residual_rms: rms,
        iterations: best.iterations,
        converged: true,
        window: (t[0], t_max),
    })
}

/// Ordinary least squares y = a + b x; returns (b, a, r²).
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub beta: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
}

/// y ∝ t^β by regression of ln y on ln t over t ∈ [lo, hi].
pub fn fit_powerlaw(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    check_series(t, y)?;
    let (lo, hi) = window;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < lo || ti > hi {
            continue;
        }
        if ti <= 0.0 || yi <= 0.0 {
            return Err(Error::DegenerateData(format!(
                "non-positive point (t = {ti}, y = {yi}) inside the power-law window"
            )));
        }
        lx.push(ti.ln());
        ly.push(yi.ln());
    }
    if lx.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "power-law window [{lo}, {hi}] holds {} points, need 3",
            lx.len()
        )));
    }
    let (beta, intercept, r_squared) = fit_line(&lx, &ly);
    Ok(PowerLawFit { beta, prefactor: intercept.exp(), window, r_squared })
}

/// One-decade window [t*/√10, t*√10] around the most nearly quadratic
/// stretch of a spreading curve: t* is the first local minimum of the local
/// log-slope between the last non-positive value and the global maximum.
pub fn ballistic_window(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_series(t, y)?;
    let peak = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::DegenerateData("empty series".into()))?;
    let start = y[..=peak].iter().rposition(|&v| v <= 0.0).map_or(0, |i| i + 1);
    let start = start.max(t.iter().position(|&v| v > 0.0).unwrap_or(t.len()));
    if peak < start + 4 {
        return Err(Error::DegenerateData("no rising stretch to search".into()));
    }
    let slopes: Vec<(f64, f64)> = (start + 1..peak)
        .map(|i| (t[i], (y[i + 1].ln() - y[i - 1].ln()) / (t[i + 1].ln() - t[i - 1].ln())))
        .collect();
    let centre = slopes
        .windows(3)
        .find(|w| w[1].1 < w[0].1 && w[1].1 <= w[2].1)
        .map(|w| w[1].0)
        .ok_or_else(|| Error::DegenerateData("log-slope has no interior minimum".into()))?;
    let half = 10f64.sqrt();
    Ok((centre / half, centre * half))
}

/// First time the series falls below `ratio` times its first value, or the
/// last time if it never does.
pub fn decay_cutoff(t: &[f64], population: &[f64], ratio: f64) -> f64 {
    let threshold = population.first().copied().unwrap_or(0.0) * ratio;
    t.iter()
        .zip(population)
        .find(|(_, &p)| p < threshold)
        .map_or_else(|| t.last().copied().unwrap_or(0.0), |(&ti, _)| ti)
}
