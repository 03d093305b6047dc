//! Closed-form spectrum of the per-mode 2×2 lossy light–matter block
//!
//! ```text
//!         ⎡ ω_M     g     ⎤
//!   H_q = ⎣ g    ω_q − iγ ⎦        basis order (molecule, photon)
//! ```
//!
//! with ω_q = sqrt(q² + ω_C²). Everything here is a pure function of
//! [`ModelParams`] and the continuous wavevector `q ∈ [−π, π]`.
//!
//! The Rabi splitting Δ = sqrt((δ + iγ)² + 4g²) is taken on the branch with
//! `Re Δ ≥ 0` (ties broken towards `Im Δ ≥ 0`); the upper polariton is always
//! the `+Δ` root. For γ > 2g this makes the branch labels, and therefore the
//! relaxation rates, jump across the resonance wavevector.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |Δ| below which the block is treated as defective.
pub const EP_TOLERANCE: f64 = 1e-10;

/// The five model constants. Energies are dimensionless with ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Molecular transition energy ω_M.
    pub omega_m: f64,
    /// Photon confinement energy ω_C.
    pub omega_c: f64,
    /// Light–matter coupling g.
    pub g: f64,
    /// Photon loss rate γ.
    pub gamma: f64,
    /// Number of emitters, equal to the number of cavity modes.
    pub n_modes: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { omega_m: 1.0, omega_c: 0.4, g: 0.3, gamma: 0.1, n_modes: 2000 }
    }
}

impl ModelParams {
    /// Copy with a different photon loss rate.
    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_modes(self, n_modes: usize) -> Self {
        Self { n_modes, ..self }
    }

    /// Checks everything except the existence of a resonance, which is
    /// reported separately as [`Error::NoResonance`] by the operations that
    /// need it.
    pub fn validate(&self) -> Result<()> {
        self.validate_spectral()?;
        if self.g == 0.0 {
            return Err(Error::InvalidParams("g must be > 0 for packet dynamics".into()));
        }
        Ok(())
    }

    /// As [`Self::validate`] but also admits the uncoupled limit g = 0,
    /// where γ_C = 0 and every lossy point lies beyond the critical loss.
    pub fn validate_spectral(&self) -> Result<()> {
        let finite = [self.omega_m, self.omega_c, self.g, self.gamma];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("model constants must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be >= 0, got {}", self.g)));
        }
        if self.omega_c < 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega_c must be >= 0, got {}",
                self.omega_c
            )));
        }
        if self.n_modes < 2 || self.n_modes % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "n_modes must be even and >= 2, got {}",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// `k_r² = ω_M² − ω_C²`, factored so that it is exact when ω_C = 0.
    fn resonance_squared(&self) -> f64 {
        (self.omega_m - self.omega_c) * (self.omega_m + self.omega_c)
    }
}

/// Polariton branch selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "up")]
    Upper,
    #[serde(rename = "lp")]
    Lower,
}

impl Branch {
    /// +1 for UP, −1 for LP: the sign in front of Δ in ε_±.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }

    pub fn partner(self) -> Branch {
        match self {
            Branch::Upper => Branch::Lower,
            Branch::Lower => Branch::Upper,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Upper => "up",
            Branch::Lower => "lp",
        })
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "up" | "upper" | "+" => Ok(Branch::Upper),
            "lp" | "lower" | "-" => Ok(Branch::Lower),
            other => Err(Error::InvalidParams(format!("unknown branch `{other}` (expected up|lp)"))),
        }
    }
}

/// Complex square root on the `Re ≥ 0` sheet, with `Im ≥ 0` on the cut.
///
/// Conjugation-symmetric by construction, `branch_sqrt(z̄) = conj(branch_sqrt(z))`
/// off the negative real axis, which the UP/LP exchange symmetry relies on.
pub fn branch_sqrt(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    if x == 0.0 && y == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let r = x.hypot(y);
    let s = ((x.abs() + r) * 0.5).sqrt();
    if x >= 0.0 {
        C64::new(s, y / (2.0 * s))
    } else if y == 0.0 {
        C64::new(0.0, s)
    } else {
        C64::new(y.abs() / (2.0 * s), s.copysign(y))
    }
}

/// ω(q) = sqrt(q² + ω_C²).
pub fn photon_dispersion(params: &ModelParams, q: f64) -> f64 {
    q.hypot(params.omega_c)
}

/// dω/dq = q / ω(q).
pub fn photon_slope(params: &ModelParams, q: f64) -> f64 {
    let omega = photon_dispersion(params, q);
    if omega == 0.0 {
        0.0
    } else {
        q / omega
    }
}

/// δ(q) = ω_M − ω(q), evaluated as (k_r² − q²)/(ω_M + ω) so that it vanishes
/// exactly at the value returned by [`resonance_wavevector`].
pub fn detuning(params: &ModelParams, q: f64) -> f64 {
    let omega = photon_dispersion(params, q);
    let denom = params.omega_m + omega;
    if params.omega_m > params.omega_c && denom > 0.0 {
        let kr = params.resonance_squared().sqrt();
        let qa = q.abs();
        (kr - qa) * (kr + qa) / denom
    } else {
        params.omega_m - omega
    }
}

/// Δ as a function of detuning alone. (δ + iγ)² + 4g² is factored as
/// (δ + i(γ − 2g))(δ + i(γ + 2g)) so that it is exactly zero at δ = 0, γ = 2g.
pub fn rabi_from_detuning(detuning: f64, gamma: f64, g: f64) -> C64 {
    let two_g = 2.0 * g;
    let sq = C64::new(detuning, gamma - two_g) * C64::new(detuning, gamma + two_g);
    branch_sqrt(sq)
}

/// Complex vacuum Rabi splitting Δ_q.
pub fn rabi_splitting(params: &ModelParams, q: f64) -> C64 {
    rabi_from_detuning(detuning(params, q), params.gamma, params.g)
}

/// Δ² as analytic real and imaginary parts: (δ² − γ² + 4g², 2δγ).
pub fn rabi_squared_parts(detuning: f64, gamma: f64, g: f64) -> (f64, f64) {
    let two_g = 2.0 * g;
    (detuning * detuning + (two_g - gamma) * (two_g + gamma), 2.0 * detuning * gamma)
}

/// (ε_up, ε_lp) = (ω_M + ω_q − iγ ± Δ_q)/2.
pub fn eigenvalues(params: &ModelParams, q: f64) -> (C64, C64) {
    let centre = C64::new(params.omega_m + photon_dispersion(params, q), -params.gamma);
    let rabi = rabi_splitting(params, q);
    ((centre + rabi) * 0.5, (centre - rabi) * 0.5)
}

/// Eigenvalue of one branch.
pub fn branch_energy(params: &ModelParams, q: f64, branch: Branch) -> C64 {
    let (up, lp) = eigenvalues(params, q);
    match branch {
        Branch::Upper => up,
        Branch::Lower => lp,
    }
}

/// The dense 2×2 block H_q, row-major, basis (molecule, photon).
pub fn hamiltonian(params: &ModelParams, q: f64) -> [[C64; 2]; 2] {
    let g = C64::new(params.g, 0.0);
    [
        [C64::new(params.omega_m, 0.0), g],
        [g, C64::new(photon_dispersion(params, q), -params.gamma)],
    ]
}

/// Hopfield coefficients of both branches.
///
/// `(e, p)` are the molecular and photonic components of the eigenvector,
/// normalised with the complex bilinear form `e² + p² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hopfield {
    pub e_up: C64,
    pub p_up: C64,
    pub e_lp: C64,
    pub p_lp: C64,
}

impl Hopfield {
    pub fn branch(&self, branch: Branch) -> (C64, C64) {
        match branch {
            Branch::Upper => (self.e_up, self.p_up),
            Branch::Lower => (self.e_lp, self.p_lp),
        }
    }
}

fn ensure_away_from_ep(params: &ModelParams, q: f64, rabi: C64) -> Result<()> {
    let rabi_abs = rabi.norm();
    if rabi_abs < EP_TOLERANCE {
        Err(Error::ExceptionalPoint { q, gamma: params.gamma, rabi_abs })
    } else {
        Ok(())
    }
}

/// Molecular/photonic coefficients of one eigenvector given the partner
/// eigenvalue: e = x/s, p = −g/s with x = ε_partner − ω_M and s = sqrt(x² + g²).
///
/// (ε_+ − ω_M)(ε_− − ω_M) = −g², so only p = −g/s gives H v = ε v in the
/// (molecule, photon) basis.
fn coefficients(partner: C64, omega_m: f64, g: f64) -> (C64, C64, C64) {
    let x = partner - omega_m;
    let s = (x * x + g * g).sqrt();
    (x / s, C64::new(-g, 0.0) / s, s)
}

/// Hopfield coefficients. Refuses at the exceptional point.
pub fn hopfield(params: &ModelParams, q: f64) -> Result<Hopfield> {
    let rabi = rabi_splitting(params, q);
    ensure_away_from_ep(params, q, rabi)?;
    let (up, lp) = eigenvalues(params, q);
    let (e_up, p_up, _) = coefficients(lp, params.omega_m, params.g);
    let (e_lp, p_lp, _) = coefficients(up, params.omega_m, params.g);
    Ok(Hopfield { e_up, p_up, e_lp, p_lp })
}

/// (γ_up, γ_lp) = γ ∓ Im Δ_q.
pub fn relaxation_rates(params: &ModelParams, q: f64) -> (f64, f64) {
    relaxation_from_detuning(detuning(params, q), params.gamma, params.g)
}

pub fn relaxation_from_detuning(detuning: f64, gamma: f64, g: f64) -> (f64, f64) {
    let rabi = rabi_from_detuning(detuning, gamma, g);
    (gamma - rabi.im, gamma + rabi.im)
}

/// Complex slopes dε_±/dq = (ω' ± Δ')/2 with Δ' = −(δ + iγ) ω'/Δ.
pub fn energy_slopes(params: &ModelParams, q: f64) -> Result<(C64, C64)> {
    let rabi = rabi_splitting(params, q);
    ensure_away_from_ep(params, q, rabi)?;
    Ok(slopes_from_parts(detuning(params, q), photon_slope(params, q), params.gamma, rabi))
}

fn slopes_from_parts(detuning: f64, slope: f64, gamma: f64, rabi: C64) -> (C64, C64) {
    let d_rabi = -C64::new(detuning, gamma) * slope / rabi;
    ((d_rabi + slope) * 0.5, (-d_rabi + slope) * 0.5)
}

/// Group velocities (v_up, v_lp) = Re dε_±/dq.
pub fn group_velocity(params: &ModelParams, q: f64) -> Result<(f64, f64)> {
    let (up, lp) = energy_slopes(params, q)?;
    Ok((up.re, lp.re))
}

/// Group velocities as a function of detuning and photon slope ω'(q), which
/// makes the δ → −δ branch exchange directly testable.
pub fn group_velocity_from_detuning(
    detuning: f64,
    photon_slope: f64,
    gamma: f64,
    g: f64,
) -> Result<(f64, f64)> {
    let rabi = rabi_from_detuning(detuning, gamma, g);
    if rabi.norm() < EP_TOLERANCE {
        return Err(Error::ExceptionalPoint { q: f64::NAN, gamma, rabi_abs: rabi.norm() });
    }
    let (up, lp) = slopes_from_parts(detuning, photon_slope, gamma, rabi);
    Ok((up.re, lp.re))
}

/// Derivatives of one branch's eigenvalue and molecular Hopfield coefficient
/// with respect to q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSlopes {
    pub energy: C64,
    pub hopfield_e: C64,
}

/// dε/dq and de/dq for `branch`. Uses de/dx = g²/s³ with x = ε_partner − ω_M.
pub fn branch_slopes(params: &ModelParams, q: f64, branch: Branch) -> Result<BranchSlopes> {
    let (d_up, d_lp) = energy_slopes(params, q)?;
    let (up, lp) = eigenvalues(params, q);
    let (partner, d_partner, d_self) = match branch {
        Branch::Upper => (lp, d_lp, d_up),
        Branch::Lower => (up, d_up, d_lp),
    };
    let (_, _, s) = coefficients(partner, params.omega_m, params.g);
    let de_dx = params.g * params.g / (s * s * s);
    Ok(BranchSlopes { energy: d_self, hopfield_e: de_dx * d_partner })
}

/// γ_C = 2g.
pub fn critical_gamma(params: &ModelParams) -> f64 {
    2.0 * params.g
}

/// k_r = sqrt(ω_M² − ω_C²).
pub fn resonance_wavevector(params: &ModelParams) -> Result<f64> {
    if params.omega_m <= params.omega_c {
        return Err(Error::NoResonance { omega_m: params.omega_m, omega_c: params.omega_c });
    }
    Ok(params.resonance_squared().sqrt())
}

/// Full spectral record at one wavevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub q: f64,
    pub omega_k: f64,
    pub delta_k: f64,
    pub rabi: C64,
    pub eps_up: C64,
    pub eps_lp: C64,
    pub hopfield: Hopfield,
    pub gamma_up: f64,
    pub gamma_lp: f64,
    pub vg_up: f64,
    pub vg_lp: f64,
}

pub fn branch_point(params: &ModelParams, q: f64) -> Result<BranchPoint> {
    let hopfield = hopfield(params, q)?;
    let (vg_up, vg_lp) = group_velocity(params, q)?;
    let (eps_up, eps_lp) = eigenvalues(params, q);
    let (gamma_up, gamma_lp) = relaxation_rates(params, q);
    Ok(BranchPoint {
        q,
        omega_k: photon_dispersion(params, q),
        delta_k: detuning(params, q),
        rabi: rabi_splitting(params, q),
        eps_up,
        eps_lp,
        hopfield,
        gamma_up,
        gamma_lp,
        vg_up,
        vg_lp,
    })
}

/// Wavevector of discrete mode `j` on an `n`-mode ring, q_j = 2πj/n.
pub fn mode_wavevector(j: i64, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> ModelParams {
        ModelParams::default()
    }

    /// Eigenvalues by Newton iteration on det(H − λ) = 0, seeded at the two
    /// diagonal entries. Independent of the closed form.
    fn newton_eigenvalues(h: [[C64; 2]; 2]) -> (C64, C64) {
        let char_poly = |l: C64| (h[0][0] - l) * (h[1][1] - l) - h[0][1] * h[1][0];
        let d_char = |l: C64| -(h[0][0] - l) - (h[1][1] - l);
        let solve = |mut l: C64| {
            for _ in 0..200 {
                let step = char_poly(l) / d_char(l);
                l -= step;
                if step.norm() < 1e-16 {
                    break;
                }
            }
            l
        };
        let a = solve(h[0][0] + 0.05);
        let b = solve(h[1][1] - 0.05);
        if a.re >= b.re {
            (a, b)
        } else {
            (b, a)
        }
    }

    #[test]
    fn dispersion_examples() {
        let p = defaults();
        assert_eq!(photon_dispersion(&p, 0.0), 0.4);
        assert!((photon_dispersion(&p, 0.9165) - 1.0).abs() < 1e-4);
        assert_eq!(photon_dispersion(&p, -0.5), photon_dispersion(&p, 0.5));
    }

    #[test]
    fn rabi_examples() {
        let r = rabi_from_detuning(0.0, 0.0, 0.3);
        assert!((r - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert_eq!(rabi_from_detuning(0.0, 0.6, 0.3), C64::new(0.0, 0.0));
        let p = defaults();
        let d = detuning(&p, 0.5);
        assert!((d - 0.3597).abs() < 1e-4);
        // direct (δ + iγ)² + 4g² without factoring
        let direct = branch_sqrt(C64::new(d, 0.1).powi(2) + 4.0 * 0.09);
        let r = rabi_splitting(&p, 0.5);
        assert!((r - direct).norm() < 1e-14);
        assert!((r - C64::new(0.6943, 0.0518)).norm() < 1e-4);
    }

    #[test]
    fn branch_sqrt_conventions() {
        let z = branch_sqrt(C64::new(-4.0, 0.0));
        assert_eq!(z, C64::new(0.0, 2.0));
        let z = branch_sqrt(C64::new(-4.0, -0.0));
        assert_eq!(z, C64::new(0.0, 2.0));
        for &(x, y) in &[(1.0, 2.0), (-3.0, 0.5), (-3.0, -0.5), (0.2, -7.0)] {
            let z = C64::new(x, y);
            let s = branch_sqrt(z);
            assert!(s.re >= 0.0);
            assert!((s * s - z).norm() < 1e-14);
            assert_eq!(branch_sqrt(z.conj()), s.conj());
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let p = ModelParams { gamma: 0.0, ..defaults() };
        let kr = resonance_wavevector(&p).unwrap();
        let (up, lp) = eigenvalues(&p, kr);
        assert!((up - C64::new(1.3, 0.0)).norm() < 1e-14);
        assert!((lp - C64::new(0.7, 0.0)).norm() < 1e-14);

        let p = defaults();
        let (up, lp) = eigenvalues(&p, 0.5);
        let (nu, nl) = newton_eigenvalues(hamiltonian(&p, 0.5));
        assert!((up - nu).norm() < 1e-12);
        assert!((lp - nl).norm() < 1e-12);
        assert!((up - C64::new(1.1673, -0.0241)).norm() < 1e-4);
        assert!((lp - C64::new(0.4730, -0.0759)).norm() < 1e-4);
    }

    fn residual(params: &ModelParams, q: f64) -> f64 {
        let h = hamiltonian(params, q);
        let hop = hopfield(params, q).unwrap();
        let (up, lp) = eigenvalues(params, q);
        [(hop.e_up, hop.p_up, up), (hop.e_lp, hop.p_lp, lp)]
            .iter()
            .map(|&(e, p, eps)| {
                let r0 = h[0][0] * e + h[0][1] * p - eps * e;
                let r1 = h[1][0] * e + h[1][1] * p - eps * p;
                (r0.norm_sqr() + r1.norm_sqr()).sqrt()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn hopfield_examples() {
        let p = ModelParams { gamma: 0.0, ..defaults() };
        let kr = resonance_wavevector(&p).unwrap();
        let h = hopfield(&p, kr).unwrap();
        for (e, pc) in [(h.e_up, h.p_up), (h.e_lp, h.p_lp)] {
            assert!((e.norm_sqr() - 0.5).abs() < 1e-14);
            assert!((pc.norm_sqr() - 0.5).abs() < 1e-14);
        }
        for &q in &[0.1, 0.5, 1.3, 2.5] {
            let h = hopfield(&p, q).unwrap();
            for (e, pc) in [(h.e_up, h.p_up), (h.e_lp, h.p_lp)] {
                assert!(e.im.abs() < 1e-15 && pc.im.abs() < 1e-15);
                assert!((e.norm_sqr() + pc.norm_sqr() - 1.0).abs() < 1e-14);
            }
        }
        let p = defaults();
        assert!(residual(&p, 0.5) < 1e-12);
        let h = hopfield(&p, 0.5).unwrap();
        assert!((h.e_up * h.e_up + h.p_up * h.p_up - 1.0).norm() < 1e-14);
    }

    #[test]
    fn hopfield_refuses_at_ep() {
        let p = defaults().with_gamma(0.6);
        let kr = resonance_wavevector(&p).unwrap();
        assert!(matches!(hopfield(&p, kr), Err(Error::ExceptionalPoint { .. })));
        assert!(matches!(group_velocity(&p, kr), Err(Error::ExceptionalPoint { .. })));
    }

    #[test]
    fn relaxation_examples() {
        let p = defaults().with_gamma(0.0);
        assert_eq!(relaxation_rates(&p, 0.7), (0.0, 0.0));
        let p = defaults().with_gamma(0.6);
        let kr = resonance_wavevector(&p).unwrap();
        assert_eq!(relaxation_rates(&p, kr), (0.6, 0.6));
        let p = defaults();
        let (up, lp) = relaxation_rates(&p, 0.5);
        assert!((up - 0.0482).abs() < 1e-4 && (lp - 0.1518).abs() < 1e-4);
        assert!((up + lp - 0.2).abs() < 1e-15);
    }

    fn fd_velocity(p: &ModelParams, q: f64) -> (f64, f64) {
        let h = 1e-5;
        let (up_p, lp_p) = eigenvalues(p, q + h);
        let (up_m, lp_m) = eigenvalues(p, q - h);
        ((up_p.re - up_m.re) / (2.0 * h), (lp_p.re - lp_m.re) / (2.0 * h))
    }

    #[test]
    fn group_velocity_examples() {
        for &gamma in &[0.0, 0.3, 1.0] {
            let (u, l) = group_velocity(&defaults().with_gamma(gamma), 0.0).unwrap();
            assert_eq!((u, l), (0.0, 0.0));
        }
        let (u, _) = group_velocity(&defaults().with_gamma(1.0), 0.5).unwrap();
        assert!(u < 0.0);
        let p = defaults();
        let (u, l) = group_velocity(&p, 0.5).unwrap();
        let (fu, fl) = fd_velocity(&p, 0.5);
        assert!((u - fu).abs() < 1e-6 && (l - fl).abs() < 1e-6);
    }

    #[test]
    fn hopfield_slope_matches_finite_difference() {
        let p = defaults();
        let h = 1e-6;
        for &q in &[0.2, 0.5, 1.4] {
            for branch in [Branch::Upper, Branch::Lower] {
                let s = branch_slopes(&p, q, branch).unwrap();
                let e = |q| hopfield(&p, q).unwrap().branch(branch).0;
                let fd = (e(q + h) - e(q - h)) / (2.0 * h);
                assert!((s.hopfield_e - fd).norm() < 1e-7, "{q} {branch}");
            }
        }
    }

    #[test]
    fn critical_and_resonance() {
        assert_eq!(critical_gamma(&defaults()), 0.6);
        assert_eq!(critical_gamma(&ModelParams { g: 0.5, ..defaults() }), 1.0);
        let p = defaults().with_gamma(0.6);
        let kr = resonance_wavevector(&p).unwrap();
        assert!((kr - 0.9165).abs() < 0.005);
        assert_eq!((kr * 100.0).round() / 100.0, 0.92);
        assert!(detuning(&p, kr).abs() < 1e-12);
        assert!(rabi_splitting(&p, kr).norm() < 1e-12);
        let p0 = ModelParams { omega_c: 0.0, ..defaults() };
        assert_eq!(resonance_wavevector(&p0).unwrap(), 1.0);
        let bad = ModelParams { omega_m: 0.3, ..defaults() };
        assert!(matches!(resonance_wavevector(&bad), Err(Error::NoResonance { .. })));
    }

    #[test]
    fn validation() {
        assert!(defaults().validate().is_ok());
        assert!(defaults().with_gamma(-0.1).validate().is_err());
        assert!(ModelParams { g: 0.0, ..defaults() }.validate().is_err());
        assert!(ModelParams { g: 0.0, ..defaults() }.validate_spectral().is_ok());
        assert!(ModelParams { g: -0.1, ..defaults() }.validate_spectral().is_err());
        assert!(defaults().with_modes(7).validate().is_err());
        assert!("UP".parse::<Branch>().unwrap() == Branch::Upper);
        assert!("xx".parse::<Branch>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn trace_and_determinant(q in -3.1f64..3.1, gamma in 0.0f64..1.2, g in 0.05f64..0.6) {
                let p = ModelParams { g, gamma, ..ModelParams::default() };
                let h = hamiltonian(&p, q);
                let (up, lp) = eigenvalues(&p, q);
                prop_assert!((up + lp - h[0][0] - h[1][1]).norm() < 1e-12);
                prop_assert!((up * lp - (h[0][0] * h[1][1] - h[0][1] * h[1][0])).norm() < 1e-12);
            }

            #[test]
            fn rates_sum_to_twice_gamma(d in -2.0f64..2.0, gamma in 0.0f64..1.2, g in 0.0f64..0.6) {
                let (up, lp) = relaxation_from_detuning(d, gamma, g);
                prop_assert!((up + lp - 2.0 * gamma).abs() < 1e-12);
                prop_assert!(up >= -1e-12 && lp >= -1e-12);
            }

            #[test]
            fn detuning_mirror_exchanges_branches(d in 1e-6f64..2.0, gamma in 0.0f64..1.2, slope in 0.0f64..1.0) {
                let g = 0.3;
                let (up, lp) = relaxation_from_detuning(d, gamma, g);
                let (up_m, lp_m) = relaxation_from_detuning(-d, gamma, g);
                prop_assert!((up - lp_m).abs() < 1e-12 && (lp - up_m).abs() < 1e-12);
                if let (Ok(v), Ok(vm)) = (
                    group_velocity_from_detuning(d, slope, gamma, g),
                    group_velocity_from_detuning(-d, slope, gamma, g),
                ) {
                    prop_assert!((v.0 - vm.1).abs() < 1e-12 && (v.1 - vm.0).abs() < 1e-12);
                }
            }

            #[test]
            fn hopfield_normalised(q in -3.1f64..3.1, gamma in 0.0f64..1.2) {
                let p = ModelParams::default().with_gamma(gamma);
                prop_assume!(rabi_splitting(&p, q).norm() > 1e-3);
                let h = hopfield(&p, q).unwrap();
                for b in [Branch::Upper, Branch::Lower] {
                    let (e, ph) = h.branch(b);
                    prop_assert!((e * e + ph * ph - 1.0).norm() < 1e-10);
                }
            }
        }
    }
}
