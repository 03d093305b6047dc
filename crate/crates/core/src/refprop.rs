//! Reference propagators that never touch the eigendecomposition.
//!
//! * [`propagate_2x2`]: closed-form exp(−iHt) for one 2×2 block. It is an
//!   entire function of H, so it stays finite at the exceptional point.
//! * [`rk4_2x2_converged`]: step-halving RK4 on the same block.
//! * [`LatticePropagator`]: RK4 on the full 2N-dimensional system, molecules
//!   in the site basis and photons in the mode basis.

use num_complex::Complex64 as C64;

use crate::bloch::BlochTransform;
use crate::error::{Error, Result};
use crate::spectrum::{hamiltonian, photon_dispersion, ModelParams};
use crate::wavepacket::PacketModes;

pub type Matrix2 = [[C64; 2]; 2];
pub type Vector2 = [C64; 2];

/// Largest lattice the brute-force oracle accepts.
pub const MAX_ORACLE_SITES: usize = 4096;

/// Default step of the lattice integrator.
pub const ORACLE_DT: f64 = 0.01;

/// Relative edge population above which a finite ring no longer represents
/// the infinite chain.
pub const WRAP_TOLERANCE: f64 = 1e-8;

fn apply(h: &Matrix2, v: &Vector2) -> Vector2 {
    [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]]
}

/// (cos z, sin z / z) evaluated from z².
fn cos_sinc(z2: C64) -> (C64, C64) {
    if z2.norm() < 1e-6 {
        let cos = 1.0 - z2 / 2.0 + z2 * z2 / 24.0;
        let sinc = 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
        (cos, sinc)
    } else {
        let z = z2.sqrt();
        (z.cos(), z.sin() / z)
    }
}

/// exp(−iHt) v for a 2×2 block, via (H − μ)² = (Δ/2)² I with μ = tr H / 2.
pub fn expm_apply(h: &Matrix2, v: Vector2, t: f64) -> Vector2 {
    let mu = (h[0][0] + h[1][1]) / 2.0;
    let a = h[0][0] - mu;
    let half_sq = a * a + h[0][1] * h[1][0];
    let (cos, sinc) = cos_sinc(half_sq * t * t);
    let shifted = [[a, h[0][1]], [h[1][0], -a]];
    let hv = apply(&shifted, &v);
    let phase = (-C64::i() * mu * t).exp();
    [
        phase * (cos * v[0] - C64::i() * t * sinc * hv[0]),
        phase * (cos * v[1] - C64::i() * t * sinc * hv[1]),
    ]
}

/// exp(−iH_q t) v for mode `q`, v = (molecule, photon).
pub fn propagate_2x2(params: &ModelParams, q: f64, v: Vector2, t: f64) -> Vector2 {
    expm_apply(&hamiltonian(params, q), v, t)
}

/// Fixed-step RK4 for i dv/dt = H v.
pub fn rk4_2x2(h: &Matrix2, v: Vector2, t: f64, dt: f64) -> Vector2 {
    let steps = (t / dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let f = |v: &Vector2| {
        let hv = apply(h, v);
        [-C64::i() * hv[0], -C64::i() * hv[1]]
    };
    let axpy = |v: &Vector2, k: &Vector2, s: f64| [v[0] + k[0] * s, v[1] + k[1] * s];
    let mut v = v;
    for _ in 0..steps {
        let k1 = f(&v);
        let k2 = f(&axpy(&v, &k1, dt / 2.0));
        let k3 = f(&axpy(&v, &k2, dt / 2.0));
        let k4 = f(&axpy(&v, &k3, dt));
        for c in 0..2 {
            v[c] += (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) * (dt / 6.0);
        }
    }
    v
}

/// RK4 from dt = 1e−3, halving until two successive results agree to `tol`.
pub fn rk4_2x2_converged(h: &Matrix2, v: Vector2, t: f64, tol: f64) -> Result<Vector2> {
    let mut dt = 1e-3;
    let mut prev = rk4_2x2(h, v, t, dt);
    for _ in 0..10 {
        dt /= 2.0;
        let next = rk4_2x2(h, v, t, dt);
        let diff = (next[0] - prev[0]).norm().max((next[1] - prev[1]).norm());
        if diff < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!("RK4 step halving did not reach {tol:e} at t = {t}")))
}

/// Molecular amplitudes on sites (storage order of [`BlochTransform`]) and
/// photon amplitudes on modes.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub mol_sites: Vec<C64>,
    pub phot_modes: Vec<C64>,
    pub t: f64,
}

impl LatticeState {
    /// Initial state of a wave packet, taken from its t = 0 mode amplitudes.
    pub fn from_packet(modes: &PacketModes) -> Self {
        let mut mol = modes.mol0.clone();
        modes.transform().to_sites(&mut mol);
        Self { mol_sites: mol, phot_modes: modes.phot0.clone(), t: 0.0 }
    }

    /// A single Bloch component: amplitude `v` = (molecule, photon) on mode
    /// storage position `l` of an `n`-site ring.
    pub fn bloch_mode(n: usize, l: usize, v: Vector2) -> Self {
        let mut mol = vec![C64::new(0.0, 0.0); n];
        let mut phot = mol.clone();
        mol[l] = v[0];
        phot[l] = v[1];
        BlochTransform::new(n).to_sites(&mut mol);
        Self { mol_sites: mol, phot_modes: phot, t: 0.0 }
    }

    /// Molecular amplitudes in the mode basis.
    pub fn mol_modes(&self) -> Vec<C64> {
        let mut buf = self.mol_sites.clone();
        BlochTransform::new(self.mol_sites.len()).to_modes(&mut buf);
        buf
    }

    /// Σ |ψ|² over both subsystems.
    pub fn norm_sqr(&self) -> f64 {
        self.mol_sites.iter().chain(&self.phot_modes).map(|a| a.norm_sqr()).sum()
    }

    /// Molecular populations per site.
    pub fn site_populations(&self) -> Vec<f64> {
        self.mol_sites.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// RK4 integrator of the full lattice.
#[derive(Debug, Clone)]
pub struct LatticePropagator {
    params: ModelParams,
    transform: BlochTransform,
    /// ω_q − iγ − ω_M
    photon_shift: Vec<C64>,
    pub dt: f64,
}

impl LatticePropagator {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
        }
        let transform = BlochTransform::new(params.n_modes);
        let photon_shift = transform
            .wavevectors()
            .iter()
            .map(|&q| C64::new(photon_dispersion(params, q) - params.omega_m, -params.gamma))
            .collect();
        Ok(Self { params: *params, transform, photon_shift, dt })
    }

    /// Time derivative in the frame rotating at ω_M.
    fn derivative(&self, s: &LatticeState) -> LatticeState {
        let g = self.params.g;
        let mut phot_sites = s.phot_modes.clone();
        self.transform.to_sites(&mut phot_sites);
        let mut mol_modes = s.mol_sites.clone();
        self.transform.to_modes(&mut mol_modes);
        let mi = -C64::i();
        LatticeState {
            t: s.t,
            mol_sites: phot_sites.iter().map(|a| mi * g * a).collect(),
            phot_modes: s
                .phot_modes
                .iter()
                .zip(&mol_modes)
                .zip(&self.photon_shift)
                .map(|((a, c), w)| mi * (w * a + g * c))
                .collect(),
        }
    }

    fn combine(base: &LatticeState, k: &LatticeState, s: f64) -> LatticeState {
        let add = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(a, b)| a + b * s).collect();
        LatticeState {
            t: base.t,
            mol_sites: add(&base.mol_sites, &k.mol_sites),
            phot_modes: add(&base.phot_modes, &k.phot_modes),
        }
    }

    fn step(&self, s: &LatticeState, dt: f64) -> LatticeState {
        let k1 = self.derivative(s);
        let k2 = self.derivative(&Self::combine(s, &k1, dt / 2.0));
        let k3 = self.derivative(&Self::combine(s, &k2, dt / 2.0));
        let k4 = self.derivative(&Self::combine(s, &k3, dt));
        let mut out = s.clone();
        for (vec, parts) in [
            (&mut out.mol_sites, [&k1.mol_sites, &k2.mol_sites, &k3.mol_sites, &k4.mol_sites]),
            (&mut out.phot_modes, [&k1.phot_modes, &k2.phot_modes, &k3.phot_modes, &k4.phot_modes]),
        ] {
            for (i, x) in vec.iter_mut().enumerate() {
                *x += (parts[0][i] + 2.0 * parts[1][i] + 2.0 * parts[2][i] + parts[3][i]) * (dt / 6.0);
            }
        }
        out
    }

    /// Advances `state` by `t`, with the step shrunk so it divides `t`.
    pub fn advance(&self, state: &LatticeState, t: f64) -> LatticeState {
        if t <= 0.0 {
            return state.clone();
        }
        let steps = (t / self.dt).ceil() as usize;
        let dt = t / steps as f64;
        let mut s = state.clone();
        for _ in 0..steps {
            s = self.step(&s, dt);
        }
        let phase = (-C64::i() * self.params.omega_m * t).exp();
        for x in s.mol_sites.iter_mut().chain(s.phot_modes.iter_mut()) {
            *x *= phase;
        }
        s.t = state.t + t;
        s
    }
}

fn check_oracle_size(params: &ModelParams) -> Result<()> {
    if params.n_modes > MAX_ORACLE_SITES {
        return Err(Error::InvalidParams(format!(
            "lattice oracle is limited to {MAX_ORACLE_SITES} sites, got {}",
            params.n_modes
        )));
    }
    Ok(())
}

/// Propagates `initial` by `t` with the default RK4 step.
pub fn propagate_lattice(params: &ModelParams, initial: &LatticeState, t: f64) -> Result<LatticeState> {
    check_oracle_size(params)?;
    if initial.mol_sites.len() != params.n_modes || initial.phot_modes.len() != params.n_modes {
        return Err(Error::InvalidParams(format!(
            "state has {} sites, parameters have {}",
            initial.mol_sites.len(),
            params.n_modes
        )));
    }
    Ok(LatticePropagator::new(params, ORACLE_DT)?.advance(initial, t))
}

/// Molecular population and normalised site moments of a lattice state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMoments {
    pub population: f64,
    pub n_mean: f64,
    pub n2_mean: f64,
}

impl OracleMoments {
    pub fn variance(&self) -> f64 {
        self.n2_mean - self.n_mean * self.n_mean
    }
}

/// Direct site sums over the unwrapped index n = i − N/2.
///
/// Fails with [`Error::WrapAround`] when the edge bands hold more than
/// [`WRAP_TOLERANCE`] of the population.
pub fn oracle_moments(state: &LatticeState) -> Result<OracleMoments> {
    let n = state.mol_sites.len();
    let transform = BlochTransform::new(n);
    let probs = state.site_populations();
    let edge = transform.edge_fraction(&probs);
    if edge > WRAP_TOLERANCE {
        return Err(Error::WrapAround { t: state.t, edge });
    }
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (i, p) in probs.iter().enumerate() {
        let x = transform.site(i) as f64;
        p0 += p;
        p1 += x * p;
        p2 += x * x * p;
    }
    if p0 <= 0.0 {
        return Err(Error::DegenerateData("lattice state has no molecular population".into()));
    }
    Ok(OracleMoments { population: p0, n_mean: p1 / p0, n2_mean: p2 / p0 })
}
