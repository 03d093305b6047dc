//! Branch-projected Gaussian wave packets and their k-space evolution.
//!
//! The molecular amplitude of mode q on branch ± is
//! ψ^M_q(t) = ψ_q(0) e_{q±} exp(−i ε_{q±} t) with the Gaussian envelope
//! ψ_q(0) = sqrt(w/√π) exp(−w²(q − p)²/2), normalised so that ∫|ψ_q(0)|² dq = 1.
//!
//! On the N-mode ring the continuum measure dq becomes 2π/N; [`PacketModes`]
//! folds sqrt(2π/N) into the stored amplitudes once, so that plain sums over
//! modes (and, by Parseval, over sites) are quadratures of the continuum
//! integrals.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochTransform;
use crate::error::{Error, Result};
use crate::spectrum::{self, Branch, ModelParams};

/// Minimum of w·(π − |p|). exp(−4.73²) < 2e−10 bounds the Gaussian mass
/// outside [−π, π] below 1e−10.
const MIN_TAIL_DISTANCE: f64 = 4.73;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavePacketSpec {
    /// Centre wavevector.
    pub p: f64,
    /// Inverse k-space width; larger is narrower in k.
    pub w: f64,
    pub branch: Branch,
}

impl Default for WavePacketSpec {
    fn default() -> Self {
        Self { p: 0.5, w: 10.0, branch: Branch::Upper }
    }
}

impl WavePacketSpec {
    pub fn new(p: f64, w: f64, branch: Branch) -> Self {
        Self { p, w, branch }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::InvalidParams(format!("w must be > 0, got {}", self.w)));
        }
        if !(self.p.abs() < PI) {
            return Err(Error::InvalidParams(format!("p must lie in (-pi, pi), got {}", self.p)));
        }
        if self.w * (PI - self.p.abs()) < MIN_TAIL_DISTANCE {
            return Err(Error::InvalidParams(format!(
                "packet (p = {}, w = {}) leaks more than 1e-10 of its weight outside [-pi, pi]",
                self.p, self.w
            )));
        }
        Ok(())
    }
}

/// ψ_q(0) = sqrt(w/√π) exp(−w²(q − p)²/2).
pub fn initial_amplitude(spec: &WavePacketSpec, q: f64) -> f64 {
    let x = spec.w * (q - spec.p);
    (spec.w / PI.sqrt()).sqrt() * (-0.5 * x * x).exp()
}

/// Molecular and photonic amplitude of one mode at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KState {
    pub q: f64,
    pub amp_mol: C64,
    pub amp_phot: C64,
    pub t: f64,
}

/// Evolves mode `q` of the branch-projected packet to time `t`.
pub fn evolve_k(spec: &WavePacketSpec, params: &ModelParams, q: f64, t: f64) -> Result<KState> {
    let (e, p) = spectrum::hopfield(params, q)?.branch(spec.branch);
    let eps = spectrum::branch_energy(params, q, spec.branch);
    let phase = (-C64::i() * eps * t).exp() * initial_amplitude(spec, q);
    Ok(KState { q, amp_mol: e * phase, amp_phot: p * phase, t })
}

/// q ↦ P^M_q(t) = P_q(0) |e_q|² exp(−γ_q t).
pub fn k_population<'a>(
    spec: &'a WavePacketSpec,
    params: &'a ModelParams,
    t: f64,
) -> impl Fn(f64) -> Result<f64> + 'a {
    move |q| {
        let (e, _) = spectrum::hopfield(params, q)?.branch(spec.branch);
        let (up, lp) = spectrum::relaxation_rates(params, q);
        let rate = match spec.branch {
            Branch::Upper => up,
            Branch::Lower => lp,
        };
        let a0 = initial_amplitude(spec, q);
        Ok(a0 * a0 * e.norm_sqr() * (-rate * t).exp())
    }
}

/// Per-mode spectral table of one packet on the N-mode ring, stored in the
/// centred order of [`BlochTransform`].
#[derive(Debug, Clone)]
pub struct PacketModes {
    pub spec: WavePacketSpec,
    pub params: ModelParams,
    transform: BlochTransform,
    pub q: Vec<f64>,
    /// sqrt(2π/N) ψ_q(0) e_q
    pub mol0: Vec<C64>,
    /// sqrt(2π/N) ψ_q(0) p_q
    pub phot0: Vec<C64>,
    pub energy: Vec<C64>,
    /// |mol0|²
    pub weight0: Vec<f64>,
    /// γ_q = −2 Im ε_q
    pub rate: Vec<f64>,
    pub group_velocity: Vec<f64>,
    /// dε/dq
    pub energy_slope: Vec<C64>,
    /// de/dq
    pub hopfield_slope: Vec<C64>,
    /// dψ_q(0)/dq · sqrt(2π/N)
    envelope_slope: Vec<f64>,
    envelope: Vec<f64>,
    hopfield_e: Vec<C64>,
}

impl PacketModes {
    pub fn new(spec: &WavePacketSpec, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        let n = params.n_modes;
        let transform = BlochTransform::new(n);
        let measure = (2.0 * PI / n as f64).sqrt();
        let q = transform.wavevectors();
        let mut table = Self {
            spec: *spec,
            params: *params,
            transform,
            mol0: Vec::with_capacity(n),
            phot0: Vec::with_capacity(n),
            energy: Vec::with_capacity(n),
            weight0: Vec::with_capacity(n),
            rate: Vec::with_capacity(n),
            group_velocity: Vec::with_capacity(n),
            energy_slope: Vec::with_capacity(n),
            hopfield_slope: Vec::with_capacity(n),
            envelope_slope: Vec::with_capacity(n),
            envelope: Vec::with_capacity(n),
            hopfield_e: Vec::with_capacity(n),
            q,
        };
        for &q in &table.q {
            let (e, p) = spectrum::hopfield(params, q)?.branch(spec.branch);
            let eps = spectrum::branch_energy(params, q, spec.branch);
            let slopes = spectrum::branch_slopes(params, q, spec.branch)?;
            let a0 = initial_amplitude(spec, q) * measure;
            table.mol0.push(e * a0);
            table.phot0.push(p * a0);
            table.weight0.push((e * a0).norm_sqr());
            table.energy.push(eps);
            table.rate.push(-2.0 * eps.im);
            table.group_velocity.push(slopes.energy.re);
            table.energy_slope.push(slopes.energy);
            table.hopfield_slope.push(slopes.hopfield_e);
            table.envelope.push(a0);
            table.envelope_slope.push(-spec.w * spec.w * (q - spec.p) * a0);
            table.hopfield_e.push(e);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn transform(&self) -> &BlochTransform {
        &self.transform
    }

    /// Molecular k-space amplitudes at time t.
    pub fn mol_amplitudes(&self, t: f64) -> Vec<C64> {
        self.mol0
            .iter()
            .zip(&self.energy)
            .map(|(a, eps)| a * (-C64::i() * eps * t).exp())
            .collect()
    }

    /// Photonic k-space amplitudes at time t.
    pub fn phot_amplitudes(&self, t: f64) -> Vec<C64> {
        self.phot0
            .iter()
            .zip(&self.energy)
            .map(|(a, eps)| a * (-C64::i() * eps * t).exp())
            .collect()
    }

    /// q-derivative of the molecular amplitude,
    /// [ψ' e + ψ e' − i t ε' ψ e] exp(−iεt), on the same measure as
    /// [`Self::mol_amplitudes`].
    pub fn mol_amplitude_slopes(&self, t: f64) -> Vec<C64> {
        (0..self.len())
            .map(|j| {
                let e = self.hopfield_e[j];
                let d = self.envelope_slope[j] * e + self.envelope[j] * self.hopfield_slope[j]
                    - C64::i() * t * self.energy_slope[j] * self.envelope[j] * e;
                d * (-C64::i() * self.energy[j] * t).exp()
            })
            .collect()
    }

    /// Molecular site amplitudes at time t.
    pub fn site_amplitudes(&self, t: f64) -> Vec<C64> {
        let mut buf = self.mol_amplitudes(t);
        self.transform.to_sites(&mut buf);
        buf
    }

    /// P_n(t) on storage positions; site n = i − N/2.
    pub fn distribution(&self, t: f64) -> Vec<f64> {
        self.site_amplitudes(t).iter().map(|a| a.norm_sqr()).collect()
    }

    /// Σ_q |ψ^M_q(t)|², the quadrature of the population integral.
    pub fn k_space_population(&self, t: f64) -> f64 {
        self.weight0.iter().zip(&self.rate).map(|(w, r)| w * (-r * t).exp()).sum()
    }
}

/// Site populations P_n(t), n = −N/2..N/2−1, of the packet on an `n_modes` ring.
pub fn real_space_distribution(
    spec: &WavePacketSpec,
    params: &ModelParams,
    t: f64,
    n_modes: usize,
) -> Result<Vec<f64>> {
    Ok(PacketModes::new(spec, &params.with_modes(n_modes))?.distribution(t))
}
