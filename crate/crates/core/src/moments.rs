//! Population, centre of mass and mean squared displacement of the molecular
//! part of a branch-projected packet.
//!
//! Site moments use the unwrapped index n = i − N/2 of [`BlochTransform`].
//! Every evaluation checks the edge bands and fails with
//! [`Error::WrapAround`] once the ring is too small for the time reached.
//!
//! [`BlochTransform`]: crate::bloch::BlochTransform

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refprop::WRAP_TOLERANCE;
use crate::spectrum::{Branch, ModelParams};
use crate::wavepacket::{PacketModes, WavePacketSpec};

/// Unnormalised site sums Σ P_n, Σ n P_n, Σ n² P_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteMoments {
    pub population: f64,
    pub first: f64,
    pub second: f64,
}

impl SiteMoments {
    /// n̄ = ⟨n⟩ / P
    pub fn mean(&self) -> f64 {
        self.first / self.population
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second / self.population - m * m
    }
}

/// Decay-weighted packet averages at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityTerms {
    /// ⟨v_g⟩_t
    pub avg_vg: f64,
    /// ⟨γ v_g⟩_t
    pub avg_gamma_vg: f64,
    /// ⟨γ⟩_t ⟨v_g⟩_t
    pub avg_gamma_avg_vg: f64,
}

impl VelocityTerms {
    /// t (⟨γ v_g⟩_t − ⟨γ⟩_t ⟨v_g⟩_t)
    pub fn correction(&self, t: f64) -> f64 {
        t * (self.avg_gamma_vg - self.avg_gamma_avg_vg)
    }

    /// d/dt of the leading-term centre of mass.
    pub fn cm_rate(&self, t: f64) -> f64 {
        self.avg_vg - self.correction(t)
    }
}

/// Uniform grid 0, dt, 2dt, … up to t_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_max: 100.0, dt: 0.05 }
    }
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Self {
        Self { t_max, dt }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParams(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_max / self.dt + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * self.dt).collect()
    }
}

/// Observables of one packet on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub branch: Branch,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    /// n̄(t) = ⟨n⟩ / P from the site distribution.
    pub cm: Vec<f64>,
    /// Leading-term centre of mass t ⟨v_g⟩_t.
    pub cm_approx: Vec<f64>,
    pub msd: Vec<f64>,
    pub velocity_terms: Vec<VelocityTerms>,
    /// Effective initial width; W²/2 is the initial site variance.
    pub width: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Moment engine for one packet; holds the per-mode spectral tables.
#[derive(Debug, Clone)]
pub struct Dynamics {
    modes: PacketModes,
    initial_variance: f64,
}

impl Dynamics {
    pub fn new(spec: &WavePacketSpec, params: &ModelParams) -> Result<Self> {
        let modes = PacketModes::new(spec, params)?;
        let mut dynamics = Self { modes, initial_variance: 0.0 };
        dynamics.initial_variance = dynamics.site_moments(0.0)?.variance();
        Ok(dynamics)
    }

    pub fn modes(&self) -> &PacketModes {
        &self.modes
    }

    /// W = sqrt(2 Var_n(0)), so that the MSD vanishes at t = 0.
    pub fn width(&self) -> f64 {
        (2.0 * self.initial_variance).sqrt()
    }

    /// P^M(t) by k-space quadrature.
    pub fn population(&self, t: f64) -> f64 {
        self.modes.k_space_population(t)
    }

    /// Site sums of the real-space distribution.
    pub fn site_moments(&self, t: f64) -> Result<SiteMoments> {
        let probs = self.modes.distribution(t);
        let transform = self.modes.transform();
        let edge = transform.edge_fraction(&probs);
        if edge > WRAP_TOLERANCE {
            return Err(Error::WrapAround { t, edge });
        }
        let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
        for (i, p) in probs.iter().enumerate() {
            let n = transform.site(i) as f64;
            p0 += p;
            p1 += n * p;
            p2 += n * n * p;
        }
        Ok(SiteMoments { population: p0, first: p1, second: p2 })
    }

    /// The same sums from the q-derivative of the mode amplitudes:
    /// ⟨n⟩ = −Im Σ c* ∂c, ⟨n²⟩ = Σ |∂c|². Valid while the amplitudes are
    /// smooth in q, i.e. away from the branch cut that opens above the
    /// critical loss.
    pub fn kspace_moments(&self, t: f64) -> SiteMoments {
        let c = self.modes.mol_amplitudes(t);
        let dc = self.modes.mol_amplitude_slopes(t);
        let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
        for (a, d) in c.iter().zip(&dc) {
            p0 += a.norm_sqr();
            p1 -= (a.conj() * d).im;
            p2 += d.norm_sqr();
        }
        SiteMoments { population: p0, first: p1, second: p2 }
    }

    /// Decay-weighted averages with weights P_q(0)|e_q|² e^{−γ_q t}.
    pub fn velocity_terms(&self, t: f64) -> VelocityTerms {
        let m = &self.modes;
        let (mut w0, mut wv, mut wg, mut wgv) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..m.len() {
            let w = m.weight0[j] * (-m.rate[j] * t).exp();
            let v = m.group_velocity[j];
            let g = m.rate[j];
            w0 += w;
            wv += w * v;
            wg += w * g;
            wgv += w * g * v;
        }
        let avg_vg = wv / w0;
        VelocityTerms { avg_vg, avg_gamma_vg: wgv / w0, avg_gamma_avg_vg: wg / w0 * avg_vg }
    }

    /// Leading-term centre of mass t ⟨v_g⟩_t.
    pub fn cm_leading(&self, t: f64) -> f64 {
        t * self.velocity_terms(t).avg_vg
    }

    pub fn msd_from(&self, m: &SiteMoments) -> f64 {
        m.variance() - self.initial_variance
    }

    pub fn msd(&self, t: f64) -> Result<f64> {
        Ok(self.msd_from(&self.site_moments(t)?))
    }

    /// Evaluates every observable on `grid`, in parallel over time.
    pub fn trajectory(&self, grid: &TimeGrid) -> Result<Trajectory> {
        grid.validate()?;
        let times = grid.times();
        let rows = times
            .par_iter()
            .map(|&t| {
                let m = self.site_moments(t)?;
                let vt = self.velocity_terms(t);
                Ok((self.population(t), m.mean(), t * vt.avg_vg, self.msd_from(&m), vt))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut traj = Trajectory {
            branch: self.modes.spec.branch,
            gamma: self.modes.params.gamma,
            times,
            population: Vec::with_capacity(rows.len()),
            cm: Vec::with_capacity(rows.len()),
            cm_approx: Vec::with_capacity(rows.len()),
            msd: Vec::with_capacity(rows.len()),
            velocity_terms: Vec::with_capacity(rows.len()),
            width: self.width(),
        };
        for (p, cm, approx, msd, vt) in rows {
            traj.population.push(p);
            traj.cm.push(cm);
            traj.cm_approx.push(approx);
            traj.msd.push(msd);
            traj.velocity_terms.push(vt);
        }
        Ok(traj)
    }

    /// First time the population falls to half its initial value, searched
    /// on [0, t_max]. Assumes monotone decay.
    pub fn half_life(&self, t_max: f64) -> Option<f64> {
        let target = 0.5 * self.population(0.0);
        let f = |t: f64| self.population(t) - target;
        let scan = 400;
        let mut lo = 0.0;
        let mut hi = None;
        for i in 1..=scan {
            let t = t_max * i as f64 / scan as f64;
            if f(t) <= 0.0 {
                hi = Some(t);
                break;
            }
            lo = t;
        }
        let mut hi = hi?;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Centre-of-mass estimates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmEstimate {
    /// t ⟨v_g⟩_t
    pub leading: f64,
    /// ⟨n⟩ / P from the site distribution.
    pub exact: f64,
}

pub fn population(spec: &WavePacketSpec, params: &ModelParams, t: f64) -> Result<f64> {
    Ok(Dynamics::new(spec, params)?.population(t))
}

/// ⟨n(t)⟩ = Σ n P_n(t).
pub fn first_moment(spec: &WavePacketSpec, params: &ModelParams, t: f64) -> Result<f64> {
    Ok(Dynamics::new(spec, params)?.site_moments(t)?.first)
}

pub fn cm_normalized(spec: &WavePacketSpec, params: &ModelParams, t: f64) -> Result<CmEstimate> {
    let d = Dynamics::new(spec, params)?;
    Ok(CmEstimate { leading: d.cm_leading(t), exact: d.site_moments(t)?.mean() })
}

/// (⟨v_g⟩_t, t(⟨γ v_g⟩_t − ⟨γ⟩_t⟨v_g⟩_t)).
pub fn cm_velocity_decomposition(
    spec: &WavePacketSpec,
    params: &ModelParams,
    t: f64,
) -> Result<(f64, f64)> {
    let vt = Dynamics::new(spec, params)?.velocity_terms(t);
    Ok((vt.avg_vg, vt.correction(t)))
}

pub fn msd(spec: &WavePacketSpec, params: &ModelParams, t: f64) -> Result<f64> {
    Dynamics::new(spec, params)?.msd(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum;
    use proptest::prelude::*;

    fn up(gamma: f64) -> (WavePacketSpec, ModelParams) {
        (WavePacketSpec::default(), ModelParams::default().with_gamma(gamma))
    }

    fn lp(gamma: f64) -> (WavePacketSpec, ModelParams) {
        (WavePacketSpec::new(0.03, 10.0, Branch::Lower), ModelParams::default().with_gamma(gamma))
    }

    #[test]
    fn grid_times() {
        let g = TimeGrid::new(1.0, 0.25);
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(TimeGrid::default().times().len(), 2001);
        assert!(TimeGrid::new(1.0, 0.0).validate().is_err());
    }

    #[test]
    fn lossless_population_is_conserved() {
        let (s, p) = up(0.0);
        let d = Dynamics::new(&s, &p).unwrap();
        let p0 = d.population(0.0);
        for &t in &[1.0, 10.0, 100.0] {
            assert!((d.population(t) - p0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_packet_holds_half_on_each_branch() {
        let p = ModelParams::default().with_gamma(0.0);
        let kr = spectrum::resonance_wavevector(&p).unwrap();
        for b in [Branch::Upper, Branch::Lower] {
            let s = WavePacketSpec::new(kr, 60.0, b);
            let v = population(&s, &p, 0.0).unwrap();
            assert!((v - 0.5).abs() < 1e-3, "{b}: {v}");
        }
    }

    #[test]
    fn population_matches_site_sum() {
        for (s, p) in [up(0.1), up(0.67), up(1.0), lp(0.05)] {
            let d = Dynamics::new(&s, &p).unwrap();
            for &t in &[0.0, 5.0, 40.0] {
                let a = d.population(t);
                let b = d.site_moments(t).unwrap().population;
                assert!((a - b).abs() < 1e-8 * a.max(1e-300).max(1e-8));
            }
        }
    }

    #[test]
    fn lossless_cm_moves_at_group_velocity() {
        let (s, p) = up(0.0);
        let d = Dynamics::new(&s, &p).unwrap();
        let (vg, _) = spectrum::group_velocity(&p, s.p).unwrap();
        assert!(d.site_moments(0.0).unwrap().first.abs() < 1e-8);
        for &t in &[1.0, 3.0, 5.0] {
            let exact = d.site_moments(t).unwrap().mean();
            let leading = d.cm_leading(t);
            assert!((exact / (vg * t) - 1.0).abs() < 0.02, "exact {exact} vs {}", vg * t);
            assert!((leading / (vg * t) - 1.0).abs() < 0.02);
        }
        let vt = d.velocity_terms(7.0);
        assert!(vt.correction(7.0).abs() < 1e-15);
    }

    #[test]
    fn strong_loss_reverses_upper_branch() {
        let (s, p) = up(1.0);
        let d = Dynamics::new(&s, &p).unwrap();
        let h = 1e-3;
        let rate = (d.site_moments(5.0 + h).unwrap().mean() - d.site_moments(5.0 - h).unwrap().mean()) / (2.0 * h);
        assert!(rate < 0.0, "rate {rate}");
    }

    #[test]
    fn decomposition_matches_derivative_of_leading_term() {
        for (s, p, t) in [(lp(0.05).0, lp(0.05).1, 20.0), (up(0.4).0, up(0.4).1, 6.0)] {
            let d = Dynamics::new(&s, &p).unwrap();
            let h = 1e-3;
            let fd = (d.cm_leading(t + h) - d.cm_leading(t - h)) / (2.0 * h);
            let vt = d.velocity_terms(t);
            assert!((vt.cm_rate(t) - fd).abs() < 1e-4 * fd.abs().max(1e-6), "{} vs {fd}", vt.cm_rate(t));
        }
        let d = Dynamics::new(&up(0.3).0, &up(0.3).1).unwrap();
        assert_eq!(d.velocity_terms(0.0).cm_rate(0.0), d.velocity_terms(0.0).avg_vg);
    }

    #[test]
    fn leading_term_tracks_exact_cm_at_weak_loss() {
        let (s, p) = up(0.1);
        let d = Dynamics::new(&s, &p).unwrap();
        let mut worst: f64 = 0.0;
        for i in 1..=20 {
            let t = i as f64;
            let exact = d.site_moments(t).unwrap().mean() - d.site_moments(0.0).unwrap().mean();
            worst = worst.max((d.cm_leading(t) - exact).abs() / exact.abs());
        }
        assert!(worst < 0.05, "worst relative deviation {worst}");
    }

    #[test]
    fn kspace_moments_agree_with_sites() {
        for (s, p) in [up(0.0), up(0.1), up(0.4), lp(0.05)] {
            let d = Dynamics::new(&s, &p).unwrap();
            for &t in &[0.0, 3.0, 25.0] {
                let a = d.site_moments(t).unwrap();
                let b = d.kspace_moments(t);
                assert!((a.mean() - b.mean()).abs() < 1e-8 * a.mean().abs().max(1.0));
                assert!((a.variance() - b.variance()).abs() < 1e-8 * a.variance().abs().max(1.0));
            }
        }
    }

    #[test]
    fn msd_starts_at_zero() {
        for (s, p) in [up(0.1), up(0.67), lp(0.05)] {
            assert!(msd(&s, &p, 0.0).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn lossless_msd_is_ballistic() {
        let (s, p) = up(0.0);
        let d = Dynamics::new(&s, &p).unwrap();
        let r = d.msd(4.0).unwrap() / d.msd(2.0).unwrap();
        assert!((r - 4.0).abs() < 0.05, "ratio {r}");
    }

    #[test]
    fn wrap_around_is_reported() {
        let s = WavePacketSpec::new(1.2, 5.0, Branch::Upper);
        let p = ModelParams::default().with_gamma(0.0).with_modes(128);
        let d = Dynamics::new(&s, &p).unwrap();
        assert!(matches!(d.site_moments(500.0), Err(Error::WrapAround { .. })));
    }

    #[test]
    fn trajectory_is_consistent() {
        let (s, p) = up(0.3);
        let d = Dynamics::new(&s, &p).unwrap();
        let tr = d.trajectory(&TimeGrid::new(5.0, 0.5)).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert!(tr.msd[0].abs() < 1e-8);
        for (i, &t) in tr.times.iter().enumerate() {
            assert_eq!(tr.population[i], d.population(t));
            assert_eq!(tr.cm_approx[i], d.cm_leading(t));
        }
    }

    #[test]
    fn half_life_of_exponential_rate() {
        let (s, p) = up(0.1);
        let d = Dynamics::new(&s, &p).unwrap();
        let h = d.half_life(200.0).unwrap();
        assert!((d.population(h) / d.population(0.0) - 0.5).abs() < 1e-10);
        assert!(Dynamics::new(&s, &p.with_gamma(0.0)).unwrap().half_life(50.0).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn population_decays(gamma in 0.0f64..1.2, t in 0.0f64..50.0, dt in 0.01f64..5.0, lower in any::<bool>()) {
            let (s, p) = if lower { lp(gamma) } else { up(gamma) };
            let d = Dynamics::new(&s, &p.with_modes(512)).unwrap();
            let a = d.population(t);
            let b = d.population(t + dt);
            prop_assert!(b > 0.0);
            prop_assert!(b <= a * (1.0 + 1e-12));
        }
    }
}
