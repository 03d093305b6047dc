//! Discrete Bloch transform between the N-site lattice and its N modes.
//!
//! Sites use the unwrapped index n = i − N/2 and modes j = l − N/2 for storage
//! positions i, l ∈ 0..N, with
//!
//! ```text
//! ψ_n = N^{-1/2} Σ_j c_j exp(+i q_j n),   q_j = 2πj/N
//! c_j = N^{-1/2} Σ_n ψ_n exp(−i q_j n)
//! ```
//!
//! Both directions are unitary. The centred indices are folded into an FFT by
//! the (−1)^i, (−1)^l modulations.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::spectrum::mode_wavevector;

/// Fraction of sites on each side of the ring counted as the edge band.
const EDGE_BAND_DIVISOR: usize = 50;

#[derive(Clone)]
pub struct BlochTransform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for BlochTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlochTransform").field("n", &self.n).finish()
    }
}

impl BlochTransform {
    /// `n` must be even.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "lattice size must be even, got {n}");
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unwrapped site index of storage position `i`.
    pub fn site(&self, i: usize) -> i64 {
        i as i64 - (self.n / 2) as i64
    }

    /// Wavevector of storage position `l`.
    pub fn wavevector(&self, l: usize) -> f64 {
        mode_wavevector(l as i64 - (self.n / 2) as i64, self.n)
    }

    pub fn wavevectors(&self) -> Vec<f64> {
        (0..self.n).map(|l| self.wavevector(l)).collect()
    }

    /// Multiplies entry i by factor·(−1)^i.
    fn modulate(buf: &mut [C64], factor: f64) {
        for (i, x) in buf.iter_mut().enumerate() {
            *x *= if i % 2 == 0 { factor } else { -factor };
        }
    }

    /// scale·(−1)^{N/2}
    fn post_factor(&self) -> f64 {
        if (self.n / 2) % 2 == 0 {
            self.scale
        } else {
            -self.scale
        }
    }

    /// Mode amplitudes → site amplitudes, in place.
    pub fn to_sites(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n);
        Self::modulate(buf, 1.0);
        self.inverse.process(buf);
        Self::modulate(buf, self.post_factor());
    }

    /// Site amplitudes → mode amplitudes, in place.
    pub fn to_modes(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n);
        Self::modulate(buf, 1.0);
        self.forward.process(buf);
        Self::modulate(buf, self.post_factor());
    }

    /// Population in the outer edge bands relative to the total. Zero for an
    /// empty distribution.
    pub fn edge_fraction(&self, probabilities: &[f64]) -> f64 {
        let total: f64 = probabilities.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let band = (self.n / EDGE_BAND_DIVISOR).max(1);
        let edge: f64 = probabilities[..band].iter().sum::<f64>()
            + probabilities[self.n - band..].iter().sum::<f64>();
        edge / total
    }
}

/// Plain O(N²) transform, kept as a reference for the FFT path.
pub fn naive_to_sites(modes: &[C64]) -> Vec<C64> {
    let n = modes.len();
    let half = (n / 2) as i64;
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| {
            let site = (i as i64 - half) as f64;
            modes
                .iter()
                .enumerate()
                .map(|(l, c)| {
                    let q = mode_wavevector(l as i64 - half, n);
                    c * C64::from_polar(1.0, q * site)
                })
                .sum::<C64>()
                * scale
        })
        .collect()
}
