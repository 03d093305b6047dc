//! Multimode non-Hermitian Tavis–Cummings model: a ring of N molecules
//! coupled to N lossy cavity modes, reduced to independent 2×2 blocks per
//! wavevector.
//!
//! * [`spectrum`]: per-mode eigenvalues, Hopfield coefficients, rates and
//!   group velocities.
//! * [`wavepacket`]: branch-projected Gaussian packets.
//! * [`moments`]: population, centre of mass and mean squared displacement.
//! * [`fitkit`]: ballistic-to-diffusive crossover and power-law fits.
//! * [`phasemap`]: phase diagram of the complex Rabi splitting.
//! * [`refprop`]: brute-force propagators used as independent references.

pub mod bloch;
pub mod error;
pub mod fitkit;
pub mod moments;
pub mod phasemap;
pub mod refprop;
pub mod spectrum;
pub mod wavepacket;

pub use error::{Error, Result};
pub use spectrum::{Branch, ModelParams};
pub use wavepacket::WavePacketSpec;
