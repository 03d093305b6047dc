//! Fixtures shared by the kernel benchmarks.

use mntc_core::moments::{Dynamics, TimeGrid};
use mntc_core::{Branch, ModelParams, WavePacketSpec};

/// Default upper-branch packet at the given loss rate.
pub fn upper_dynamics(gamma: f64, n_modes: usize) -> Dynamics {
    let params = ModelParams::default().with_gamma(gamma).with_modes(n_modes);
    Dynamics::new(&WavePacketSpec::new(0.5, 10.0, Branch::Upper), &params).expect("valid defaults")
}

/// A short grid, long enough to leave the ballistic regime.
pub fn short_grid() -> TimeGrid {
    TimeGrid::new(20.0, 0.5)
}
