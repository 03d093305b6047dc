use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// |Δ_k| fell below [`crate::spectrum::EP_TOLERANCE`]; the 2×2 block is
    /// defective and has no eigenvector basis.
    #[error("exceptional point at q = {q}, gamma = {gamma} (|rabi| = {rabi_abs:e})")]
    ExceptionalPoint { q: f64, gamma: f64, rabi_abs: f64 },

    #[error("no resonance: omega_M = {omega_m} does not exceed omega_C = {omega_c}")]
    NoResonance { omega_m: f64, omega_c: f64 },

    #[error(
        "wave packet reached the lattice edge at t = {t} (relative edge population {edge:e}); \
         increase the number of modes"
    )]
    WrapAround { t: f64, edge: f64 },

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
