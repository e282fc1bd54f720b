use thiserror::Error;

use crate::spectral::SpectralField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid of {grid} points cannot resolve order {order} (need at least {})", 2 * order + 1)]
    Resolution { grid: usize, order: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HdwError {
    #[error("field does not vanish at θ = 0 (value {value:e})")]
    NotVanishingAtZero { value: f64 },
}

/// Why an integration was stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowUpKind {
    NonFinite,
    Ceiling,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("integration stopped at t = {t} ({kind:?}); last valid state at t = {last_valid_t}")]
    BlowUp {
        kind: BlowUpKind,
        t: f64,
        last_valid_t: f64,
        last_state: Box<SpectralField>,
        /// Snapshots recorded before the stop.
        samples: Vec<(f64, SpectralField)>,
    },
    #[error("invalid time parameters: {0}")]
    InvalidTime(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error("linear evolution produced a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("norm series contains a nonpositive value at t = {t}")]
    NonPositiveNorm { t: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error(
        "Picard iteration did not contract on a window of length {window:e}; try a shorter time"
    )]
    NonContraction { window: f64 },
    #[error("Picard iteration did not reach tolerance {tol:e} within {max_iters} iterations")]
    NotConverged { tol: f64, max_iters: usize },
    #[error("characteristic step {displacement:e} exceeds the grid spacing; refine dt")]
    CharacteristicTooLong { displacement: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
