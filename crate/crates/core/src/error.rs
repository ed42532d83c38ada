use thiserror::Error;

use crate::evolution::FieldState;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unsupported equivariance index k = {k}: {reason}")]
    UnsupportedIndex { k: u32, reason: &'static str },

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("CFL violated: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("non-finite value at t = {t} (blowup or instability)")]
    NonFinite { t: f64, last_finite: Box<FieldState> },

    #[error("modulation tracking lost near lambda = {lambda_prev}: g({lo:e}) = {g_lo:e}, g({hi:e}) = {g_hi:e}")]
    TrackingLost {
        lambda_prev: f64,
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("degenerate modulation denominator: |alpha| = {alpha:e} < {threshold:e}")]
    DegenerateDenominator { alpha: f64, threshold: f64 },

    #[error("not ready: {0}")]
    NotReady(&'static str),

    #[error("not available: {0}")]
    NotAvailable(&'static str),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(SimError::Shape { expected, got })
    }
}
