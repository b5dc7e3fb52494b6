use thiserror::Error;

use crate::diagnostics::{BlowupFlags, DiagnosticsRecord};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The well-stretched estimate of the curve fell below the usable floor.
    #[error("degenerate curve: well-stretched estimate {lambda:.3e} below floor {floor:.3e}")]
    Degenerate { lambda: f64, floor: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("grid mismatch: {0}")]
    Mismatch(String),

    #[error("fixed-point iteration stalled after {sweeps} sweeps (residual {residual:.3e} > tol {tol:.3e})")]
    PicardStalled { sweeps: usize, residual: f64, tol: f64 },

    #[error("blow-up monitor fired at t = {t}: {flags}")]
    BlowUp {
        t: f64,
        flags: BlowupFlags,
        record: Box<DiagnosticsRecord>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
