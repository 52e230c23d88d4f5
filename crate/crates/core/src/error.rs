use thiserror::Error;

/// Errors raised by the forward and inverse solvers and the file layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("undefined sector at origin")]
    UndefinedSector,

    #[error("evaluation at singularity x = {x}")]
    AtSingularity { x: f64 },

    #[error("point x = {x} lies out of disk of singularity {k} (radius {radius})")]
    OutOfDisk { k: usize, x: f64, radius: f64 },

    #[error("resonant exponent at singularity {k}: 2μ hits integer shift {shift}")]
    ResonantExponent { k: usize, shift: usize },

    #[error("order too small: series for singularity {k} not converged at order {order} (tail {tail:e})")]
    OrderTooSmall { k: usize, order: usize, tail: f64 },

    #[error("integrator failure on segment [{from}, {to}]: {reason}")]
    Integrator { from: f64, to: f64, reason: String },

    #[error("pole: |Δ₁₂(λ)| = {magnitude:e} at λ = {lambda}")]
    Pole { lambda: String, magnitude: f64 },

    #[error("non-simple zero: |Δ̇₁₂(λ)| = {magnitude:e} at λ = {lambda}")]
    NonSimpleZero { lambda: String, magnitude: f64 },

    #[error("multiple eigenvalue, outside simple-spectrum scope: {detail}")]
    MultipleEigenvalue { detail: String },

    #[error("eigenvalue count mismatch in {rect}: contour count {contour}, found {found}")]
    CountMismatch { rect: String, contour: i64, found: usize },

    #[error("Condition S violated at x = {x}: condition estimate {cond:e}")]
    ConditionS { x: f64, cond: f64 },

    #[error("spectral data mismatch: {0}")]
    DataMismatch(String),

    #[error("Newton iteration failed to converge from {start}: {reason}")]
    NoConvergence { start: String, reason: String },

    #[error("{stage} at x = {x}: {source}")]
    AtGridPoint {
        stage: &'static str,
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec { field: field.into(), reason: reason.into() }
    }

    /// Whether this is an input validation failure (as opposed to a numerical one).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidSpec { .. } | Error::DataMismatch(_) | Error::Parse { .. } | Error::Io { .. } => true,
            Error::AtGridPoint { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
