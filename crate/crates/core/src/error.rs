use serde::Serialize;
use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Parameter errors carry the name of the offending quantity so the CLI can
/// report the key that failed validation.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("degenerate critical point at y = {y} (curvature {curvature:e})")]
    DegenerateLandscape { y: f64, curvature: f64 },

    #[error("empty search window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("exclusion ball of radius {radius} around y = {center} covers the window")]
    ExclusionCoversWindow { center: f64, radius: f64 },

    #[error("quadrature did not reach rel_tol {rel_tol:e}: best value {best_value} (estimate {error_estimate:e})")]
    QuadratureNotConverged {
        rel_tol: f64,
        best_value: f64,
        error_estimate: f64,
    },

    #[error("two maxima tie within {tolerance:e} (h = {h_minus}, {h_plus}); offset z to select a branch")]
    AmbiguousBranch {
        h_minus: f64,
        h_plus: f64,
        tolerance: f64,
    },

    #[error("positive branch does not exist for z = {z} <= fold threshold {fold}")]
    BelowFold { z: f64, fold: f64 },

    #[error("z = {z} is within {distance:e} of the fold threshold {fold}")]
    NearFold { z: f64, fold: f64, distance: f64 },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoSignChange { what: &'static str, lo: f64, hi: f64 },

    #[error("{what} residual {residual:e} exceeds {tolerance:e}")]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("profile undefined at the discontinuity z_c = {z_c}")]
    AtDiscontinuity { z_c: f64 },

    #[error("singular denominator {value:e} in correction constant")]
    SingularDenominator { value: f64 },

    #[error("landscape at z = {z}, t = {t} lacks the {branch} maximum")]
    BranchMissing { branch: &'static str, z: f64, t: f64 },

    #[error("critical structure invariant violated: {0}")]
    Structure(String),

    #[error("too few usable points for a fit: {usable} (need {required})")]
    TooFewPoints { usable: usize, required: usize },

    #[error("CFL violation: dt = {dt:e} exceeds {limit:e}")]
    Cfl { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
