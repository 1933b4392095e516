use thiserror::Error;

/// Errors raised by the simulation layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument is outside the domain of the operation.
    #[error("{name} = {value} is outside the domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A structured parameter failed validation.
    #[error("invalid `{name}`: {reason}")]
    Invalid { name: String, reason: String },

    /// The three wave vectors cannot form a closed triangle.
    #[error("wavenumbers {k:?} (1/nm) violate the triangle inequality; the beams cannot close")]
    NoClosure { k: [f64; 3] },

    /// A quadratic Stark calibration was requested at zero resonance field.
    #[error("cannot calibrate a Stark coefficient against a resonance at E = 0")]
    CalibrationDegenerate,

    /// Two atoms closer than the configured exclusion distance.
    #[error("atoms {i} and {j} are {distance} um apart, below r_min = {r_min} um")]
    MinDistance {
        i: usize,
        j: usize,
        distance: f64,
        r_min: f64,
    },

    /// The adaptive integrator could not make progress.
    #[error("integration step underflow at t = {t} us (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A trace does not cover the windows a metric needs.
    #[error("trace ends at t = {have} us but the metric needs data up to {need} us")]
    WindowTooShort { have: f64, need: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Invalid {
        name: name.into(),
        reason: reason.into(),
    }
}
