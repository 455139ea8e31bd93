use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Shape or layout violation (wrong dimensions, bad block structure).
    #[error("structural error: {0}")]
    Structural(String),

    /// A generator spec failed validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// The cascade or resolvent reached a lasing pole; the linear theory
    /// does not apply to this sample.
    #[error("threshold crossed: {0}")]
    ThresholdCrossed(String),

    /// A quantity that must be Hermitian/finite/normalized came out
    /// otherwise by more than the allowed tolerance.
    #[error("numerical consistency failure: {0}")]
    NumericalConsistency(String),

    /// Generating-function argument outside the radius of convergence.
    /// `critical_xi` is the largest admissible value.
    #[error("{message} (critical xi = {critical_xi:.6e})")]
    Domain { critical_xi: f64, message: String },

    /// No signal reaches the detector, so the noise figure is undefined.
    #[error("undefined signal: no transmission into the detected mode")]
    UndefinedSignal,

    /// A matrix invariant required by a sampler was violated.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Singular linear system.
    #[error("singular matrix: {0}")]
    Singular(String),
}
