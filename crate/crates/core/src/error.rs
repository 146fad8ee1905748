use thiserror::Error;

/// Failures raised by the solvers, checkers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Velocity reached the limit speed, so Bernoulli's law leaves no positive density.
    #[error("cavitation: {0}")]
    Cavitation(String),

    #[error("background solve did not converge at r = {r}")]
    NoConvergence { r: f64 },

    #[error("subsonic root selected at r = {r} (U = {u}, c^2 = {c2})")]
    Branch { r: f64, u: f64, c2: f64 },

    #[error("hyperbolicity lost at r = {r}, phi = {phi}: margin {margin:e}")]
    HyperbolicityLoss { r: f64, phi: f64, margin: f64 },

    #[error("step rejected at r = {r}: {reason}")]
    StepRejected { r: f64, reason: String },

    #[error("march aborted at r = {r}: {cause}")]
    AbortedAt { r: f64, cause: Box<Error> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient slices: {0}")]
    InsufficientSlices(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
