use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("state dimension {got} does not match vector field dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step limit of {max_steps} exceeded at t = {t}")]
    StepLimit { max_steps: usize, t: f64 },

    #[error("non-finite state encountered; last valid time t = {t}")]
    NonFinite { t: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    /// Equilibria (and everything derived from them) require alpha >= 2 omega.
    #[error("no equilibria: alpha = {alpha} < 2 omega = {two_omega}")]
    NoEquilibria { alpha: f64, two_omega: f64 },

    /// `s = 4(m+1)^2 - 6m(x+2)` is negative, so the boundary branches are not real.
    #[error("boundary curve undefined: s = {s} < 0")]
    NegativeBoundaryDiscriminant { s: f64 },

    #[error("rotation-frequency cubic has {0} real roots; expected exactly one")]
    MultipleRealRoots(usize),

    #[error("parameters are not in the rotating region (alpha = {alpha}, omega = {omega})")]
    NotRotating { alpha: f64, omega: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
