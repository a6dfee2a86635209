use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The adaptive step fell below the minimum step size.
    #[error("step size collapsed to {h:e} s at t = {t} s (stiff or unstable system)")]
    StepSizeCollapse { t: f64, h: f64 },

    #[error("step budget of {0} exhausted before reaching the end of the time span")]
    MaxSteps(usize),

    #[error("trajectory has too few samples ({0}); at least 3 are required")]
    TooFewSamples(usize),

    #[error("kinematic analysis is undefined for a diverged trajectory")]
    DivergedTrajectory,

    /// Movement window requested for a trajectory with zero peak speed.
    #[error("degenerate movement window: peak speed is zero")]
    DegenerateWindow,

    #[error("domain error: {0}")]
    Domain(String),
}

pub(crate) fn param_err(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
