use thiserror::Error;

pub type Result<T> = std::result::Result<T, ZorichError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZorichError {
    #[error("domain error: {0}")]
    Domain(String),

    /// The height exceeded the overflow guard; `e^height` is not evaluated.
    #[error("overflow: height {height} exceeds the guard")]
    Overflow { height: f64 },

    #[error("point lies within {distance:e} of a seam (need > {required:e}); shrink the step or use one-sided differences")]
    Seam { distance: f64, required: f64 },

    #[error("seam contact at orbit step {step}: {source}")]
    SeamAtStep {
        step: usize,
        #[source]
        source: Box<ZorichError>,
    },

    #[error("point is outside the expected half-space {expected}")]
    HalfSpace { expected: String },

    #[error("inadmissible symbol sequence at step {step}: {reason}")]
    Inadmissible { step: usize, reason: String },

    #[error("no convergence after {rounds} rounds (last step {last_step:e})")]
    NoConvergence { rounds: usize, last_step: f64 },

    #[error("parameter regime error: {0}")]
    Regime(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl ZorichError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
}
