use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("AR model is unstable (a pole lies on or outside the unit circle)")]
    UnstableModel,

    #[error("non-finite input sample at step {step}")]
    NonFiniteInput { step: u64 },

    #[error("adaptive filter diverged at step {step}")]
    Diverged { step: u64 },

    #[error("step sizes violate the stability range 0 < mu1 + mu2 < 2 (mu1 + mu2 = {sum})")]
    UnstableStepSize { sum: f64 },

    #[error("all {trials} Monte-Carlo trials diverged")]
    AllTrialsDiverged { trials: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                actual,
            })
        }
    }
}
