use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HigsError {
    #[error("insufficient history: the signal buffer is empty")]
    InsufficientHistory,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("degenerate frequency band [{low}, {high}] rad/s")]
    DegenerateBand { low: f64, high: f64 },

    #[error("switching-angle equation has no admissible root (residual {residual:e})")]
    NoRoot { residual: f64 },

    #[error("quadrature did not converge (last change {change:e})")]
    QuadratureNotConverged { change: f64 },

    #[error("no steady state: period-to-period RMS drift {drift:.3e} exceeds 1%")]
    NoSteadyState { drift: f64 },

    #[error("closed loop diverged at sample {index}: |y| = {magnitude:e}")]
    Diverged { index: usize, magnitude: f64 },

    #[error("non-finite value produced at sample {index}")]
    NonFinite { index: usize },

    #[error("at sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<HigsError>,
    },
}

impl HigsError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        HigsError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        match self {
            e @ HigsError::AtSample { .. } => e,
            e => HigsError::AtSample {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T, E = HigsError> = std::result::Result<T, E>;
