use popscale_core::KernelError;

/// One Newton iteration of the likelihood maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTrace {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BranchingError {
    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("{0}")]
    Domain(String),

    #[error("likelihood maximization did not converge after {} iterations", trace.len())]
    NoConvergence { trace: Vec<NewtonTrace> },
}

impl BranchingError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Self::Parameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, BranchingError>;
