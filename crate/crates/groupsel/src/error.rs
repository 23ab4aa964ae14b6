use popscale_core::KernelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroupSelError {
    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("time step {dt} exceeds the admissible explicit step {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("eigen solver did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
}

impl GroupSelError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Self::Parameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, GroupSelError>;
