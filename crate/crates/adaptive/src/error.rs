use popscale_core::KernelError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum AdaptiveError {
    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("population reached {size} individuals at t = {time}, above the cap {cap}")]
    PopulationCap { time: f64, size: usize, cap: usize },

    #[error("no positive equilibrium at trait {trait_value}: {reason}")]
    NoEquilibrium { trait_value: f64, reason: String },
}

impl AdaptiveError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Self::Parameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, AdaptiveError>;
