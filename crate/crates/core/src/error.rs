use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    /// All propensities vanish: the chain cannot leave its current state.
    #[error("frozen state: total event rate is zero")]
    FrozenState,
    #[error("invalid rate table: {0}")]
    InvalidRates(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("rate bound violated at t = {time}: rate {rate} > bound {bound}")]
    RateBoundViolated { time: f64, rate: f64, bound: f64 },
}

impl KernelError {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        KernelError::Parameter { name, reason: reason.into() }
    }
}
