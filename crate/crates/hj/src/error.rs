#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HjError {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("Assumption (H) violated on active set {set:?}: {reason}")]
    AssumptionH { set: Vec<usize>, reason: String },

    #[error("step size collapsed to {dt:e} at t = {time}; retry with a tolerance above {suggested_tol:e}")]
    StepRejection { time: f64, dt: f64, suggested_tol: f64 },

    #[error("resource level {psi:?} left the confinement box [{low}, {high}] at t = {time}")]
    Confinement { time: f64, psi: Vec<f64>, low: f64, high: f64 },
}

impl HjError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Self::Parameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, HjError>;
