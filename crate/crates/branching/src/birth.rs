//! Parametric division-rate families.

use serde::{Deserialize, Serialize};

use crate::error::{BranchingError, Result};

/// Division rate `B_ϑ(x)`, increasing in every coordinate of `ϑ` for traits `x ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthForm {
    /// `B = ϑ₀`.
    Constant,
    /// `B = ϑ₀ + ϑ₁·x`.
    Affine,
}

/// A birth-rate family over a compact box of parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricBirthFamily {
    pub form: BirthForm,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParametricBirthFamily {
    pub fn new(form: BirthForm, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let family = Self { form, lower, upper };
        family.validate()?;
        Ok(family)
    }

    pub fn dimension(&self) -> usize {
        match self.form {
            BirthForm::Constant => 1,
            BirthForm::Affine => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if self.lower.len() != d || self.upper.len() != d {
            return Err(BranchingError::param("theta bounds", format!("expected {d} coordinates")));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(0.0 <= *l && l < u && u.is_finite())) {
            return Err(BranchingError::param("theta bounds", "need 0 <= lower < upper < inf"));
        }
        if self.form == BirthForm::Constant && self.lower[0] <= 0.0 {
            return Err(BranchingError::param("theta bounds", "a constant rate needs a positive lower bound"));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dimension()
            && theta.iter().zip(self.lower.iter().zip(&self.upper)).all(|(t, (l, u))| l <= t && t <= u)
    }

    pub fn rate(&self, theta: &[f64], x: f64) -> f64 {
        match self.form {
            BirthForm::Constant => theta[0],
            BirthForm::Affine => theta[0] + theta[1] * x,
        }
    }

    /// `∇_ϑ B_ϑ(x)`.
    pub fn gradient(&self, x: f64) -> Vec<f64> {
        match self.form {
            BirthForm::Constant => vec![1.0],
            BirthForm::Affine => vec![1.0, x],
        }
    }

    /// Largest rate over the parameter box for traits in `[lo, hi] ⊂ [0, ∞)`.
    pub fn rate_bound(&self, domain: (f64, f64)) -> f64 {
        self.rate(&self.upper, domain.0.abs().max(domain.1.abs()))
    }
}
