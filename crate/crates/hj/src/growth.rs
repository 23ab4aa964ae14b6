//! Growth rates as functions of the resource vector.

use serde::{Deserialize, Serialize};

use crate::error::{HjError, Result};

/// Per-type growth rate `R(k, ψ)`, decreasing in every resource coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Growth {
    /// `R(k, ψ) = base[k] − Σ_i slopes[k][i]·ψ_i`.
    Linear { base: Vec<f64>, slopes: Vec<Vec<f64>> },
    /// `R(k, ψ) = base[k] − Σ_i (slopes[k][i]·ψ_i + curvature[k][i]·ψ_i²)`, for `ψ ≥ 0`.
    Quadratic { base: Vec<f64>, slopes: Vec<Vec<f64>>, curvature: Vec<Vec<f64>> },
}

impl Growth {
    pub fn types(&self) -> usize {
        match self {
            Growth::Linear { base, .. } | Growth::Quadratic { base, .. } => base.len(),
        }
    }

    pub fn resources(&self) -> usize {
        match self {
            Growth::Linear { slopes, .. } | Growth::Quadratic { slopes, .. } => slopes.first().map_or(0, Vec::len),
        }
    }

    pub fn rate(&self, k: usize, psi: &[f64]) -> f64 {
        match self {
            Growth::Linear { base, slopes } => base[k] - slopes[k].iter().zip(psi).map(|(c, p)| c * p).sum::<f64>(),
            Growth::Quadratic { base, slopes, curvature } => {
                base[k] - slopes[k].iter().zip(&curvature[k]).zip(psi).map(|((c, q), p)| c * p + q * p * p).sum::<f64>()
            }
        }
    }

    /// `∂R(k, ψ)/∂ψ_i`.
    pub fn sensitivity(&self, k: usize, i: usize, psi: &[f64]) -> f64 {
        match self {
            Growth::Linear { slopes, .. } => -slopes[k][i],
            Growth::Quadratic { slopes, curvature, .. } => -(slopes[k][i] + 2.0 * curvature[k][i] * psi[i]),
        }
    }

    /// Checks shapes and strict monotone decrease in every resource.
    pub fn validate(&self, types: usize, resources: usize) -> Result<()> {
        let (base, slopes, curvature) = match self {
            Growth::Linear { base, slopes } => (base, slopes, None),
            Growth::Quadratic { base, slopes, curvature } => (base, slopes, Some(curvature)),
        };
        if base.len() != types || slopes.len() != types {
            return Err(HjError::param("growth", format!("expected {types} types")));
        }
        if base.iter().any(|b| !b.is_finite()) {
            return Err(HjError::param("growth.base", "entries must be finite"));
        }
        for row in slopes {
            if row.len() != resources {
                return Err(HjError::param("growth.slopes", format!("expected {resources} resources")));
            }
            if row.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(HjError::param("growth.slopes", "growth must be strictly decreasing in every resource"));
            }
        }
        if let Some(curvature) = curvature {
            if curvature.len() != types
                || curvature
                    .iter()
                    .any(|row| row.len() != resources || row.iter().any(|q| !(q.is_finite() && *q >= 0.0)))
            {
                return Err(HjError::param("growth.curvature", "expected non-negative finite entries"));
            }
        }
        Ok(())
    }
}
