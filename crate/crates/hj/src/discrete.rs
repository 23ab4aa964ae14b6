//! Finite trait space: mutation costs, growth, resource kernels and the initial exponent.

use serde::{Deserialize, Serialize};

use crate::error::{HjError, Result};
use crate::growth::Growth;

/// A Lotka–Volterra system on a finite set of types with exponentially rare mutations.
///
/// `costs[k][j]` is the cost of mutation mass flowing into type `k` from type `j`; at
/// scale `ε` it happens at rate `exp(−costs[k][j]/ε)`. An infinite cost (`null` in JSON)
/// disables the transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTraitModel {
    #[serde(with = "cost_matrix")]
    pub costs: Vec<Vec<f64>>,
    pub growth: Growth,
    /// `kernels[i][k]`: consumption of resource `i` by one unit of type `k`.
    pub kernels: Vec<Vec<f64>>,
    /// Initial exponent `h`: `u(0, k) = exp(−h(k)/ε)`.
    pub initial_exponent: Vec<f64>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
}

impl DiscreteTraitModel {
    pub fn new(
        costs: Vec<Vec<f64>>,
        growth: Growth,
        kernels: Vec<Vec<f64>>,
        initial_exponent: Vec<f64>,
    ) -> Result<Self> {
        let model = Self { costs, growth, kernels, initial_exponent, epsilons: Vec::new() };
        model.validate()?;
        Ok(model)
    }

    pub fn with_epsilons(mut self, epsilons: Vec<f64>) -> Self {
        self.epsilons = epsilons;
        self
    }

    pub fn types(&self) -> usize {
        self.initial_exponent.len()
    }

    pub fn resources(&self) -> usize {
        self.kernels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.types();
        if n == 0 {
            return Err(HjError::param("initial_exponent", "at least one type is required"));
        }
        if self.initial_exponent.iter().any(|h| !h.is_finite()) {
            return Err(HjError::param("initial_exponent", "entries must be finite"));
        }
        if self.costs.len() != n || self.costs.iter().any(|row| row.len() != n) {
            return Err(HjError::param("costs", format!("expected a {n}x{n} matrix")));
        }
        for (k, row) in self.costs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let ok = if k == j { c == 0.0 } else { c > 0.0 && !c.is_nan() };
                if !ok {
                    return Err(HjError::param(
                        "costs",
                        format!("entry ({k},{j}) = {c}: diagonal must be 0, off-diagonal positive"),
                    ));
                }
            }
        }
        let r = self.resources();
        if r == 0 {
            return Err(HjError::param("kernels", "at least one resource is required"));
        }
        for row in &self.kernels {
            if row.len() != n || row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(HjError::param("kernels", "each kernel needs one positive entry per type"));
            }
        }
        self.growth.validate(n, r)?;
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(HjError::param("epsilons", "must be positive"));
        }
        Ok(())
    }

    /// Resource vector `ψ^i = Σ_k kernels[i][k]·u_k`.
    pub fn resource_levels(&self, u: &[f64]) -> Vec<f64> {
        self.kernels.iter().map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn rate(&self, k: usize, psi: &[f64]) -> f64 {
        self.growth.rate(k, psi)
    }

    pub fn rates(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.types()).map(|k| self.rate(k, psi)).collect()
    }

    /// Initial exponent shifted so that its minimum is 0.
    pub fn normalized_exponent(&self) -> Vec<f64> {
        let lo = self.initial_exponent.iter().copied().fold(f64::INFINITY, f64::min);
        self.initial_exponent.iter().map(|h| h - lo).collect()
    }

    /// Cheapest chain of mutations into `k` from `j` (Floyd–Warshall closure of `costs`).
    pub fn chain_costs(&self) -> Vec<Vec<f64>> {
        let n = self.types();
        let mut d = self.costs.clone();
        for m in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let via = d[k][m] + d[m][j];
                    if via < d[k][j] {
                        d[k][j] = via;
                    }
                }
            }
        }
        d
    }

    /// Smallest off-diagonal cost, `∞` when mutation is off everywhere.
    pub fn min_cost(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for (k, row) in self.costs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if k != j {
                    lo = lo.min(c);
                }
            }
        }
        lo
    }

    /// Same model with a different initial exponent.
    pub fn with_initial_exponent(&self, h: Vec<f64>) -> Result<Self> {
        let mut m = self.clone();
        m.initial_exponent = h;
        m.validate()?;
        Ok(m)
    }
}

mod cost_matrix {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Option<f64>>> =
            m.iter().map(|row| row.iter().map(|&c| c.is_finite().then_some(c)).collect()).collect();
        serde::Serialize::serialize(&rows, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<Option<f64>>> = Deserialize::deserialize(d)?;
        Ok(rows.into_iter().map(|row| row.into_iter().map(|c| c.unwrap_or(f64::INFINITY)).collect()).collect())
    }
}
