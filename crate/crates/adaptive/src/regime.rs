//! Population-size scaling of mutation probabilities and step sizes.

use serde::{Deserialize, Serialize};

use crate::ecology::MarkerGenerator;
use crate::error::{AdaptiveError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    /// Carrying-capacity scale; individuals carry weight `1/K`.
    pub k: u64,
    /// Trait mutation step scale; a mutant's trait is `x + sigma·step`.
    pub sigma: f64,
    /// Per-birth probability of a trait mutation, before the trait-dependent modulator.
    pub trait_mutation: f64,
    /// Per-birth probability of a marker mutation.
    pub marker_mutation: f64,
    /// Ratio of marker to trait mutation probabilities.
    pub marker_speedup: f64,
    /// Exponent slack in the canonical-equation window.
    pub alpha: f64,
}

/// Each side of a `lower ≪ value ≪ upper` window checked with an explicit slack factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl WindowCheck {
    fn new(lower: f64, value: f64, upper: f64, slack: f64) -> Self {
        Self { lower, value, upper, lower_ok: lower * slack <= value, upper_ok: value * slack <= upper }
    }

    pub fn holds(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Validity of the canonical-equation scaling; informative only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub slack: f64,
    /// `K^{−1/2+α} ≪ σ ≪ 1`.
    pub step_window: WindowCheck,
    /// `exp(−K^α) ≪ p ≪ σ^{1+α}/(K ln K)` on the trait mutation probability.
    pub mutation_window: WindowCheck,
    /// Marker mutation probability equals `trait_mutation·marker_speedup`.
    pub marker_consistent: bool,
}

impl RegimeReport {
    pub fn holds(&self) -> bool {
        self.step_window.holds() && self.mutation_window.holds()
    }
}

impl ScalingRegime {
    /// Unit steps, trait mutations with probability `K^{−2}` and markers `r` times more often.
    pub fn marker_model(k: u64, marker_speedup: f64) -> Self {
        let p = 1.0 / (k as f64).powi(2);
        Self { k, sigma: 1.0, trait_mutation: p, marker_mutation: p * marker_speedup, marker_speedup, alpha: 0.0 }
    }

    /// Small steps `sigma` and trait mutation probability `p`, without marker mutations.
    pub fn small_steps(k: u64, sigma: f64, trait_mutation: f64, alpha: f64) -> Self {
        Self { k, sigma, trait_mutation, marker_mutation: 0.0, marker_speedup: 0.0, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 10 {
            return Err(AdaptiveError::param("k", "population scale must be at least 10"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(AdaptiveError::param("sigma", "must be positive"));
        }
        for (name, p) in [("trait_mutation", self.trait_mutation), ("marker_mutation", self.marker_mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AdaptiveError::param(name, "must be a probability"));
            }
        }
        if !(self.trait_mutation + self.marker_mutation <= 1.0) {
            return Err(AdaptiveError::param("marker_mutation", "trait and marker probabilities exceed 1 together"));
        }
        Ok(())
    }

    /// Per-birth probability of jumping from marker `u` to `v ≠ u`: the marker mutation
    /// probability times `K/r · A[u][v]`, so that the marker generator is recovered on the
    /// trait time scale.
    pub fn marker_jump_scale(&self, markers: &MarkerGenerator) -> Result<f64> {
        if self.marker_mutation == 0.0 {
            return Ok(0.0);
        }
        let scale = self.k as f64 / self.marker_speedup;
        let worst = (0..markers.markers()).map(|u| markers.exit_rate(u)).fold(0.0, f64::max);
        if scale * worst > 1.0 {
            return Err(AdaptiveError::param(
                "marker_speedup",
                format!("K/r·max exit rate = {} exceeds 1", scale * worst),
            ));
        }
        Ok(scale)
    }

    /// IBM time per unit of trait-substitution time, `1/(K p)`.
    pub fn substitution_time_unit(&self) -> f64 {
        1.0 / (self.k as f64 * self.trait_mutation)
    }

    /// IBM time per unit of canonical-equation time, `1/(K p σ²)`.
    pub fn canonical_time_unit(&self) -> f64 {
        self.substitution_time_unit() / (self.sigma * self.sigma)
    }

    pub fn report(&self, slack: f64) -> RegimeReport {
        let k = self.k as f64;
        let a = self.alpha;
        RegimeReport {
            slack,
            step_window: WindowCheck::new(k.powf(-0.5 + a), self.sigma, 1.0, slack),
            mutation_window: WindowCheck::new(
                (-k.powf(a)).exp(),
                self.trait_mutation,
                self.sigma.powf(1.0 + a) / (k * k.ln()),
                slack,
            ),
            marker_consistent: (self.marker_mutation - self.trait_mutation * self.marker_speedup).abs()
                <= 1e-12 * self.marker_mutation.max(1e-300),
        }
    }
}
