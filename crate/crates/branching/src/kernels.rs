//! Trait laws at birth: marginals, parent-to-child transition kernels and the
//! fragmentation law of the dividing trait.

use popscale_core::stats::{normal_cdf, normal_quantile};
use popscale_core::RngStream;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::error::{BranchingError, Result};

/// Probability density on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum TraitMarginal {
    /// Symmetric triangle with mode 1/2; Lipschitz but not differentiable at the mode.
    Triangular,
    Beta {
        a: f64,
        b: f64,
    },
}

impl TraitMarginal {
    fn beta(a: f64, b: f64) -> Beta {
        Beta::new(a, b).expect("validated beta parameters")
    }

    pub fn validate(&self) -> Result<()> {
        if let TraitMarginal::Beta { a, b } = self {
            if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(BranchingError::param("marginal", "beta shapes must be positive"));
            }
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            TraitMarginal::Triangular => 4.0 * x.min(1.0 - x),
            TraitMarginal::Beta { a, b } => Self::beta(a, b).pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match *self {
            TraitMarginal::Triangular if x <= 0.5 => 2.0 * x * x,
            TraitMarginal::Triangular => 1.0 - 2.0 * (1.0 - x) * (1.0 - x),
            TraitMarginal::Beta { a, b } => Self::beta(a, b).cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match *self {
            TraitMarginal::Triangular if p <= 0.5 => (0.5 * p).sqrt(),
            TraitMarginal::Triangular => 1.0 - (0.5 * (1.0 - p)).sqrt(),
            TraitMarginal::Beta { a, b } => Self::beta(a, b).inverse_cdf(p),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.quantile(rng.open01())
    }
}

/// Law `Q(x, dy)` of a child's trait at birth given its parent's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum TransitionKernel {
    /// `Q(x, ·) = marginal`, whatever `x`.
    Independent { marginal: TraitMarginal },
    /// Gaussian-copula chain with the given stationary marginal: in normal scores the
    /// child is `ρ·parent + √(1−ρ²)·noise`.
    GaussianCopula { marginal: TraitMarginal, correlation: f64 },
}

impl TransitionKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            TransitionKernel::Independent { marginal } => marginal.validate(),
            TransitionKernel::GaussianCopula { marginal, correlation } => {
                if !(correlation.abs() < 1.0) {
                    return Err(BranchingError::param("correlation", "must lie in (-1, 1)"));
                }
                marginal.validate()
            }
        }
    }

    /// Invariant density `ν`.
    pub fn stationary(&self) -> TraitMarginal {
        match *self {
            TransitionKernel::Independent { marginal } | TransitionKernel::GaussianCopula { marginal, .. } => marginal,
        }
    }

    pub fn sample(&self, parent: f64, rng: &mut RngStream) -> f64 {
        match *self {
            TransitionKernel::Independent { marginal } => marginal.sample(rng),
            TransitionKernel::GaussianCopula { marginal, correlation } => {
                let score = normal_quantile(marginal.cdf(parent).clamp(1e-15, 1.0 - 1e-15));
                let child = correlation * score + (1.0 - correlation * correlation).sqrt() * rng.normal();
                marginal.quantile(normal_cdf(child))
            }
        }
    }

    /// Transition density `q(x, y)`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        match *self {
            TransitionKernel::Independent { marginal } => marginal.pdf(y),
            TransitionKernel::GaussianCopula { marginal, correlation: r } => {
                let g = marginal.pdf(y);
                if g == 0.0 {
                    return 0.0;
                }
                let a = normal_quantile(marginal.cdf(x).clamp(1e-15, 1.0 - 1e-15));
                let b = normal_quantile(marginal.cdf(y).clamp(1e-15, 1.0 - 1e-15));
                let s = 1.0 - r * r;
                g * (-(r * r * (a * a + b * b) - 2.0 * r * a * b) / (2.0 * s)).exp() / s.sqrt()
            }
        }
    }
}

/// Law `κ` of the share `θ` of the dividing trait given to the first child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Fragmentation {
    /// Uniform on `[low, high]`; `low = high` is an exact split.
    Uniform {
        low: f64,
        high: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    /// Piecewise-constant density on equal bins of `[0, 1]`.
    Tabulated {
        density: Vec<f64>,
    },
}

/// Mass tolerance for tabulated fragmentation densities.
pub const KAPPA_MASS_TOL: f64 = 1e-9;

impl Fragmentation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Fragmentation::Uniform { low, high } => {
                if !(0.0 <= *low && low <= high && *high <= 1.0) {
                    return Err(BranchingError::param("fragmentation", "need 0 <= low <= high <= 1"));
                }
            }
            Fragmentation::Beta { a, b } => TraitMarginal::Beta { a: *a, b: *b }.validate()?,
            Fragmentation::Tabulated { density } => {
                if density.is_empty() || density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(BranchingError::param("fragmentation", "density values must be non-negative"));
                }
                let mass = density.iter().sum::<f64>() / density.len() as f64;
                if (mass - 1.0).abs() > KAPPA_MASS_TOL {
                    return Err(BranchingError::param("fragmentation", format!("density integrates to {mass}")));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Fragmentation::Uniform { low, high } => low + (high - low) * rng.uniform(),
            Fragmentation::Beta { a, b } => TraitMarginal::Beta { a: *a, b: *b }.sample(rng),
            Fragmentation::Tabulated { density } => {
                let width = 1.0 / density.len() as f64;
                let mut target = rng.uniform();
                for (k, d) in density.iter().enumerate() {
                    let mass = d * width;
                    if target < mass {
                        return (k as f64 + target / d) * width;
                    }
                    target -= mass;
                }
                1.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_quantile_inverts_cdf() {
        let m = TraitMarginal::Triangular;
        for p in [0.01, 0.3, 0.5, 0.77, 0.99] {
            assert!((m.cdf(m.quantile(p)) - p).abs() < 1e-14);
        }
        assert_eq!(m.pdf(0.5), 2.0);
    }

    #[test]
    fn copula_density_integrates_to_one_in_y() {
        let k = TransitionKernel::GaussianCopula { marginal: TraitMarginal::Triangular, correlation: 0.35 };
        for x in [0.1, 0.5, 0.8] {
            let n = 4000;
            let mass: f64 = (0..n).map(|i| k.density(x, (i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
            assert!((mass - 1.0).abs() < 1e-3, "x={x}: {mass}");
        }
    }

    #[test]
    fn copula_chain_keeps_its_marginal() {
        let k = TransitionKernel::GaussianCopula { marginal: TraitMarginal::Beta { a: 2.0, b: 3.0 }, correlation: 0.5 };
        let mut rng = RngStream::new(3, 0);
        let mut x = 0.4;
        let mut xs = Vec::new();
        for _ in 0..20_000 {
            x = k.sample(x, &mut rng);
            xs.push(x);
        }
        let d = popscale_core::stats::ks_statistic(&xs, |y| k.stationary().cdf(y));
        assert!(d < 0.03, "{d}");
    }

    #[test]
    fn tabulated_mass_is_checked() {
        assert!(Fragmentation::Tabulated { density: vec![1.0, 1.0] }.validate().is_ok());
        assert!(Fragmentation::Tabulated { density: vec![1.0, 1.1] }.validate().is_err());
        assert!(Fragmentation::Uniform { low: 0.6, high: 0.4 }.validate().is_err());
    }

    #[test]
    fn tabulated_sampling_respects_bins() {
        let f = Fragmentation::Tabulated { density: vec![0.0, 2.0] };
        let mut rng = RngStream::new(1, 0);
        assert!((0..1000).all(|_| f.sample(&mut rng) >= 0.5));
    }
}
