//! Demographic functions of the trait, mutation laws and invasion fitness.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AdaptiveError, Result};

/// Real function of a trait (or of a trait difference, for competition kernels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum TraitFunction {
    Constant {
        value: f64,
    },
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `peak − curvature·(x − optimum)²`.
    Quadratic {
        peak: f64,
        curvature: f64,
        optimum: f64,
    },
    /// `amplitude·exp(−x²/(2·width²))`.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// Linear interpolation of `values` on an even grid of `[lower, upper]`, constant beyond.
    Tabulated {
        lower: f64,
        upper: f64,
        values: Vec<f64>,
    },
}

impl TraitFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Affine { intercept, slope } => intercept + slope * x,
            Self::Quadratic { peak, curvature, optimum } => peak - curvature * (x - optimum).powi(2),
            Self::Gaussian { amplitude, width } => amplitude * (-0.5 * (x / width).powi(2)).exp(),
            Self::Tabulated { lower, upper, values } => {
                let n = values.len() - 1;
                if n == 0 {
                    return values[0];
                }
                let pos = ((x - lower) / (upper - lower) * n as f64).clamp(0.0, n as f64);
                let k = (pos.floor() as usize).min(n - 1);
                let w = pos - k as f64;
                (1.0 - w) * values[k] + w * values[k + 1]
            }
        }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let ok = match self {
            Self::Constant { value } => value.is_finite(),
            Self::Affine { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            Self::Quadratic { peak, curvature, optimum } => {
                peak.is_finite() && curvature.is_finite() && optimum.is_finite()
            }
            Self::Gaussian { amplitude, width } => amplitude.is_finite() && *width > 0.0 && width.is_finite(),
            Self::Tabulated { lower, upper, values } => {
                lower < upper && !values.is_empty() && values.iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(AdaptiveError::param(name, "non-finite or degenerate coefficients"))
        }
    }
}

/// Mutation steps `k` with probabilities `m(k)`; the same for every parent trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationLaw {
    pub steps: Vec<i32>,
    pub weights: Vec<f64>,
}

impl MutationLaw {
    pub fn symmetric_unit() -> Self {
        Self { steps: vec![-1, 1], weights: vec![0.5, 0.5] }
    }

    pub fn single(step: i32) -> Self {
        Self { steps: vec![step], weights: vec![1.0] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() || self.steps.len() != self.weights.len() {
            return Err(AdaptiveError::param("mutation", "steps and weights must be non-empty and of equal length"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(AdaptiveError::param("mutation", "weights must be a probability vector"));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.steps.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn sample(&self, u: f64) -> i32 {
        let mut acc = 0.0;
        for (k, w) in self.iter() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        *self.steps.last().expect("validated non-empty")
    }
}

/// Generator matrix of the neutral marker on a finite marker set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerGenerator {
    pub rates: Vec<Vec<f64>>,
}

impl MarkerGenerator {
    /// Zero generator on `markers` states.
    pub fn frozen(markers: usize) -> Self {
        Self { rates: vec![vec![0.0; markers]; markers] }
    }

    /// Two markers swapping at rate `a` in each direction.
    pub fn symmetric_pair(a: f64) -> Self {
        Self { rates: vec![vec![-a, a], vec![a, -a]] }
    }

    pub fn markers(&self) -> usize {
        self.rates.len()
    }

    pub fn exit_rate(&self, u: usize) -> f64 {
        -self.rates[u][u]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rates.len();
        if n == 0 {
            return Err(AdaptiveError::param("markers", "need at least one marker"));
        }
        for (i, row) in self.rates.iter().enumerate() {
            if row.len() != n {
                return Err(AdaptiveError::param("markers", "generator must be square"));
            }
            if row.iter().enumerate().any(|(j, r)| !r.is_finite() || (i != j && *r < 0.0)) {
                return Err(AdaptiveError::param("markers", "off-diagonal rates must be finite and non-negative"));
            }
            if row.iter().sum::<f64>().abs() > 1e-9 * (1.0 + row[i].abs()) {
                return Err(AdaptiveError::param("markers", "generator rows must sum to zero"));
            }
        }
        Ok(())
    }

    /// Target of a marker jump from `u`, drawn with probability `rates[u][v] / exit_rate(u)`.
    pub fn jump(&self, u: usize, uniform: f64) -> usize {
        let exit = self.exit_rate(u);
        let mut acc = 0.0;
        let mut last = u;
        for (v, &r) in self.rates[u].iter().enumerate() {
            if v != u && r > 0.0 {
                acc += r / exit;
                last = v;
                if uniform < acc {
                    return v;
                }
            }
        }
        last
    }

    /// Stationary law `π` with `πA = 0`, as the least-squares solution with `Σπ = 1`.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.markers();
        let mut m = DMatrix::zeros(n + 1, n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self.rates[i][j];
            }
            m[(n, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let normal = m.transpose() * &m;
        let pi = normal.lu().solve(&(m.transpose() * rhs)).unwrap_or_else(|| DVector::from_element(n, 1.0 / n as f64));
        pi.iter().copied().collect()
    }
}

/// Outcome of the two-sided comparison of equilibria behind "invasion implies fixation".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixationCheck {
    /// The mutant cannot grow in the resident population.
    MutantFails,
    /// The mutant invades and the resident cannot grow back.
    MutantFixes,
    /// Neither strict inequality holds; the pair may coexist.
    CoexistenceRisk,
}

/// Standing assumption that failed at a sampled trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionViolation {
    pub assumption: String,
    pub at: f64,
    pub value: f64,
}

/// Logistic birth–death ecology with trait-dependent rates and finite neutral markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcologySpec {
    pub birth: TraitFunction,
    pub death: TraitFunction,
    /// Sensitivity `η` to competition.
    pub sensitivity: TraitFunction,
    /// Competition kernel `C` of the trait difference `x − y`.
    pub competition: TraitFunction,
    pub mutation: MutationLaw,
    /// Multiplies the per-birth trait mutation probability.
    pub mutation_modulator: TraitFunction,
    pub markers: MarkerGenerator,
    pub trait_box: (f64, f64),
    /// `x ↦ ∂₁f(x, x)` when known in closed form; centered differences otherwise.
    #[serde(default)]
    pub fitness_gradient: Option<TraitFunction>,
}

/// Sampling resolution for assumption checks over the trait box.
const BOX_SAMPLES: usize = 201;

impl EcologySpec {
    pub fn validate(&self) -> Result<()> {
        self.birth.validate("birth")?;
        self.death.validate("death")?;
        self.sensitivity.validate("sensitivity")?;
        self.competition.validate("competition")?;
        self.mutation_modulator.validate("mutation_modulator")?;
        if let Some(g) = &self.fitness_gradient {
            g.validate("fitness_gradient")?;
        }
        self.mutation.validate()?;
        self.markers.validate()?;
        let (lo, hi) = self.trait_box;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(AdaptiveError::param("trait_box", "need a finite interval with lower < upper"));
        }
        for x in self.box_grid() {
            if self.birth.eval(x) < 0.0 || self.death.eval(x) < 0.0 || self.sensitivity.eval(x) < 0.0 {
                return Err(AdaptiveError::param("rates", format!("negative birth, death or sensitivity at {x}")));
            }
            if self.mutation_modulator.eval(x) < 0.0 {
                return Err(AdaptiveError::param("mutation_modulator", format!("negative at {x}")));
            }
        }
        Ok(())
    }

    fn box_grid(&self) -> impl Iterator<Item = f64> {
        let (lo, hi) = self.trait_box;
        (0..BOX_SAMPLES).map(move |i| lo + (hi - lo) * i as f64 / (BOX_SAMPLES - 1) as f64)
    }

    pub fn in_box(&self, x: f64) -> bool {
        let tol = 1e-9 * (self.trait_box.1 - self.trait_box.0);
        x >= self.trait_box.0 - tol && x <= self.trait_box.1 + tol
    }

    /// Checks `ηC ≥ η_ > 0` and `b > d` on a grid of the trait box.
    pub fn standing_assumptions(&self) -> Vec<AssumptionViolation> {
        let mut out = Vec::new();
        let grid: Vec<f64> = self.box_grid().collect();
        let lower = grid
            .iter()
            .flat_map(|&x| grid.iter().map(move |&y| (x, y)))
            .map(|(x, y)| (x, self.sensitivity.eval(x) * self.competition.eval(x - y)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((x, v)) = lower {
            if !(v > 0.0) {
                out.push(AssumptionViolation { assumption: "competition bounded below".into(), at: x, value: v });
            }
        }
        for &x in &grid {
            let margin = self.birth.eval(x) - self.death.eval(x);
            if !(margin > 0.0) {
                out.push(AssumptionViolation { assumption: "birth exceeds death".into(), at: x, value: margin });
            }
        }
        out
    }

    /// Monomorphic equilibrium density `n̂_x = (b − d)/(η C(0))`.
    pub fn equilibrium(&self, x: f64) -> f64 {
        (self.birth.eval(x) - self.death.eval(x)) / (self.sensitivity.eval(x) * self.competition.eval(0.0))
    }

    pub fn checked_equilibrium(&self, x: f64) -> Result<f64> {
        let n = self.equilibrium(x);
        if n > 0.0 && n.is_finite() {
            Ok(n)
        } else {
            Err(AdaptiveError::NoEquilibrium { trait_value: x, reason: format!("n̂ = {n}") })
        }
    }

    /// Growth rate `f(y, x) = b(y) − d(y) − η(y)C(y − x)n̂_x` of a rare mutant `y` in a
    /// resident population at equilibrium; meaningful when `n̂_x > 0`.
    pub fn invasion_fitness(&self, y: f64, x: f64) -> f64 {
        self.birth.eval(y)
            - self.death.eval(y)
            - self.sensitivity.eval(y) * self.competition.eval(y - x) * self.equilibrium(x)
    }

    /// `∂₁f(x, x)`: the registered closed form, else a centered difference with step
    /// `1e-5` of the box diameter.
    pub fn fitness_gradient(&self, x: f64) -> f64 {
        match &self.fitness_gradient {
            Some(g) => g.eval(x),
            None => {
                let h = 1e-5 * (self.trait_box.1 - self.trait_box.0);
                (self.invasion_fitness(x + h, x) - self.invasion_fitness(x - h, x)) / (2.0 * h)
            }
        }
    }

    pub fn check_invasion_implies_fixation(&self, x: f64, y: f64) -> FixationCheck {
        let growth = |z: f64| self.birth.eval(z) - self.death.eval(z);
        let mutant_level = growth(y) / (self.sensitivity.eval(y) * self.competition.eval(y - x));
        let resident_level = growth(x) / (self.sensitivity.eval(x) * self.competition.eval(x - y));
        let (n_x, n_y) = (self.equilibrium(x), self.equilibrium(y));
        if mutant_level < n_x {
            FixationCheck::MutantFails
        } else if mutant_level > n_x && resident_level < n_y {
            FixationCheck::MutantFixes
        } else {
            FixationCheck::CoexistenceRisk
        }
    }
}
