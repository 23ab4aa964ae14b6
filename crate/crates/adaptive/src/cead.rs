//! Canonical equation of adaptive dynamics.

use serde::{Deserialize, Serialize};

use crate::ecology::EcologySpec;
use crate::error::{AdaptiveError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeadOptions {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Largest accepted step; also bounds the spacing of the stored trajectory.
    pub max_step: f64,
    /// Integration halts once `|∂₁f(x, x)|` falls to this level.
    pub singular_tolerance: f64,
}

impl Default for CeadOptions {
    fn default() -> Self {
        Self { relative_tolerance: 1e-9, absolute_tolerance: 1e-12, max_step: 1e-3, singular_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    /// The selection gradient vanished: an evolutionary singularity.
    Singularity,
    LeftTraitBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeadHalt {
    pub time: f64,
    pub reason: HaltReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeadTrajectory {
    pub times: Vec<f64>,
    pub traits: Vec<f64>,
    pub halt: Option<CeadHalt>,
}

impl CeadTrajectory {
    /// Linear interpolation; constant after the last stored time.
    pub fn trait_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.traits[0];
        }
        if k == self.times.len() {
            return *self.traits.last().expect("non-empty trajectory");
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        (1.0 - w) * self.traits[k - 1] + w * self.traits[k]
    }
}

/// `Σ_k k·[k·M(x)·n̂_x·∂₁f(x, x)]₊·m(k)`: only steps pointing up the selection gradient count.
pub fn cead_velocity(eco: &EcologySpec, x: f64) -> f64 {
    let drive = eco.mutation_modulator.eval(x) * eco.equilibrium(x) * eco.fitness_gradient(x);
    eco.mutation.iter().map(|(k, w)| k as f64 * (k as f64 * drive).max(0.0) * w).sum()
}

/// Bogacki–Shampine 3(2) integration of the canonical equation on `[0, horizon]`.
pub fn integrate_cead(eco: &EcologySpec, x0: f64, horizon: f64, options: &CeadOptions) -> Result<CeadTrajectory> {
    eco.validate()?;
    if !eco.in_box(x0) {
        return Err(AdaptiveError::param("x0", "outside the trait box"));
    }
    if !(options.max_step > 0.0 && options.relative_tolerance > 0.0) {
        return Err(AdaptiveError::param("options", "step and tolerances must be positive"));
    }
    eco.checked_equilibrium(x0)?;
    let singular = |x: f64| eco.fitness_gradient(x).abs() <= options.singular_tolerance;
    let mut out = CeadTrajectory { times: vec![0.0], traits: vec![x0], halt: None };
    if singular(x0) {
        out.halt = Some(CeadHalt { time: 0.0, reason: HaltReason::Singularity });
        return Ok(out);
    }
    let f = |x: f64| cead_velocity(eco, x);
    let (mut t, mut x) = (0.0, x0);
    let mut k1 = f(x);
    let mut h = options.max_step.min(horizon);
    while t < horizon {
        h = h.min(horizon - t).min(options.max_step);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.75 * h * k2);
        let next = x + h * (2.0 / 9.0 * k1 + 1.0 / 3.0 * k2 + 4.0 / 9.0 * k3);
        let k4 = f(next);
        let err = (h * (-5.0 / 72.0 * k1 + 1.0 / 12.0 * k2 + 1.0 / 9.0 * k3 - 0.125 * k4)).abs();
        let scale = options.absolute_tolerance + options.relative_tolerance * x.abs().max(next.abs());
        let ratio = err / scale;
        if ratio <= 1.0 {
            t += h;
            x = next;
            k1 = k4;
            out.times.push(t);
            out.traits.push(x);
            if !eco.in_box(x) {
                out.halt = Some(CeadHalt { time: t, reason: HaltReason::LeftTraitBox });
                break;
            }
            if singular(x) {
                out.halt = Some(CeadHalt { time: t, reason: HaltReason::Singularity });
                break;
            }
        }
        h *= (0.9 * ratio.max(1e-10).powf(-1.0 / 3.0)).clamp(0.2, 5.0);
    }
    Ok(out)
}
