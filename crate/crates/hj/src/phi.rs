//! Exact solution of the limiting dynamics on a finite trait space.
//!
//! While the resource vector is frozen, `φ(t0 + τ, i) = max_m [φ̃(t0, m) − D(i, m) + R(m)·τ]`
//! where `φ̃` is the mutation closure of `φ(t0, ·)` and `D` the cheapest mutation chain.
//! The resource vector only changes at catastrophes, when a type with positive growth
//! reaches 0; those instants are located in closed form.

use serde::{Deserialize, Serialize};

use crate::discrete::DiscreteTraitModel;
use crate::error::{HjError, Result};
use crate::lv::lv_equilibrium;

/// Absolute tolerance for membership in the zero set `{φ = 0}`.
pub const TIE_TOL: f64 = 1e-9;
const MAX_SEGMENTS: usize = 100_000;

/// Right-continuous piecewise-constant resource vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSchedule {
    /// Start time of each piece; the first is 0.
    pub breaks: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
}

impl PsiSchedule {
    pub fn constant(level: Vec<f64>) -> Self {
        Self { breaks: vec![0.0], levels: vec![level] }
    }

    pub fn new(breaks: Vec<f64>, levels: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != levels.len() || breaks[0] != 0.0 {
            return Err(HjError::param("schedule", "needs matching breaks and levels starting at 0"));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HjError::param("schedule", "breaks must increase strictly"));
        }
        Ok(Self { breaks, levels })
    }

    pub fn at(&self, t: f64) -> &[f64] {
        let idx = self.breaks.partition_point(|&b| b <= t).saturating_sub(1);
        &self.levels[idx]
    }
}

/// One interval of frozen resources between catastrophes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// Types with `φ = 0` at the start of the segment.
    pub zero_set: Vec<usize>,
    /// Types with positive equilibrium mass.
    pub active_set: Vec<usize>,
    pub resources: Vec<f64>,
    pub rates: Vec<f64>,
    /// Mutation-closed values at the segment start.
    pub start_values: Vec<f64>,
}

/// Sampled solution of the limiting dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSolution {
    pub times: Vec<f64>,
    /// `phi[n][k]`; `-∞` marks types without an admissible path.
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub catastrophe_times: Vec<f64>,
    pub segments: Vec<Segment>,
    /// Chain costs used by [`PhiSolution::phi_at`]; empty for sampled-only solutions.
    #[serde(skip)]
    chain_costs: Vec<Vec<f64>>,
    #[serde(skip)]
    initial: Vec<f64>,
}

impl PhiSolution {
    pub fn schedule(&self) -> PsiSchedule {
        PsiSchedule {
            breaks: self.segments.iter().map(|s| s.start).collect(),
            levels: self.segments.iter().map(|s| s.resources.clone()).collect(),
        }
    }

    /// Exact value at any `t` in the horizon; `None` for solutions only known on the grid.
    pub fn phi_at(&self, t: f64) -> Option<Vec<f64>> {
        if self.chain_costs.is_empty() {
            return None;
        }
        if t <= 0.0 {
            return Some(self.initial.clone());
        }
        let idx = self.segments.partition_point(|s| s.start <= t).saturating_sub(1);
        let seg = &self.segments[idx];
        Some(propagate(&seg.start_values, &seg.rates, &self.chain_costs, t - seg.start))
    }

    pub fn psi_at(&self, t: f64) -> Vec<f64> {
        let idx = self.segments.partition_point(|s| s.start <= t).saturating_sub(1);
        self.segments[idx].resources.clone()
    }

    /// Largest `|max_k φ(t, k)|` over the stored times.
    pub fn normalization_error(&self) -> f64 {
        self.phi.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max).abs()).fold(0.0, f64::max)
    }

    /// Largest difference quotient of `φ` between consecutive stored times.
    pub fn lipschitz_estimate(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 1..self.times.len() {
            let dt = self.times[n] - self.times[n - 1];
            for (a, b) in self.phi[n].iter().zip(&self.phi[n - 1]) {
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs() / dt);
                }
            }
        }
        worst
    }

    pub(crate) fn sampled(
        times: Vec<f64>,
        phi: Vec<Vec<f64>>,
        psi: Vec<Vec<f64>>,
        catastrophe_times: Vec<f64>,
        segments: Vec<Segment>,
    ) -> Self {
        Self { times, phi, psi, catastrophe_times, segments, chain_costs: Vec::new(), initial: Vec::new() }
    }
}

/// `max_m [φ̃(m) − D(i, m)]`, the values after instantaneous mutation chains.
pub(crate) fn mutation_closure(values: &[f64], chain: &[Vec<f64>]) -> Vec<f64> {
    (0..values.len())
        .map(|i| values.iter().enumerate().map(|(m, v)| v - chain[i][m]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

fn propagate(closed: &[f64], rates: &[f64], chain: &[Vec<f64>], tau: f64) -> Vec<f64> {
    (0..closed.len())
        .map(|i| {
            closed
                .iter()
                .zip(rates)
                .enumerate()
                .map(|(m, (v, r))| v - chain[i][m] + r * tau)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Snaps near-zero entries to exactly 0 and returns the zero set.
pub(crate) fn snap_zero_set(values: &mut [f64]) -> Vec<usize> {
    let mut zero = Vec::new();
    for (k, v) in values.iter_mut().enumerate() {
        if *v >= -TIE_TOL {
            *v = 0.0;
            zero.push(k);
        }
    }
    zero
}

/// Solves the limiting dynamics on `[0, horizon]`, sampled at `steps + 1` uniform times.
pub fn solve_phi_discrete(model: &DiscreteTraitModel, horizon: f64, steps: usize) -> Result<PhiSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
        return Err(HjError::param("horizon", "need a positive horizon and at least one step"));
    }
    let chain = model.chain_costs();
    let initial: Vec<f64> = model.normalized_exponent().iter().map(|h| -h).collect();
    let mut segments = Vec::new();
    let mut catastrophe_times = Vec::new();
    let mut values = initial.clone();
    let mut start = 0.0;
    loop {
        if segments.len() >= MAX_SEGMENTS {
            return Err(HjError::param("horizon", "too many catastrophes"));
        }
        let mut closed = mutation_closure(&values, &chain);
        let zero_set = snap_zero_set(&mut closed);
        let eq = lv_equilibrium(model, &zero_set)?;
        let rates = model.rates(&eq.resources);
        let wait = closed
            .iter()
            .zip(&rates)
            .filter(|(v, r)| **r > 0.0 && **v < -TIE_TOL)
            .map(|(v, r)| -v / r)
            .fold(f64::INFINITY, f64::min);
        let end = (start + wait).min(horizon);
        let next = propagate(&closed, &rates, &chain, end - start);
        segments.push(Segment {
            start,
            end,
            zero_set,
            active_set: eq.support,
            resources: eq.resources,
            rates,
            start_values: closed,
        });
        if start + wait >= horizon {
            break;
        }
        catastrophe_times.push(end);
        values = next;
        start = end;
    }
    let mut solution = PhiSolution {
        times: Vec::new(),
        phi: Vec::new(),
        psi: Vec::new(),
        catastrophe_times,
        segments,
        chain_costs: chain,
        initial,
    };
    for n in 0..=steps {
        let t = horizon * n as f64 / steps as f64;
        solution.phi.push(solution.phi_at(t).expect("exact solution"));
        solution.psi.push(solution.psi_at(t));
        solution.times.push(t);
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::Growth;

    fn invasion(h0: f64) -> DiscreteTraitModel {
        DiscreteTraitModel::new(
            vec![vec![0.0, 10.0], vec![10.0, 0.0]],
            Growth::Linear { base: vec![1.5, 1.0], slopes: vec![vec![1.0], vec![1.0]] },
            vec![vec![1.0, 1.0]],
            vec![h0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn single_type_stays_at_zero() {
        let model = DiscreteTraitModel::new(
            vec![vec![0.0]],
            Growth::Linear { base: vec![1.0], slopes: vec![vec![1.0]] },
            vec![vec![1.0]],
            vec![3.0],
        )
        .unwrap();
        let sol = solve_phi_discrete(&model, 2.0, 10).unwrap();
        assert!(sol.phi.iter().all(|row| row[0] == 0.0));
        assert!(sol.catastrophe_times.is_empty());
        assert_eq!(sol.segments.len(), 1);
    }

    #[test]
    fn invader_grows_linearly_until_catastrophe() {
        // Resident 1 holds ψ = 1, so the invader grows at g = 0.5 from −h0.
        let h0 = 0.8;
        let sol = solve_phi_discrete(&invasion(h0), 3.0, 300).unwrap();
        assert_eq!(sol.catastrophe_times.len(), 1);
        assert!((sol.catastrophe_times[0] - h0 / 0.5).abs() < 1e-12);
        for (t, row) in sol.times.iter().zip(&sol.phi) {
            if *t < h0 / 0.5 {
                assert!((row[0] - (-h0 + 0.5 * t)).abs() < 1e-12);
            }
        }
        // After the sweep the former resident declines at R(1, 1.5) = −0.5.
        let late = sol.phi_at(3.0).unwrap();
        assert!((late[1] - (-0.5 * (3.0 - 1.6))).abs() < 1e-12);
        assert_eq!(late[0], 0.0);
    }

    #[test]
    fn psi_is_right_continuous_at_catastrophes() {
        let sol = solve_phi_discrete(&invasion(0.8), 3.0, 30).unwrap();
        let tc = sol.catastrophe_times[0];
        assert!((sol.psi_at(tc)[0] - 1.5).abs() < 1e-12);
        assert!((sol.psi_at(tc - 1e-9)[0] - 1.0).abs() < 1e-12);
        assert!(sol.normalization_error() < 1e-12);
    }

    #[test]
    fn schedule_lookup_is_right_continuous() {
        let s = PsiSchedule::new(vec![0.0, 1.0], vec![vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(s.at(0.999), &[1.0]);
        assert_eq!(s.at(1.0), &[2.0]);
        assert!(PsiSchedule::new(vec![0.0, 0.0], vec![vec![1.0], vec![2.0]]).is_err());
    }
}
