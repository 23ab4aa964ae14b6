//! Nested Moran process: Moran dynamics of cooperators (C) and defectors
//! (D) inside each of `m` groups of size `n`, and Moran dynamics of the
//! groups themselves.
//!
//! Groups are exchangeable, so the simulator tracks the number of groups at
//! each level `k = 0..=n` (the number of C individuals) instead of labelled
//! groups. Propensities live in Fenwick trees; each event touches two
//! levels.

use popscale_core::{gillespie_step, EventRateTable, Fenwick, KernelError, RngStream};
use serde::{Deserialize, Serialize};

use crate::{GridMeasure, GroupSelError, PenalizedWfModel, Penalty, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedMoranState {
    /// Number of C individuals in each group.
    pub group_counts: Vec<u32>,
    pub group_size: u32,
    /// Individual replication rate `w_I` (C at `w_I`, D at `w_I (1 + s)`).
    pub individual_rate: f64,
    /// Group replication scale `w_G`.
    pub group_rate: f64,
    pub selection: f64,
    pub penalty: Penalty,
}

impl NestedMoranState {
    pub fn validate(&self) -> Result<()> {
        if self.group_counts.is_empty() {
            return Err(GroupSelError::param("group_counts", "need at least one group"));
        }
        if self.group_size == 0 {
            return Err(GroupSelError::param("group_size", "must be at least 1"));
        }
        if let Some(c) = self.group_counts.iter().find(|&&c| c > self.group_size) {
            return Err(GroupSelError::param(
                "group_counts",
                format!("count {c} exceeds group size {}", self.group_size),
            ));
        }
        for (name, v) in
            [("individual_rate", self.individual_rate), ("group_rate", self.group_rate), ("selection", self.selection)]
        {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(GroupSelError::param(name, format!("must be finite and nonnegative, got {v}")));
            }
        }
        self.penalty.validate()?;
        for k in 0..=self.group_size {
            let g = 1.0 + self.penalty.eval(k as f64 / self.group_size as f64);
            if g < 0.0 {
                return Err(GroupSelError::param(
                    "r",
                    format!("group replication rate 1 + r({k}/n) = {g} is negative"),
                ));
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.group_counts.len()
    }

    /// Individual-based model whose limit is `model`: `w_I = n sigma^2 / 2`,
    /// `s_IBM = 2 s / (sigma^2 n)`, `w_G = 1`. Initial levels are drawn
    /// independently from `mu0` and rounded to the nearest level.
    pub fn from_limit(
        model: &PenalizedWfModel,
        groups: usize,
        group_size: u32,
        mu0: &GridMeasure,
        rng: &mut RngStream,
    ) -> Result<Self> {
        model.validate()?;
        let n = group_size as f64;
        let omega = 0.5 * model.sigma * model.sigma;
        let state = Self {
            group_counts: (0..groups).map(|_| (mu0.sample(rng) * n).round().clamp(0.0, n) as u32).collect(),
            group_size,
            individual_rate: omega * n,
            group_rate: 1.0,
            selection: model.selection / (omega * n),
            penalty: model.penalty.clone(),
        };
        state.validate()?;
        Ok(state)
    }

    /// Number of groups at each level `0..=n`.
    pub fn level_histogram(&self) -> Vec<u32> {
        let mut h = vec![0; self.group_size as usize + 1];
        for &c in &self.group_counts {
            h[c as usize] += 1;
        }
        h
    }

    /// Group-event propensities `w_G m v(i/n) v(j/n) (1 + r(j/n))` for a
    /// group at level `i` replaced by a copy of a group at level `j`.
    pub fn group_propensities(&self) -> Vec<Vec<f64>> {
        let h = self.level_histogram();
        let m = self.groups() as f64;
        let n = self.group_size as f64;
        let v: Vec<f64> = h.iter().map(|&c| c as f64 / m).collect();
        (0..h.len())
            .map(|i| {
                (0..h.len())
                    .map(|j| self.group_rate * m * v[i] * v[j] * (1.0 + self.penalty.eval(j as f64 / n)))
                    .collect()
            })
            .collect()
    }

    /// Individual-event propensities `(down, up)` at each level:
    /// `w_I m v(k/n) k (1 - k/n) (1 + s)` and `w_I m v(k/n) k (1 - k/n)`.
    pub fn individual_propensities(&self) -> Vec<(f64, f64)> {
        let n = self.group_size as f64;
        self.level_histogram()
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let base = self.individual_rate * c as f64 * k as f64 * (1.0 - k as f64 / n);
                (base * (1.0 + self.selection), base)
            })
            .collect()
    }
}

/// Histogram of group levels at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoranSnapshot {
    pub time: f64,
    pub levels: Vec<u32>,
}

impl MoranSnapshot {
    pub fn groups(&self) -> u32 {
        self.levels.iter().sum()
    }

    /// CDF of the empirical measure of the C proportions.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = (self.levels.len() - 1) as f64;
        let m = self.groups() as f64;
        let top = (x * n + 1e-9).floor();
        if top < 0.0 {
            return 0.0;
        }
        let top = (top as usize).min(self.levels.len() - 1);
        self.levels[..=top].iter().sum::<u32>() as f64 / m
    }

    pub fn mean(&self) -> f64 {
        let n = (self.levels.len() - 1) as f64;
        let m = self.groups() as f64;
        self.levels.iter().enumerate().map(|(k, &c)| k as f64 / n * c as f64).sum::<f64>() / m
    }

    /// Wasserstein-1 distance to a limit measure.
    pub fn wasserstein1(&self, mu: &GridMeasure) -> f64 {
        let points = 20 * mu.grid_size().max(self.levels.len());
        crate::measure::wasserstein1_between(|x| self.cdf(x), |x| mu.cdf(x), points)
    }
}

/// Exact event-driven simulator of the nested Moran process.
#[derive(Clone, Debug)]
pub struct NestedMoranSim {
    n: u32,
    levels: Vec<u32>,
    individual: Fenwick,
    parents: Fenwick,
    victims: Fenwick,
    level_factor: Vec<f64>,
    group_factor: Vec<f64>,
    down_prob: f64,
    time: f64,
    events: u64,
}

impl NestedMoranSim {
    pub fn new(state: &NestedMoranState) -> Result<Self> {
        state.validate()?;
        let n = state.group_size;
        let levels = state.level_histogram();
        let level_factor: Vec<f64> = (0..=n)
            .map(|k| {
                let k = k as f64;
                state.individual_rate * k * (1.0 - k / n as f64) * (2.0 + state.selection)
            })
            .collect();
        let group_factor: Vec<f64> =
            (0..=n).map(|k| state.group_rate * (1.0 + state.penalty.eval(k as f64 / n as f64))).collect();
        let mut sim = Self {
            n,
            individual: Fenwick::new(levels.len()),
            parents: Fenwick::new(levels.len()),
            victims: Fenwick::new(levels.len()),
            levels,
            level_factor,
            group_factor,
            down_prob: (1.0 + state.selection) / (2.0 + state.selection),
            time: 0.0,
            events: 0,
        };
        for k in 0..sim.levels.len() {
            sim.refresh_level(k);
        }
        Ok(sim)
    }

    fn refresh_level(&mut self, k: usize) {
        let c = self.levels[k] as f64;
        self.individual.set(k, c * self.level_factor[k]);
        self.parents.set(k, c * self.group_factor[k]);
        self.victims.set(k, c);
    }

    fn move_group(&mut self, from: usize, to: usize) {
        if from == to {
            return;
        }
        self.levels[from] -= 1;
        self.levels[to] += 1;
        self.refresh_level(from);
        self.refresh_level(to);
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn snapshot(&self) -> MoranSnapshot {
        MoranSnapshot { time: self.time, levels: self.levels.clone() }
    }

    /// Performs the next event if it happens before `until`; otherwise moves
    /// the clock to `until` and returns `false`.
    pub fn step_until(&mut self, until: f64, rng: &mut RngStream) -> Result<bool> {
        if self.events.is_multiple_of(65_536) {
            self.individual.refresh();
            self.parents.refresh();
            self.victims.refresh();
        }
        let table = EventRateTable::new(vec![self.individual.total().max(0.0), self.parents.total().max(0.0)])?;
        let (kind, wait) = match gillespie_step(&table, rng) {
            Ok(ev) => ev,
            Err(KernelError::FrozenState) => {
                self.time = until;
                return Ok(false);
            }
            Err(e) => return Err(e.into()),
        };
        if self.time + wait > until {
            self.time = until;
            return Ok(false);
        }
        self.time += wait;
        self.events += 1;
        if kind == 0 {
            let k = self.individual.sample(rng);
            let to = if rng.uniform() < self.down_prob { k - 1 } else { k + 1 };
            self.move_group(k, to);
        } else {
            let parent = self.parents.sample(rng);
            let victim = self.victims.sample(rng);
            self.move_group(victim, parent);
        }
        Ok(true)
    }

    pub fn run_until(&mut self, until: f64, rng: &mut RngStream) -> Result<()> {
        while self.step_until(until, rng)? {}
        Ok(())
    }

    pub fn group_size(&self) -> u32 {
        self.n
    }
}

/// Simulates the process and records the level histogram at each of
/// `times` (sorted, within `[0, horizon]`).
pub fn simulate_nested_moran(
    state: &NestedMoranState,
    times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<MoranSnapshot>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(GroupSelError::param("times", "snapshot times must be sorted and nonnegative"));
    }
    let mut sim = NestedMoranSim::new(state)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        sim.run_until(t, rng)?;
        out.push(sim.snapshot());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(counts: Vec<u32>, n: u32, s: f64, r: Penalty) -> NestedMoranState {
        NestedMoranState {
            group_counts: counts,
            group_size: n,
            individual_rate: 1.0,
            group_rate: 1.0,
            selection: s,
            penalty: r,
        }
    }

    #[test]
    fn pure_cooperators_stay_put() {
        let st = state(vec![10; 5], 10, 0.0, Penalty::Constant { value: 0.0 });
        let mut rng = RngStream::new(1, 0);
        let snaps = simulate_nested_moran(&st, &[1.0, 10.0, 100.0], &mut rng).unwrap();
        for s in snaps {
            assert_eq!(s.levels[10], 5);
        }
    }

    #[test]
    fn group_propensities_match_formula() {
        let st = state(vec![1, 2], 2, 0.0, Penalty::Constant { value: 0.0 });
        let table = st.group_propensities();
        for (i, row) in table.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let want = if i >= 1 && j >= 1 { 2.0 * 0.5 * 0.5 } else { 0.0 };
                assert_eq!(v, want, "({i},{j})");
            }
        }
    }

    #[test]
    fn single_group_neutral_fixation_is_one_over_n() {
        let n = 10;
        let st = state(vec![1], n, 0.0, Penalty::Constant { value: 0.0 });
        let reps = 20_000;
        let fixed = (0..reps)
            .filter(|&r| {
                let mut rng = RngStream::new(5, r);
                let mut sim = NestedMoranSim::new(&st).unwrap();
                while sim.levels()[0] == 0 && sim.levels()[n as usize] == 0 {
                    assert!(sim.step_until(f64::INFINITY, &mut rng).unwrap());
                }
                sim.levels()[n as usize] == 1
            })
            .count();
        let p = fixed as f64 / reps as f64;
        let se = (0.1f64 * 0.9 / reps as f64).sqrt();
        assert!((p - 0.1).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn group_count_is_constant() {
        let st = state(vec![0, 3, 5, 8, 10, 2], 10, 0.4, Penalty::Hump { height: 2.0 });
        let mut rng = RngStream::new(2, 0);
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        for s in simulate_nested_moran(&st, &times, &mut rng).unwrap() {
            assert_eq!(s.groups(), 6);
        }
    }

    #[test]
    fn negative_group_rate_rejected() {
        let st = state(vec![1], 4, 0.0, Penalty::Constant { value: -2.0 });
        assert!(st.validate().is_err());
    }
}
