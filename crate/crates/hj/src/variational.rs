//! Dynamic-programming solutions of the path optimization problem.
//!
//! These share no code path with the closed-form solver in [`crate::phi`]: the value is
//! computed by Bellman recursion over a time grid that contains every resource break.

use crate::discrete::DiscreteTraitModel;
use crate::error::{HjError, Result};
use crate::lv::lv_equilibrium;
use crate::phi::{snap_zero_set, PhiSolution, PsiSchedule, Segment, TIE_TOL};

const MAX_JUMPS: usize = 10_000;

fn grid_step(model: &DiscreteTraitModel, max_rate: f64) -> f64 {
    let min_cost = model.min_cost();
    if min_cost.is_finite() && max_rate > 0.0 {
        0.01f64.min(min_cost / (4.0 * max_rate))
    } else {
        0.01
    }
}

fn merged_grid(horizon: f64, dt: f64, breaks: impl Iterator<Item = f64>) -> Vec<f64> {
    let n = (horizon / dt).ceil() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| (k as f64 * dt).min(horizon)).collect();
    grid.extend(breaks.filter(|&b| b > 0.0 && b < horizon));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    grid
}

/// Value at time `t` of the best path started from each type.
///
/// The path `y` starts at `y(0) = i`, collects `∫₀ᵗ R(y(u), ψ(t − u)) du`, pays the cost of
/// every mutation it performs and ends with `−h(y(t))`. Paths are tracked by the number of
/// mutations used. Any path's value lies within `max h + 2t·max|R|` of the stay path, so
/// paths with more than `⌈(max h + 2t·max|R|)/min cost⌉` mutations are dominated.
pub fn variational_phi_discrete(model: &DiscreteTraitModel, schedule: &PsiSchedule, t: f64) -> Vec<f64> {
    let h = model.normalized_exponent();
    let n = model.types();
    if t <= 0.0 {
        return h.iter().map(|x| -x).collect();
    }
    let max_rate =
        schedule.levels.iter().flat_map(|psi| (0..n).map(move |k| model.rate(k, psi).abs())).fold(0.0, f64::max);
    let min_cost = model.min_cost();
    let max_h = h.iter().copied().fold(0.0, f64::max);
    let jumps = if min_cost.is_finite() {
        (((max_h + 2.0 * t * max_rate) / min_cost).ceil() as usize).min(MAX_JUMPS)
    } else {
        0
    };
    // Backward time u runs from t down to 0; forward resource time is t − u.
    let grid = merged_grid(t, grid_step(model, max_rate), schedule.breaks.iter().map(|b| t - b));
    let mut value: Vec<Vec<f64>> = vec![h.iter().map(|x| -x).collect(); jumps + 1];
    let relax = |value: &mut Vec<Vec<f64>>| {
        for used in (0..jumps).rev() {
            for k in 0..n {
                for m in 0..n {
                    let c = model.costs[k][m];
                    if m != k && c.is_finite() {
                        let cand = value[used + 1][m] - c;
                        if cand > value[used][k] {
                            value[used][k] = cand;
                        }
                    }
                }
            }
        }
    };
    relax(&mut value);
    for w in grid.windows(2).rev() {
        let (ua, ub) = (w[0], w[1]);
        let psi = schedule.at(t - 0.5 * (ua + ub));
        for k in 0..n {
            let gain = model.rate(k, psi) * (ub - ua);
            for row in value.iter_mut() {
                row[k] += gain;
            }
        }
        relax(&mut value);
    }
    value.swap_remove(0)
}

/// [`variational_phi_discrete`] evaluated at a single type.
pub fn variational_phi_at(model: &DiscreteTraitModel, schedule: &PsiSchedule, t: f64, i: usize) -> f64 {
    variational_phi_discrete(model, schedule, t)[i]
}

/// Limiting dynamics restricted to lineages whose running value stays above `−floor`.
///
/// A forward recursion tracks, for every type, the best running value
/// `−h(y(0)) + ∫R − Σ costs` over admissible paths ending there; a path is discarded as
/// soon as that value drops to `−floor`. The resource vector is recomputed from the zero
/// set of the truncated values, with catastrophes located exactly inside each step.
/// Types without an admissible path hold `−∞`. `floor = ∞` gives the untruncated dynamics.
pub fn truncated_phi(model: &DiscreteTraitModel, horizon: f64, floor: f64, steps: usize) -> Result<PhiSolution> {
    if !(floor > 0.0) {
        return Err(HjError::param("floor", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
        return Err(HjError::param("horizon", "need a positive horizon and at least one step"));
    }
    let n = model.types();
    let admissible = |v: f64| v > -floor;
    let relax = |values: &mut [f64]| {
        for _ in 0..n {
            let mut changed = false;
            for k in 0..n {
                for m in 0..n {
                    let c = model.costs[k][m];
                    if m == k || !c.is_finite() {
                        continue;
                    }
                    let cand = values[m] - c;
                    if admissible(cand) && cand > values[k] {
                        values[k] = cand;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    };
    let mut values: Vec<f64> =
        model.normalized_exponent().iter().map(|h| if admissible(-h) { -h } else { f64::NEG_INFINITY }).collect();
    let output_dt = horizon / steps as f64;
    let mut times = vec![0.0];
    let mut phi = vec![values.clone()];

    relax(&mut values);
    let mut zero_set = snap_zero_set(&mut values);
    let mut eq = lv_equilibrium(model, &zero_set)?;
    let mut rates = model.rates(&eq.resources);
    let mut psi = vec![eq.resources.clone()];
    let max_rate = rates.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let substeps = (output_dt / grid_step(model, max_rate)).ceil().max(1.0) as usize;
    let inner_dt = output_dt / substeps as f64;

    let mut segments = Vec::new();
    let mut catastrophe_times = Vec::new();
    let mut seg_start = 0.0;
    let mut seg_values = values.clone();
    let mut now = 0.0;
    for out in 1..=steps {
        let target = out as f64 * output_dt;
        for sub in 1..=substeps {
            let step_end = if sub == substeps { target } else { (out - 1) as f64 * output_dt + sub as f64 * inner_dt };
            while now < step_end {
                let remaining = step_end - now;
                let hit = values
                    .iter()
                    .zip(&rates)
                    .filter(|(v, r)| v.is_finite() && **r > 0.0 && **v < -TIE_TOL)
                    .map(|(v, r)| -v / r)
                    .fold(f64::INFINITY, f64::min);
                let advance = hit.min(remaining);
                for (v, r) in values.iter_mut().zip(&rates) {
                    if v.is_finite() {
                        *v += r * advance;
                        if !admissible(*v) {
                            *v = f64::NEG_INFINITY;
                        }
                    }
                }
                now = if hit < remaining { now + hit } else { step_end };
                relax(&mut values);
                if hit < remaining {
                    segments.push(Segment {
                        start: seg_start,
                        end: now,
                        zero_set: zero_set.clone(),
                        active_set: eq.support.clone(),
                        resources: eq.resources.clone(),
                        rates: rates.clone(),
                        start_values: seg_values.clone(),
                    });
                    catastrophe_times.push(now);
                    zero_set = snap_zero_set(&mut values);
                    eq = lv_equilibrium(model, &zero_set)?;
                    rates = model.rates(&eq.resources);
                    seg_start = now;
                    seg_values = values.clone();
                }
            }
        }
        times.push(target);
        phi.push(values.clone());
        psi.push(eq.resources.clone());
    }
    segments.push(Segment {
        start: seg_start,
        end: horizon,
        zero_set,
        active_set: eq.support,
        resources: eq.resources,
        rates,
        start_values: seg_values,
    });
    Ok(PhiSolution::sampled(times, phi, psi, catastrophe_times, segments))
}
