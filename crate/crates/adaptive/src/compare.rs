//! Comparisons across scales: individual-based runs against the substitution sequence and
//! the canonical equation, and the substitution sequence against the canonical equation.

use popscale_core::stats::ks_statistic;
use popscale_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cead::{integrate_cead, CeadOptions, CeadTrajectory};
use crate::ecology::EcologySpec;
use crate::error::{AdaptiveError, Result};
use crate::ibm::{simulate_ibm, IbmInit, IbmOptions};
use crate::regime::{RegimeReport, ScalingRegime};
use crate::tss::{simulate_tss, tss_rates, TssLog};

/// Mean waiting times simulated before a replicate without substitution is reported censored.
const CENSOR_MEANS: f64 = 40.0;

/// First substitutions of individual-based replicates, in substitution time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstJumpStudy {
    pub tss_rate: f64,
    pub times: Vec<f64>,
    pub destinations: Vec<f64>,
    pub censored: usize,
    /// Kolmogorov–Smirnov distance of `times` to `Exp(tss_rate)`.
    pub ks: f64,
    /// Total variation between the empirical destinations and the substitution jump law.
    pub destination_tv: f64,
}

fn initial_count(eco: &EcologySpec, regime: &ScalingRegime, x0: f64) -> Result<usize> {
    Ok((eco.checked_equilibrium(x0)? * regime.k as f64).round().max(1.0) as usize)
}

/// Runs `replicates` individual-based populations from `round(n̂_{x0}·K)` residents until
/// the first substitution, on streams `(seed, r)`.
pub fn first_jump_study(
    eco: &EcologySpec,
    regime: &ScalingRegime,
    x0: f64,
    marker: usize,
    replicates: usize,
    seed: u64,
) -> Result<FirstJumpStudy> {
    let rates = tss_rates(eco, regime.sigma, x0)?;
    let tss_rate: f64 = rates.iter().map(|r| r.1).sum();
    if !(tss_rate > 0.0) {
        return Err(AdaptiveError::param("x0", "no advantageous mutation from the initial trait"));
    }
    let unit = regime.substitution_time_unit();
    let options =
        IbmOptions { horizon: CENSOR_MEANS / tss_rate * unit, stop_on_substitution: true, ..IbmOptions::until(0.0) };
    let init = IbmInit { trait_value: x0, marker, count: initial_count(eco, regime, x0)? };
    let outcomes: Vec<Option<(f64, f64)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let path = simulate_ibm(eco, regime, init, &options, &mut RngStream::new(seed, r as u64))?;
            Ok(path.substitution.map(|s| (s.time / unit, s.to)))
        })
        .collect::<Result<_>>()?;
    let observed: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
    let times: Vec<f64> = observed.iter().map(|o| o.0).collect();
    let destinations: Vec<f64> = observed.iter().map(|o| o.1).collect();
    let ks = ks_statistic(&times, |t| 1.0 - (-tss_rate * t).exp());
    let n = destinations.len().max(1) as f64;
    let destination_tv = 0.5
        * rates
            .iter()
            .map(|&(y, rate)| {
                let hits = destinations.iter().filter(|&&d| (d - y).abs() <= 1e-9 * (1.0 + y.abs())).count() as f64;
                (hits / n - rate / tss_rate).abs()
            })
            .sum::<f64>();
    Ok(FirstJumpStudy { tss_rate, censored: replicates - observed.len(), times, destinations, ks, destination_tv })
}

/// `sup_t |x(t) − cead(t)|` over the jump times of a piecewise-constant path (checked on
/// both sides) and a grid of `grid` points of `[0, horizon]`.
fn sup_distance(jumps: &[(f64, f64, f64)], start: f64, horizon: f64, cead: &CeadTrajectory, grid: usize) -> f64 {
    let value_at = |t: f64| {
        let k = jumps.partition_point(|j| j.0 <= t);
        if k == 0 {
            start
        } else {
            jumps[k - 1].2
        }
    };
    let mut sup: f64 = 0.0;
    for &(t, from, to) in jumps.iter().filter(|j| j.0 <= horizon) {
        let c = cead.trait_at(t);
        sup = sup.max((from - c).abs()).max((to - c).abs());
    }
    for i in 0..=grid {
        let t = horizon * i as f64 / grid as f64;
        sup = sup.max((value_at(t) - cead.trait_at(t)).abs());
    }
    sup
}

fn rescaled_jumps(log: &TssLog, time_scale: f64) -> Vec<(f64, f64, f64)> {
    log.jumps.iter().map(|j| (j.time * time_scale, j.from, j.to)).collect()
}

/// Sup distance between substitution-sequence paths with steps `sigma`, run for
/// `horizon/sigma²` and read at time `t/sigma²`, and the canonical equation on `[0, horizon]`.
/// Replicate `r` uses stream `(seed, r)` for every `sigma`.
pub fn tss_cead_distances(
    eco: &EcologySpec,
    sigma: f64,
    x0: f64,
    horizon: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let cead = integrate_cead(eco, x0, horizon, &CeadOptions::default())?;
    let scale = sigma * sigma;
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let log = simulate_tss(eco, sigma, x0, horizon / scale, &RngStream::new(seed, r as u64))?;
            Ok(sup_distance(&rescaled_jumps(&log, scale), x0, horizon, &cead, 1000))
        })
        .collect()
}

/// Sup distance between the dominant trait of individual-based runs, sampled `samples`
/// times and read on the canonical time scale `t/(K p σ²)`, and the canonical equation.
pub fn ibm_cead_distances(
    eco: &EcologySpec,
    regime: &ScalingRegime,
    x0: f64,
    horizon: f64,
    samples: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let cead = integrate_cead(eco, x0, horizon, &CeadOptions::default())?;
    let unit = regime.canonical_time_unit();
    let options = IbmOptions {
        horizon: horizon * unit,
        record_interval: Some(horizon * unit / samples as f64),
        ..IbmOptions::until(0.0)
    };
    let init = IbmInit { trait_value: x0, marker: 0, count: initial_count(eco, regime, x0)? };
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let path = simulate_ibm(eco, regime, init, &options, &mut RngStream::new(seed, r as u64))?;
            let mut sup: f64 = 0.0;
            for s in &path.snapshots {
                let Some(x) = s.dominant_trait() else {
                    return Ok(f64::INFINITY);
                };
                sup = sup.max((x - cead.trait_at(s.time / unit)).abs());
            }
            Ok(sup)
        })
        .collect()
}

/// Individual-based runs read on the substitution and canonical time scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub regime: RegimeReport,
    pub first_jump: FirstJumpStudy,
    pub cead_distances: Vec<f64>,
    pub mean_cead_distance: f64,
}

/// Regime report, first-substitution law against the substitution sequence, and sup
/// distance of the dominant trait to the canonical equation over `[0, t_macro]`.
pub fn multiscale_compare(
    eco: &EcologySpec,
    regime: &ScalingRegime,
    x0: f64,
    t_macro: f64,
    replicates: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    let first_jump = first_jump_study(eco, regime, x0, 0, replicates, seed)?;
    let cead_distances = ibm_cead_distances(eco, regime, x0, t_macro, 200, replicates, seed.wrapping_add(1))?;
    let mean_cead_distance = cead_distances.iter().sum::<f64>() / cead_distances.len().max(1) as f64;
    Ok(ComparisonReport { regime: regime.report(1.0), first_jump, cead_distances, mean_cead_distance })
}
