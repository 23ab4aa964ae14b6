//! Substitution Fleming–Viot process: the trait substitution sequence with a neutral
//! marker that evolves between substitutions and hitchhikes on each successful mutant.

use popscale_core::RngStream;
use serde::{Deserialize, Serialize};

use crate::ecology::EcologySpec;
use crate::error::{AdaptiveError, Result};
use crate::markers::{evolve_marker, MarkerDistribution};
use crate::tss::{simulate_tss, TssLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSnapshot {
    pub time: f64,
    pub trait_value: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfvpPath {
    /// Trait jumps, each with the marker sampled at the substitution.
    pub log: TssLog,
    pub markers: Vec<MarkerSnapshot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfvpOptions {
    pub sigma: f64,
    pub horizon: f64,
    pub particles: usize,
    pub record_interval: f64,
}

/// Runs [`simulate_tss`] on the same stream, then evolves the marker ensemble from `δ_{u0}`
/// with the draws of `rng.substream(1)`. At each substitution one marker `U` is drawn from
/// the current ensemble and the ensemble restarts at `δ_U`.
pub fn simulate_sfvp(
    eco: &EcologySpec,
    x0: f64,
    u0: usize,
    options: &SfvpOptions,
    rng: &RngStream,
) -> Result<SfvpPath> {
    if u0 >= eco.markers.markers() {
        return Err(AdaptiveError::param("marker", "initial marker outside the marker set"));
    }
    if !(options.record_interval > 0.0) {
        return Err(AdaptiveError::param("record_interval", "must be positive"));
    }
    let mut log = simulate_tss(eco, options.sigma, x0, options.horizon, rng)?;
    let mut marker_rng = rng.substream(1);
    let markers = eco.markers.markers();
    let mut dist = MarkerDistribution::point_mass(markers, u0, options.particles);
    let mut snapshots = vec![MarkerSnapshot { time: 0.0, trait_value: x0, weights: dist.weights() }];
    let mut t = 0.0;
    let mut x = x0;
    let mut next_record = options.record_interval;
    let mut next_jump = 0;
    while t < options.horizon {
        let jump_time = log.jumps.get(next_jump).map_or(f64::INFINITY, |j| j.time);
        let target = next_record.min(jump_time).min(options.horizon);
        dist = evolve_marker(&dist, x, eco, target - t, &mut marker_rng)?;
        t = target;
        if t == jump_time {
            let u = dist.sample(&mut marker_rng);
            let jump = &mut log.jumps[next_jump];
            jump.marker = Some(u);
            x = jump.to;
            dist = MarkerDistribution::point_mass(markers, u, options.particles);
            next_jump += 1;
        }
        if t == next_record {
            snapshots.push(MarkerSnapshot { time: t, trait_value: x, weights: dist.weights() });
            next_record += options.record_interval;
        }
    }
    Ok(SfvpPath { log, markers: snapshots })
}
