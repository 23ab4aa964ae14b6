//! Trait substitution sequence: the monomorphic jump chain of the rare-mutation limit.

use popscale_core::{gillespie_step, EventRateTable, RngStream};
use serde::{Deserialize, Serialize};

use crate::ecology::{EcologySpec, FixationCheck};
use crate::error::{AdaptiveError, Result};

/// One substitution `from → to` at `time`; `marker` is filled in by marker-aware runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TssJump {
    pub time: f64,
    pub from: f64,
    pub to: f64,
    /// Invasion fitness `f(to, from)` of the successful mutant.
    pub fitness: f64,
    pub marker: Option<usize>,
}

/// A realized pair for which "invasion implies fixation" fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationWarning {
    pub resident: f64,
    pub mutant: f64,
    pub check: FixationCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TssLog {
    pub start: f64,
    pub horizon: f64,
    pub jumps: Vec<TssJump>,
    pub warnings: Vec<FixationWarning>,
}

impl TssLog {
    /// Resident trait at time `t`.
    pub fn trait_at(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|j| j.time <= t);
        if k == 0 {
            self.start
        } else {
            self.jumps[k - 1].to
        }
    }
}

/// Rate of substitution by each mutation step from resident `x`:
/// `M(x)·b(x)·n̂_x·[f(x + sigma·k, x)]₊ / b(x + sigma·k)·m(k)`, zero for targets outside
/// the trait box.
pub fn tss_rates(eco: &EcologySpec, sigma: f64, x: f64) -> Result<Vec<(f64, f64)>> {
    let n = eco.checked_equilibrium(x)?;
    let scale = eco.mutation_modulator.eval(x) * eco.birth.eval(x) * n;
    Ok(eco
        .mutation
        .iter()
        .map(|(k, w)| {
            let y = x + sigma * k as f64;
            let f = eco.invasion_fitness(y, x);
            let rate = if eco.in_box(y) && f > 0.0 && w > 0.0 { scale * f / eco.birth.eval(y) * w } else { 0.0 };
            (y, rate)
        })
        .collect())
}

pub fn tss_total_rate(eco: &EcologySpec, sigma: f64, x: f64) -> Result<f64> {
    Ok(tss_rates(eco, sigma, x)?.iter().map(|r| r.1).sum())
}

/// Simulates the jump chain on `[0, horizon]` from the draws of `rng.substream(0)`, so that
/// marker-aware runs with the same stream reproduce the same trait jumps. The fixation
/// assumption is checked only on realized jumps.
pub fn simulate_tss(eco: &EcologySpec, sigma: f64, x0: f64, horizon: f64, rng: &RngStream) -> Result<TssLog> {
    eco.validate()?;
    if !(sigma > 0.0) {
        return Err(AdaptiveError::param("sigma", "must be positive"));
    }
    let mut jumps_rng = rng.substream(0);
    let mut log = TssLog { start: x0, horizon, jumps: Vec::new(), warnings: Vec::new() };
    let mut x = x0;
    let mut t = 0.0;
    let mut table = EventRateTable::new(Vec::new())?;
    loop {
        let rates = tss_rates(eco, sigma, x)?;
        table.refill(rates.iter().map(|r| r.1))?;
        if table.total() == 0.0 {
            break;
        }
        let (k, wait) = gillespie_step(&table, &mut jumps_rng)?;
        if t + wait > horizon {
            break;
        }
        t += wait;
        let y = rates[k].0;
        let fitness = eco.invasion_fitness(y, x);
        let check = eco.check_invasion_implies_fixation(x, y);
        if check != FixationCheck::MutantFixes {
            log.warnings.push(FixationWarning { resident: x, mutant: y, check });
        }
        log.jumps.push(TssJump { time: t, from: x, to: y, fitness, marker: None });
        x = y;
    }
    Ok(log)
}
