//! Neutral marker dynamics at a fixed resident trait: a Moran particle system whose
//! empirical law approximates the Fleming–Viot process with mutation drift `b(x)·A` and
//! resampling variance `2b(x)/n̂_x`.

use popscale_core::{gillespie_step, EventRateTable, RngStream};
use serde::{Deserialize, Serialize};

use crate::ecology::EcologySpec;
use crate::error::{AdaptiveError, Result};

/// Smallest particle ensemble accepted by [`evolve_marker`].
pub const MIN_PARTICLES: usize = 100;

/// Default particle ensemble size.
pub const DEFAULT_PARTICLES: usize = 1000;

/// Empirical marker law of an exchangeable particle ensemble, stored as counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerDistribution {
    pub counts: Vec<usize>,
}

impl MarkerDistribution {
    pub fn point_mass(markers: usize, marker: usize, particles: usize) -> Self {
        let mut counts = vec![0; markers];
        counts[marker] = particles;
        Self { counts }
    }

    /// Rounds `weights·particles` by largest remainders so that the counts sum to `particles`.
    pub fn from_weights(weights: &[f64], particles: usize) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(AdaptiveError::param("weights", "must be a probability vector"));
        }
        let raw: Vec<f64> = weights.iter().map(|w| w * particles as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
        let missing = particles - counts.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        Ok(Self { counts })
    }

    pub fn particles(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        let n = self.particles() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Marker of a uniformly chosen particle.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        pick(&self.counts, rng.index(self.particles()))
    }

    pub fn is_fixed(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }
}

fn pick(counts: &[usize], mut target: usize) -> usize {
    for (u, &c) in counts.iter().enumerate() {
        if target < c {
            return u;
        }
        target -= c;
    }
    unreachable!("target below the total count")
}

/// Advances the ensemble by `dt` at resident trait `x`. Each particle mutates at rate
/// `b(x)·(−A[u][u])`; each ordered pair of particles `(i, j)` resamples, `i` copying `j`,
/// at rate `b(x)/n̂_x`, which gives `⟨F|φ⟩` the quadratic variation `2b(x)/n̂_x·Var_F(φ)`.
pub fn evolve_marker(
    dist: &MarkerDistribution,
    x: f64,
    eco: &EcologySpec,
    dt: f64,
    rng: &mut RngStream,
) -> Result<MarkerDistribution> {
    let n = dist.particles();
    if n < MIN_PARTICLES {
        return Err(AdaptiveError::param("particles", format!("need at least {MIN_PARTICLES}, got {n}")));
    }
    if dist.counts.len() != eco.markers.markers() {
        return Err(AdaptiveError::param("counts", "length must match the marker set"));
    }
    let b = eco.birth.eval(x);
    let pair_rate = b / eco.checked_equilibrium(x)?;
    let resampling = pair_rate * (n * (n - 1)) as f64;
    let mut counts = dist.counts.clone();
    let mut t = 0.0;
    let mut table = EventRateTable::new(Vec::new())?;
    loop {
        let mutation: f64 = counts.iter().enumerate().map(|(u, &c)| b * c as f64 * eco.markers.exit_rate(u)).sum();
        // Resampling between equal markers leaves the counts unchanged; skip it once fixed.
        let fixed = counts.iter().filter(|&&c| c > 0).count() <= 1;
        table.refill([mutation, if fixed { 0.0 } else { resampling }])?;
        if table.total() == 0.0 {
            break;
        }
        let (event, wait) = gillespie_step(&table, rng)?;
        t += wait;
        if t > dt {
            break;
        }
        if event == 0 {
            let mut target = rng.uniform() * mutation;
            let mut u = counts.len() - 1;
            for (v, &c) in counts.iter().enumerate() {
                let r = b * c as f64 * eco.markers.exit_rate(v);
                if target < r {
                    u = v;
                    break;
                }
                target -= r;
            }
            let v = eco.markers.jump(u, rng.uniform());
            counts[u] -= 1;
            counts[v] += 1;
        } else {
            let victim = pick(&counts, rng.index(n));
            counts[victim] -= 1;
            let parent = pick(&counts, rng.index(n - 1));
            counts[parent] += 1;
        }
    }
    Ok(MarkerDistribution { counts })
}
