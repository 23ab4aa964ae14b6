//! Exact simulation of the individual-based model with rare trait and marker mutations.
//!
//! Individuals sharing a trait and a marker are exchangeable, so the state is the count
//! of each (trait, marker) class. Traits live on the lattice `x0 + sigma·ℤ` and are keyed
//! by their integer level, which keeps class identity exact.

use popscale_core::{gillespie_step, EventRateTable, RngStream};
use serde::{Deserialize, Serialize};

use crate::ecology::EcologySpec;
use crate::error::{AdaptiveError, Result};
use crate::regime::ScalingRegime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbmInit {
    pub trait_value: f64,
    pub marker: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbmOptions {
    pub horizon: f64,
    /// Spacing of recorded snapshots; `None` records only the initial and final states.
    pub record_interval: Option<f64>,
    /// Stop once a trait other than the initial one holds the most individuals.
    pub stop_on_substitution: bool,
    /// Stop once the population exceeds this size.
    pub stop_above: Option<usize>,
    /// Hard limit on the population size; default `100·K·max n̂` over the trait box.
    pub population_cap: Option<usize>,
}

impl IbmOptions {
    pub fn until(horizon: f64) -> Self {
        Self { horizon, record_interval: None, stop_on_substitution: false, stop_above: None, population_cap: None }
    }
}

/// Weight `count/K` of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeight {
    pub trait_value: f64,
    pub marker: usize,
    pub weight: f64,
}

/// Weighted population at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPopulation {
    pub time: f64,
    pub classes: Vec<ClassWeight>,
}

impl WeightedPopulation {
    pub fn mass(&self) -> f64 {
        self.classes.iter().map(|c| c.weight).sum()
    }

    /// Trait holding the largest weight; `None` for an empty population.
    pub fn dominant_trait(&self) -> Option<f64> {
        let mut by_trait: Vec<(f64, f64)> = Vec::new();
        for c in &self.classes {
            match by_trait.iter_mut().find(|(x, _)| *x == c.trait_value) {
                Some(entry) => entry.1 += c.weight,
                None => by_trait.push((c.trait_value, c.weight)),
            }
        }
        by_trait.into_iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(x, _)| x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub time: f64,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbmPath {
    pub snapshots: Vec<WeightedPopulation>,
    /// First time a trait other than the initial one became the most numerous.
    pub substitution: Option<Substitution>,
    pub extinction_time: Option<f64>,
    pub end_time: f64,
    pub events: u64,
    /// Time average of the total weight `N/K` over `[0, end_time]`.
    pub mean_mass: f64,
}

struct Class {
    level: i64,
    marker: usize,
    count: usize,
    birth: f64,
    death: f64,
    sensitivity: f64,
    mutation: f64,
    /// `Σ_j C(x_self − x_j)·n_j`.
    pressure: f64,
    /// `C(x_self − x_j)` for every class `j`, in class order.
    kernel: Vec<f64>,
}

struct Population<'a> {
    eco: &'a EcologySpec,
    x0: f64,
    sigma: f64,
    classes: Vec<Class>,
    /// Count per trait level.
    levels: Vec<(i64, usize)>,
    total: usize,
}

impl Population<'_> {
    fn trait_of(&self, level: i64) -> f64 {
        self.x0 + self.sigma * level as f64
    }

    fn class_index(&mut self, level: i64, marker: usize) -> usize {
        if let Some(i) = self.classes.iter().position(|c| c.level == level && c.marker == marker) {
            return i;
        }
        let x = self.trait_of(level);
        let kernel: Vec<f64> =
            self.classes.iter().map(|c| self.eco.competition.eval(x - self.trait_of(c.level))).collect();
        let pressure = kernel.iter().zip(&self.classes).map(|(k, c)| k * c.count as f64).sum();
        for c in &mut self.classes {
            let back = self.eco.competition.eval(self.x0 + self.sigma * c.level as f64 - x);
            c.kernel.push(back);
        }
        let mut kernel = kernel;
        kernel.push(self.eco.competition.eval(0.0));
        self.classes.push(Class {
            level,
            marker,
            count: 0,
            birth: self.eco.birth.eval(x),
            death: self.eco.death.eval(x),
            sensitivity: self.eco.sensitivity.eval(x),
            mutation: self.eco.mutation_modulator.eval(x),
            pressure,
            kernel,
        });
        self.classes.len() - 1
    }

    fn change(&mut self, i: usize, delta: isize) {
        let c = &mut self.classes[i];
        c.count = c.count.checked_add_signed(delta).expect("count stays non-negative");
        let level = c.level;
        let d = delta as f64;
        for j in 0..self.classes.len() {
            let k = self.classes[j].kernel[i];
            self.classes[j].pressure += k * d;
        }
        self.total = self.total.checked_add_signed(delta).expect("total stays non-negative");
        match self.levels.iter_mut().find(|(l, _)| *l == level) {
            Some(entry) => entry.1 = entry.1.checked_add_signed(delta).expect("level count stays non-negative"),
            None => self.levels.push((level, delta as usize)),
        }
        if self.classes[i].count == 0 {
            self.remove(i);
        }
    }

    fn remove(&mut self, i: usize) {
        self.classes.swap_remove(i);
        for c in &mut self.classes {
            c.kernel.swap_remove(i);
        }
        self.levels.retain(|&(_, n)| n > 0);
    }

    fn dominant_level(&self) -> Option<i64> {
        self.levels.iter().max_by_key(|&&(l, n)| (n, std::cmp::Reverse(l))).map(|&(l, _)| l)
    }

    fn snapshot(&self, time: f64, k: f64) -> WeightedPopulation {
        let mut classes: Vec<ClassWeight> = self
            .classes
            .iter()
            .map(|c| ClassWeight { trait_value: self.trait_of(c.level), marker: c.marker, weight: c.count as f64 / k })
            .collect();
        classes.sort_by(|a, b| a.trait_value.total_cmp(&b.trait_value).then(a.marker.cmp(&b.marker)));
        WeightedPopulation { time, classes }
    }
}

/// Default population cap `100·K·max n̂` over a grid of the trait box.
pub fn default_population_cap(eco: &EcologySpec, k: u64) -> usize {
    let (lo, hi) = eco.trait_box;
    let peak = (0..=200)
        .map(|i| eco.equilibrium(lo + (hi - lo) * i as f64 / 200.0))
        .filter(|n| n.is_finite())
        .fold(1.0, f64::max);
    (100.0 * k as f64 * peak).min(1e12) as usize
}

/// Gillespie simulation: each individual with trait `x` gives birth at rate `b(x)` and
/// dies at rate `d(x) + η(x)/K·Σ_j C(x − x_j)`. A birth carries a trait mutation with
/// probability `p·M(x)` (step `sigma·k`, `k ~ m`; steps leaving the trait box are
/// suppressed) and, independently, a marker mutation with probability `q`.
pub fn simulate_ibm(
    eco: &EcologySpec,
    regime: &ScalingRegime,
    init: IbmInit,
    options: &IbmOptions,
    rng: &mut RngStream,
) -> Result<IbmPath> {
    eco.validate()?;
    regime.validate()?;
    if init.marker >= eco.markers.markers() {
        return Err(AdaptiveError::param("marker", "initial marker outside the marker set"));
    }
    if !eco.in_box(init.trait_value) {
        return Err(AdaptiveError::param("trait_value", "initial trait outside the trait box"));
    }
    if !(options.horizon >= 0.0) {
        return Err(AdaptiveError::param("horizon", "must be non-negative"));
    }
    let marker_scale = regime.marker_jump_scale(&eco.markers)?;
    let cap = options.population_cap.unwrap_or_else(|| default_population_cap(eco, regime.k));
    let k = regime.k as f64;
    let mut pop = Population {
        eco,
        x0: init.trait_value,
        sigma: regime.sigma,
        classes: Vec::new(),
        levels: Vec::new(),
        total: 0,
    };
    if init.count > 0 {
        let i = pop.class_index(0, init.marker);
        pop.change(i, init.count as isize);
    }
    let mut snapshots = vec![pop.snapshot(0.0, k)];
    let mut next_record = options.record_interval.filter(|d| *d > 0.0);
    let mut t = 0.0;
    let mut events = 0u64;
    let mut occupation = 0.0;
    let mut substitution = None;
    let mut extinction_time = None;
    let mut dominant = pop.dominant_level();
    let mut table = EventRateTable::new(Vec::new())?;
    let mut rates = Vec::new();
    loop {
        if pop.total == 0 {
            extinction_time = Some(t);
            break;
        }
        if options.stop_above.is_some_and(|n| pop.total > n) {
            break;
        }
        if pop.total > cap {
            return Err(AdaptiveError::PopulationCap { time: t, size: pop.total, cap });
        }
        rates.clear();
        for c in &pop.classes {
            let n = c.count as f64;
            rates.push(c.birth * n);
            rates.push((c.death + c.sensitivity * c.pressure / k) * n);
        }
        table.refill(rates.iter().copied())?;
        let (event, wait) = gillespie_step(&table, rng)?;
        let t_next = (t + wait).min(options.horizon);
        if let Some(dt) = next_record.as_mut() {
            let interval = options.record_interval.expect("set with next_record");
            while *dt <= t_next {
                snapshots.push(pop.snapshot(*dt, k));
                *dt += interval;
            }
        }
        occupation += (t_next - t) * pop.total as f64 / k;
        if t + wait > options.horizon {
            t = options.horizon;
            break;
        }
        t += wait;
        events += 1;
        let i = event / 2;
        if event % 2 == 0 {
            let parent = &pop.classes[i];
            let (mut level, mut marker) = (parent.level, parent.marker);
            if regime.trait_mutation > 0.0 && rng.uniform() < regime.trait_mutation * parent.mutation {
                let step = eco.mutation.sample(rng.uniform()) as i64;
                if eco.in_box(pop.trait_of(level + step)) {
                    level += step;
                }
            }
            if regime.marker_mutation > 0.0 && rng.uniform() < regime.marker_mutation {
                let exit = marker_scale * eco.markers.exit_rate(marker);
                let u = rng.uniform();
                if u < exit {
                    marker = eco.markers.jump(marker, u / exit);
                }
            }
            let child = pop.class_index(level, marker);
            pop.change(child, 1);
        } else {
            pop.change(i, -1);
        }
        if substitution.is_none() {
            let now = match pop.levels.as_slice() {
                [(level, _)] => Some(*level),
                _ => pop.dominant_level(),
            };
            if now != dominant {
                if let (Some(from), Some(to)) = (dominant, now) {
                    if from == 0 && substitution.is_none() {
                        substitution = Some(Substitution { time: t, from: pop.trait_of(from), to: pop.trait_of(to) });
                        if options.stop_on_substitution {
                            break;
                        }
                    }
                }
                dominant = now;
            }
        }
    }
    if snapshots.last().is_none_or(|s| s.time < t) {
        snapshots.push(pop.snapshot(t, k));
    }
    Ok(IbmPath {
        snapshots,
        substitution,
        extinction_time,
        end_time: t,
        events,
        mean_mass: if t > 0.0 { occupation / t } else { pop.total as f64 / k },
    })
}
