//! Simulation of trait-structured genealogies.

use popscale_core::{first_event, sde_step, DiffusionSpec, RngStream};

use crate::birth::ParametricBirthFamily;
use crate::error::{BranchingError, Result};
use crate::kernels::{Fragmentation, TransitionKernel};
use crate::tree::{KeepRule, LineageNode, LineageTree};

const DIVISION_HORIZON: f64 = 1e6;

/// Cells whose trait follows a diffusion and divides at rate `B_ϑ(X)`, splitting the
/// trait as `θ·y` and `(1−θ)·y` with `θ ~ κ`.
#[derive(Debug, Clone)]
pub struct BranchingSpec {
    pub flow: DiffusionSpec,
    pub birth: ParametricBirthFamily,
    pub theta: Vec<f64>,
    /// Upper bound on the division rate, used for thinning; exceeding it is an error.
    pub birth_bound: f64,
    pub fragmentation: Fragmentation,
    pub generations: u32,
    pub keep: KeepRule,
    pub root_trait: f64,
    /// Euler–Maruyama step of the trait path.
    pub path_dt: f64,
}

impl BranchingSpec {
    pub fn validate(&self) -> Result<()> {
        self.keep.validate()?;
        self.fragmentation.validate()?;
        self.birth.validate()?;
        if self.theta.len() != self.birth.dimension() {
            return Err(BranchingError::param("theta", "length must match the birth family"));
        }
        if !(self.path_dt > 0.0) || !(self.birth_bound > 0.0) {
            return Err(BranchingError::param("path_dt", "step and rate bound must be positive"));
        }
        if self.flow.domain.0 < 0.0 {
            return Err(BranchingError::param("flow.domain", "traits must be non-negative"));
        }
        Ok(())
    }
}

/// Genealogy whose traits at birth form a Markov chain along lineages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovTreeSpec {
    pub kernel: TransitionKernel,
    pub generations: u32,
    pub keep: KeepRule,
    pub root_trait: f64,
}

/// Trait path on a uniform grid, extended on demand and read by linear interpolation.
struct PathBuilder<'a> {
    flow: &'a DiffusionSpec,
    dt: f64,
    values: Vec<f64>,
    rng: RngStream,
    failure: Option<BranchingError>,
}

impl PathBuilder<'_> {
    fn value_at(&mut self, t: f64) -> f64 {
        while (self.values.len() - 1) as f64 * self.dt < t {
            let last = *self.values.last().expect("path starts with the birth trait");
            match sde_step(last, self.flow, self.dt, &mut self.rng) {
                Ok(x) => self.values.push(x),
                Err(e) => {
                    self.failure.get_or_insert(e.into());
                    return last;
                }
            }
        }
        let pos = t / self.dt;
        let k = (pos.floor() as usize).min(self.values.len() - 1);
        if k + 1 >= self.values.len() {
            return self.values[k];
        }
        let w = pos - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }
}

/// Simulates one life from birth trait `x0`: returns the lifetime and the sampled path
/// ending at the division trait.
fn simulate_life(spec: &BranchingSpec, x0: f64, rng: &RngStream) -> Result<(f64, Vec<f64>)> {
    let mut path =
        PathBuilder { flow: &spec.flow, dt: spec.path_dt, values: vec![x0], rng: rng.substream(0), failure: None };
    let mut clock = rng.substream(1);
    let tau = first_event(
        |t| spec.birth.rate(&spec.theta, path.value_at(t)),
        DIVISION_HORIZON,
        spec.birth_bound,
        &mut clock,
    )?
    .ok_or_else(|| BranchingError::Domain(format!("no division before t = {DIVISION_HORIZON}")))?;
    if let Some(e) = path.failure.take() {
        return Err(e);
    }
    let end = path.value_at(tau);
    let k = (tau / spec.path_dt).floor() as usize;
    path.values.truncate(k + 1);
    path.values.push(end);
    Ok((tau, path.values))
}

fn keep_children(keep: KeepRule, rng: &mut RngStream) -> [bool; 2] {
    match keep {
        KeepRule::Full => [true, true],
        KeepRule::MotherMachine => {
            let first = rng.bernoulli(0.5);
            [first, !first]
        }
        KeepRule::Bernoulli { p } => [rng.bernoulli(p), rng.bernoulli(p)],
    }
}

/// Grows the kept genealogy generation by generation. `life` fills in the node's own
/// life and returns the traits at birth of its two children.
fn grow(
    generations: u32,
    keep: KeepRule,
    root_trait: f64,
    growth_exponent: f64,
    path_dt: f64,
    rng: &mut RngStream,
    mut life: impl FnMut(&mut LineageNode, &RngStream) -> Result<[f64; 2]>,
) -> Result<LineageTree> {
    keep.validate()?;
    let mut nodes = vec![LineageNode {
        id: 0,
        parent: None,
        generation: 0,
        trait_at_birth: root_trait,
        birth_time: 0.0,
        lifetime: None,
        path: Vec::new(),
    }];
    let mut current = vec![0usize];
    for generation in 0..=generations {
        let mut offspring: Vec<(usize, f64, f64, bool)> = Vec::new();
        for &id in &current {
            let node_rng = rng.substream(id as u64);
            let children = life(&mut nodes[id], &node_rng)?;
            if generation == generations {
                continue;
            }
            let birth = nodes[id].birth_time + nodes[id].lifetime.unwrap_or(1.0);
            let kept = keep_children(keep, rng);
            for (child, keep_it) in children.into_iter().zip(kept) {
                offspring.push((id, birth, child, keep_it));
            }
        }
        if generation == generations {
            break;
        }
        if !offspring.is_empty() && offspring.iter().all(|o| !o.3) {
            let pick = rng.index(offspring.len());
            offspring[pick].3 = true;
        }
        current.clear();
        for (parent, birth_time, trait_at_birth, _) in offspring.into_iter().filter(|o| o.3) {
            let id = nodes.len();
            nodes.push(LineageNode {
                id,
                parent: Some(parent),
                generation: generation + 1,
                trait_at_birth,
                birth_time,
                lifetime: None,
                path: Vec::new(),
            });
            current.push(id);
        }
    }
    Ok(LineageTree { nodes, growth_exponent, path_dt })
}

/// Simulates the kept genealogy up to generation `spec.generations`, including the
/// lives of the last generation. Pruned subtrees are never simulated.
pub fn simulate_tree(spec: &BranchingSpec, rng: &mut RngStream) -> Result<LineageTree> {
    spec.validate()?;
    grow(
        spec.generations,
        spec.keep,
        spec.root_trait,
        spec.keep.growth_exponent(),
        spec.path_dt,
        rng,
        |node, node_rng| {
            let (tau, path) = simulate_life(spec, node.trait_at_birth, node_rng)?;
            let y = *path.last().expect("non-empty path");
            node.lifetime = Some(tau);
            node.path = path;
            let theta = spec.fragmentation.sample(&mut node_rng.substream(2));
            Ok([theta * y, (1.0 - theta) * y])
        },
    )
}

/// Simulates a genealogy whose traits at birth follow `spec.kernel` from parent to child;
/// birth times are generation numbers.
pub fn simulate_markov_tree(spec: &MarkovTreeSpec, rng: &mut RngStream) -> Result<LineageTree> {
    spec.kernel.validate()?;
    grow(spec.generations, spec.keep, spec.root_trait, spec.keep.growth_exponent(), 0.0, rng, |node, node_rng| {
        let mut r = node_rng.clone();
        let x = node.trait_at_birth;
        Ok([spec.kernel.sample(x, &mut r), spec.kernel.sample(x, &mut r)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::BirthForm;
    use popscale_core::Boundary;

    fn halving_spec(generations: u32) -> BranchingSpec {
        BranchingSpec {
            flow: DiffusionSpec::new(|_| 0.0, |_| 0.0, (0.0, 10.0), Boundary::None).unwrap(),
            birth: ParametricBirthFamily::new(BirthForm::Constant, vec![0.5], vec![2.0]).unwrap(),
            theta: vec![1.0],
            birth_bound: 1.0,
            fragmentation: Fragmentation::Uniform { low: 0.5, high: 0.5 },
            generations,
            keep: KeepRule::Full,
            root_trait: 1.0,
            path_dt: 0.01,
        }
    }

    #[test]
    fn zero_generations_is_the_root() {
        let tree = simulate_tree(&halving_spec(0), &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(tree.nodes[0].lifetime.is_some());
    }

    #[test]
    fn exact_halving_without_noise() {
        let tree = simulate_tree(&halving_spec(5), &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(tree.len(), 63);
        for n in &tree.nodes {
            assert_eq!(n.trait_at_birth, (-(n.generation as f64)).exp2());
        }
        tree.validate().unwrap();
    }

    #[test]
    fn birth_times_accumulate_lifetimes() {
        let tree = simulate_tree(&halving_spec(3), &mut RngStream::new(3, 0)).unwrap();
        for n in tree.nodes.iter().skip(1) {
            let p = &tree.nodes[n.parent.unwrap()];
            assert_eq!(n.birth_time, p.birth_time + p.lifetime.unwrap());
        }
    }

    #[test]
    fn rate_above_bound_is_a_hard_error() {
        let mut spec = halving_spec(2);
        spec.theta = vec![1.5];
        assert!(matches!(
            simulate_tree(&spec, &mut RngStream::new(4, 0)),
            Err(BranchingError::Kernel(popscale_core::KernelError::RateBoundViolated { .. }))
        ));
    }

    #[test]
    fn mother_machine_keeps_one_lineage() {
        let mut spec = halving_spec(20);
        spec.keep = KeepRule::MotherMachine;
        let tree = simulate_tree(&spec, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(tree.generation_sizes(), vec![1; 21]);
    }

    #[test]
    fn bernoulli_rule_never_empties_a_generation() {
        let spec = MarkovTreeSpec {
            kernel: TransitionKernel::Independent { marginal: crate::kernels::TraitMarginal::Triangular },
            generations: 30,
            keep: KeepRule::Bernoulli { p: 0.4 },
            root_trait: 0.5,
        };
        let tree = simulate_markov_tree(&spec, &mut RngStream::new(6, 0)).unwrap();
        assert!(tree.generation_sizes().iter().all(|&s| s >= 1));
    }

    #[test]
    fn simulation_is_reproducible() {
        let mut spec = halving_spec(4);
        spec.flow = DiffusionSpec::new(|x| 0.5 - x, |_| 0.3, (0.0, 2.0), Boundary::Reflect).unwrap();
        let a = simulate_tree(&spec, &mut RngStream::new(9, 1)).unwrap();
        let b = simulate_tree(&spec, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }
}
