//! Packaged discrete models used by the tests, the acceptance suite and the CLI.

use crate::discrete::DiscreteTraitModel;
use crate::growth::Growth;

/// Epsilon sweep shipped with every packaged model.
pub const EPSILON_SWEEP: [f64; 3] = [0.1, 0.05, 0.02];

fn single_resource(costs: Vec<Vec<f64>>, base: Vec<f64>, h: Vec<f64>) -> DiscreteTraitModel {
    let n = base.len();
    DiscreteTraitModel::new(costs, Growth::Linear { base, slopes: vec![vec![1.0]; n] }, vec![vec![1.0; n]], h)
        .expect("packaged model is valid")
        .with_epsilons(EPSILON_SWEEP.to_vec())
}

/// One logistic type.
pub fn single_type() -> DiscreteTraitModel {
    single_resource(vec![vec![0.0]], vec![1.0], vec![0.0])
}

/// Type 1 is resident at `ψ = 1`; type 0 invades at rate 0.5 from `φ = −1` and takes
/// over at `t = 2`.
pub fn two_state_invasion() -> DiscreteTraitModel {
    single_resource(vec![vec![0.0, 3.0], vec![3.0, 0.0]], vec![1.5, 1.0], vec![1.0, 0.0])
}

/// Three types on one resource: type 1 sweeps at `t = 1.2`, type 2 at `t = 1.6`. Mutation
/// costs are high enough that no displaced type reaches its mutation-fed level before
/// `t = 5`.
pub fn three_state_sweeps() -> DiscreteTraitModel {
    single_resource(
        vec![vec![0.0, 3.6, 4.4], vec![4.0, 0.0, 3.8], vec![4.2, 3.5, 0.0]],
        vec![1.0, 1.5, 2.0],
        vec![0.0, 0.6, 1.4],
    )
}

/// Three types on one resource with cheap asymmetric mutations: two successive sweeps,
/// after which the displaced types settle on mutation-fed plateaus.
pub fn three_state_chain() -> DiscreteTraitModel {
    single_resource(
        vec![vec![0.0, 0.8, 1.5], vec![0.5, 0.0, 0.9], vec![1.2, 0.7, 0.0]],
        vec![1.0, 1.6, 2.2],
        vec![0.0, 0.5, 1.2],
    )
}

/// Four types sharing two resources with symmetric consumption, so every active set has
/// a unique stable equilibrium. The two specialists coexist; the generalist can
/// displace them.
pub fn two_resource_community() -> DiscreteTraitModel {
    let kernels = vec![vec![1.0, 0.3, 0.6, 0.8], vec![0.3, 1.0, 0.6, 0.5]];
    let slopes = (0..4).map(|k| vec![kernels[0][k], kernels[1][k]]).collect();
    DiscreteTraitModel::new(
        vec![vec![0.0, 1.2, 0.6, 0.9], vec![1.0, 0.0, 0.7, 1.4], vec![0.8, 0.5, 0.0, 1.1], vec![0.6, 1.3, 0.9, 0.0]],
        Growth::Linear { base: vec![1.0, 1.0, 1.2, 0.9], slopes },
        kernels,
        vec![0.0, 0.4, 0.75, 0.6],
    )
    .expect("packaged model is valid")
    .with_epsilons(EPSILON_SWEEP.to_vec())
}

/// All packaged discrete models with their names.
pub fn packaged() -> Vec<(&'static str, DiscreteTraitModel)> {
    vec![
        ("single_type", single_type()),
        ("two_state_invasion", two_state_invasion()),
        ("three_state_sweeps", three_state_sweeps()),
        ("three_state_chain", three_state_chain()),
        ("two_resource_community", two_resource_community()),
    ]
}

/// Looks up a packaged model by name.
pub fn by_name(name: &str) -> Option<DiscreteTraitModel> {
    packaged().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
}

use crate::continuous::{ContinuousHjModel, GaussianKernel, GridBoundary, InitialExponent, QuadraticFitness};

/// One-dimensional model on `[−1.5, 1.5]` with fitness optimum at 0.4 and a population
/// initially concentrated at −0.6.
pub fn continuous_quadratic_1d(epsilon: f64) -> ContinuousHjModel {
    ContinuousHjModel {
        dimension: 1,
        lower: -1.5,
        upper: 1.5,
        cells: 600,
        boundary: GridBoundary::Neumann,
        epsilon,
        fitness: QuadraticFitness { peak: 1.0, curvature: 1.0, optimum: vec![0.4], slopes: vec![1.0] },
        kernels: vec![GaussianKernel::flat(1.0, 1)],
        initial: InitialExponent::Quadratic { center: vec![-0.6], curvature: 1.0 },
        psi_bounds: (0.5, 1.0),
        burn_in: 1.0,
    }
}

/// Two-dimensional analogue of [`continuous_quadratic_1d`] with a non-flat kernel.
pub fn continuous_quadratic_2d(epsilon: f64) -> ContinuousHjModel {
    ContinuousHjModel {
        dimension: 2,
        lower: -1.5,
        upper: 1.5,
        cells: 120,
        boundary: GridBoundary::Neumann,
        epsilon,
        fitness: QuadraticFitness { peak: 1.0, curvature: 1.0, optimum: vec![0.4, 0.2], slopes: vec![1.0] },
        kernels: vec![GaussianKernel { base: 1.0, amplitude: 0.5, center: vec![0.0, 0.0], width: 1.0 }],
        initial: InitialExponent::Quadratic { center: vec![-0.6, -0.4], curvature: 1.0 },
        psi_bounds: (0.5, 1.5),
        burn_in: 1.0,
    }
}

/// Periodic model whose growth vanishes identically: the flat kernel makes `ψ` the total
/// mass, which diffusion conserves, and `peak` cancels it.
pub fn continuous_heat(epsilon: f64, cells: usize) -> ContinuousHjModel {
    ContinuousHjModel {
        dimension: 1,
        lower: 0.0,
        upper: 1.0,
        cells,
        boundary: GridBoundary::Periodic,
        epsilon,
        fitness: QuadraticFitness { peak: 1.0, curvature: 0.0, optimum: vec![0.0], slopes: vec![1.0] },
        kernels: vec![GaussianKernel::flat(1.0, 1)],
        initial: InitialExponent::CosineProfile { amplitude: 0.5, modes: 1 },
        psi_bounds: (0.5, 2.0),
        burn_in: 0.0,
    }
}
