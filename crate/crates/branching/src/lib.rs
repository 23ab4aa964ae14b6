//! Cell-division trees with trait inheritance: simulation of incomplete genealogies, empirical
//! tree means, kernel estimators of the invariant and transition densities, and maximum
//! likelihood for a parametric division rate.

pub mod birth;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod mle;
pub mod scenarios;
pub mod simulate;
pub mod studies;
pub mod tree;

pub use birth::{BirthForm, ParametricBirthFamily};
pub use error::{BranchingError, NewtonTrace, Result};
pub use estimators::{
    estimate_nu, estimate_q, tree_mean, DensityEstimate, KernelEstimatorConfig, ResolvedConfig, SmoothingKernel,
    TransitionEstimate, MIN_SAMPLES,
};
pub use kernels::{Fragmentation, TraitMarginal, TransitionKernel};
pub use mle::{fisher_information, mle_birth_rate, MleFit};
pub use simulate::{simulate_markov_tree, simulate_tree, BranchingSpec, MarkovTreeSpec};
pub use studies::{mle_coverage_study, nu_rate_study, CoverageLevel, RateStudy, CHI2_2_95};
pub use tree::{KeepRule, LineageNode, LineageTree};
