//! Adaptive dynamics across scales.
//!
//! An individual-based birth–death model with logistic competition, rare trait mutations
//! and frequent neutral marker mutations ([`simulate_ibm`]); its rare-mutation limit, the
//! trait substitution sequence ([`simulate_tss`]), with the marker carried along as a
//! Fleming–Viot particle system ([`simulate_sfvp`]); and the small-step limit, the
//! canonical equation ([`integrate_cead`]). [`compare`] runs the cross-scale checks.

pub mod cead;
pub mod compare;
pub mod ecology;
pub mod error;
pub mod ibm;
pub mod markers;
pub mod models;
pub mod regime;
pub mod sfvp;
pub mod tss;

pub use cead::{cead_velocity, integrate_cead, CeadHalt, CeadOptions, CeadTrajectory, HaltReason};
pub use compare::{
    first_jump_study, ibm_cead_distances, multiscale_compare, tss_cead_distances, ComparisonReport, FirstJumpStudy,
};
pub use ecology::{AssumptionViolation, EcologySpec, FixationCheck, MarkerGenerator, MutationLaw, TraitFunction};
pub use error::{AdaptiveError, Result};
pub use ibm::{
    default_population_cap, simulate_ibm, ClassWeight, IbmInit, IbmOptions, IbmPath, Substitution, WeightedPopulation,
};
pub use markers::{evolve_marker, MarkerDistribution, DEFAULT_PARTICLES, MIN_PARTICLES};
pub use regime::{RegimeReport, ScalingRegime, WindowCheck};
pub use sfvp::{simulate_sfvp, MarkerSnapshot, SfvpOptions, SfvpPath};
pub use tss::{simulate_tss, tss_rates, tss_total_rate, FixationWarning, TssJump, TssLog};
