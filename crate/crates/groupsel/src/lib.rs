//! Two-level selection lab.
//!
//! Groups of fixed size `n` contain cooperators (C) and defectors (D).
//! Inside a group D out-replicates C by a factor `1 + s`; groups replicate at
//! rate `w_G (1 + r(x))` where `x` is their fraction of C. In the large
//! population limit the distribution `mu_t` of `x` across groups solves a
//! nonlinear equation whose solution is a Wright–Fisher diffusion
//! penalized by `r` (Feynman–Kac). This crate provides
//!
//! * an exact simulator of the individual-based nested Moran process,
//! * a positivity-preserving grid solver for the limit equation, with the
//!   pure states held as atoms,
//! * the Monte Carlo Feynman–Kac representation,
//! * quasi-stationary analysis (extinction rates, survival capacity, spectral
//!   gap) and the resulting regime classification and threshold scans,
//! * the truncation experiment on the grid solution.

mod error;
mod feynman_kac;
mod limit;
pub mod measure;
mod model;
mod moran;
mod operator;
mod qsd;
mod regime;
pub mod scenarios;

pub use error::{GroupSelError, Result};
pub use feynman_kac::{
    absorption_probabilities, calibrate_wf_dt, exit_split_mc, feynman_kac_estimate, ExitSplit, FkEstimate, MIN_ESS,
};
pub use limit::{
    conditioned_tv_decay, default_dt, evolve_limit_measure, truncation_experiment, LimitStepper, TruncationOutcome,
};
pub use measure::{tv_distance, GridMeasure, MASS_TOL};
pub use model::{PenalizedWfModel, Penalty};
pub use moran::{simulate_nested_moran, MoranSnapshot, NestedMoranSim, NestedMoranState};
pub use operator::FvOperator;
pub use qsd::{compute_qsd, QsdResult, MIN_QSD_GRID};
pub use regime::{
    classify_regime, persistence_margin, rate_tolerance, scan_sigma, scan_threshold, ExitSplitConfig, MixtureWeights,
    Regime, RegimeReport, SigmaScan, ThresholdScan,
};
