//! Small-mutation limits of Lotka–Volterra systems structured by a trait.
//!
//! On a finite trait space the ε-system ([`solve_u_eps_discrete`]) is compared with its
//! limit `φ = lim ε log u`, computed two independent ways: an exact event-driven solver
//! ([`solve_phi_discrete`]) and a dynamic program over mutation paths
//! ([`variational_phi_discrete`]). Resource levels in the limit come from the unique
//! stable equilibrium on the zero set of `φ` ([`lv_equilibrium`]). A continuous trait
//! space in one or two dimensions is handled by [`solve_u_eps_continuous`].

mod continuous;
mod discrete;
mod eps_discrete;
mod error;
mod growth;
mod lv;
pub mod models;
mod phi;
mod variational;

pub use continuous::{
    phi_from_u, solve_u_eps_continuous, ContinuousHjModel, ContinuousSolution, GaussianKernel, GridBoundary,
    InitialExponent, PhiField, QuadraticFitness,
};
pub use discrete::DiscreteTraitModel;
pub use eps_discrete::{solve_u_eps_discrete, EpsSolverOptions, EpsTrajectory};
pub use error::{HjError, Result};
pub use growth::Growth;
pub use lv::{lv_equilibrium, lv_relax, LvEquilibrium};
pub use phi::{solve_phi_discrete, PhiSolution, PsiSchedule, Segment, TIE_TOL};
pub use variational::{truncated_phi, variational_phi_at, variational_phi_discrete};
