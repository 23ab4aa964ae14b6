//! Shared kernel for the popscale labs.
//!
//! Every stochastic lab draws from [`RngStream`]s, advances continuous-time
//! Markov chains through [`gillespie_step`], integrates trait diffusions with
//! [`sde_step`] and samples state-dependent clocks with
//! [`inhomogeneous_poisson`]. The [`stats`] module gathers the test
//! statistics (Kolmogorov–Smirnov, log-log slopes, Wasserstein distances)
//! used by the verification suites.

mod error;
mod fenwick;
mod gillespie;
mod poisson;
mod rng;
mod sde;
pub mod stats;

pub use error::KernelError;
pub use fenwick::Fenwick;
pub use gillespie::{gillespie_step, EventRateTable};
pub use poisson::{first_event, inhomogeneous_poisson};
pub use rng::RngStream;
pub use sde::{sde_step, Boundary, DiffusionSpec, ScalarFn, ABSORPTION_TOL};

pub type Result<T> = std::result::Result<T, KernelError>;
