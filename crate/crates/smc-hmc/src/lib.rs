//! Unadjusted Hamiltonian Monte Carlo with stratified Monte Carlo (sMC) time
//! integration.
//!
//! The sMC integrator replaces the force term of a velocity Verlet step with a
//! force evaluated at a uniformly random offset inside each time stratum. One
//! gradient evaluation per step gives an unbiased estimate of the stratum
//! average force, which lifts the strong accuracy order of the integrator to
//! 3/2 while keeping almost-sure contractivity for strongly convex targets.
//!
//! The crate ships:
//!
//! * deterministic splittable random streams (`randomness`),
//! * the target potential family with curvature constants (`potentials`),
//! * sMC, Verlet, and randomized two-stage integrators plus exact Gaussian
//!   flows (`integrators`),
//! * uHMC, exact HMC, Metropolis-adjusted, and duration-randomized samplers
//!   with tuning rules (`samplers`),
//! * synchronous couplings and contraction-rate diagnostics (`coupling`),
//! * Wasserstein estimators and small statistical helpers (`stats`),
//! * CSV-emitting experiment drivers behind the `smc-hmc` binary
//!   (`experiments`).
//!
//! Monte Carlo trials run in parallel via rayon when the default `parallel`
//! feature is enabled; `--no-default-features` builds a sequential fallback
//! with identical output.

pub mod coupling;
pub mod experiments;
pub mod integrators;
pub mod parallel;
pub mod potentials;
pub mod randomness;
pub mod samplers;
pub mod stats;

#[cfg(test)]
pub(crate) mod test_support;

/// Errors surfaced by configuration parsing and the experiment harness.
///
/// Mathematical preconditions inside the numerical kernels (step sizes,
/// dimensions, probability bounds) are asserted instead: violating them is a
/// programming error, not a runtime condition to recover from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse model spec '{0}' (expected iso:k[,d] | aniso:k1,k2,... | double_well | rough:a)")]
    ModelParse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
