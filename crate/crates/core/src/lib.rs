//! Analytical model of IEEE 802.16 broadcast polling with piggybacked
//! bandwidth requests.
//!
//! A station is described by a Markov chain over backoff, request, collision,
//! grant-wait, transmission, piggyback and idle phases; its queue is an M/G/1
//! system with one-frame vacations. Coupling the stations through the TO
//! contention and the slot allocation gives three equations in the collision
//! probability `p`, the grant probability `q` and the mean service delay
//! `E{S}`, which [`solver::solve`] resolves by damped fixed-point iteration.
//!
//! The closed forms are generic over [`Real`] (`f32`/`f64`); the purely
//! rational pieces also accept exact scalars such as [`BigRational`].

pub mod analytic;
pub mod backoff;
pub mod capacity;
pub mod config;
pub mod scalar;
pub mod solution;
pub mod solver;

pub use num_rational::BigRational;

pub use analytic::ModelError;
pub use backoff::{backoff_profile, BackoffProfile};
pub use capacity::{capacity_heuristics, Capacity};
pub use config::{ConfigError, NetworkConfig, ValidConfig};
pub use scalar::{Real, Scalar};
pub use solution::ModelSolution;
pub use solver::{residuals, solve, solve_cross_checked, CrossChecked, SolveError, SolverOptions};

/// Double-precision model solution.
pub type Solution = ModelSolution<f64>;
/// Single-precision model solution.
pub type Solution32 = ModelSolution<f32>;
pub type Options = SolverOptions<f64>;
pub type Backoff = BackoffProfile<f64>;
/// Backoff means in exact rational arithmetic.
pub type ExactBackoff = BackoffProfile<BigRational>;
