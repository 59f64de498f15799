//! Constant-time estimation of the minimum of dense quadratic objectives.
//!
//! For `A in R^{n x n}` and `d, b in R^n` the crate targets
//!
//! ```text
//! z* = min_v <v, A v> + n <v, diag(d) v> + n <b, v>
//! ```
//!
//! [`estimator::estimate_min`] samples `k` indices with replacement, solves
//! the `k`-dimensional restriction exactly and rescales by `n^2/k^2`. Its
//! cost depends on `k` only; the error is `O(eps n^2)` with `k` depending
//! only on the accuracy `eps` and confidence `delta`.
//!
//! Around the estimator:
//!
//! * [`problem`]: entry-oracle problem types, index sampling, restriction.
//! * [`solver`]: exact spectral solve with unboundedness detection.
//! * [`dikernel`]: step dikernels, exact cut norm and the continuous form of
//!   the objective, for checking the approximation argument at small sizes.
//! * [`pearson`]: relative Pearson divergence estimation through the same
//!   estimator, and [`nystrom`] as the low-rank baseline.
//! * [`bench`]: seeded CSV experiment runners behind the `sqp-bench` binary.

pub mod bench;
pub mod dikernel;
pub mod error;
pub mod estimator;
pub mod nystrom;
pub mod pearson;
pub mod problem;
pub mod qprob;
pub mod rng;
pub mod solver;
pub mod synthetic;

pub use error::{QpError, Result};
pub use estimator::{
    estimate_min, estimate_with, estimate_with_indices, estimate_with_tolerance, suggest_k,
    EstimateReport, SampleSizeSchedule, Sampler,
};
pub use nystrom::{nystrom_fit, pe_nystrom, NystromModel};
pub use pearson::{pe_exact, pe_sampled, DivergenceConfig, GramOracle};
pub use problem::{
    evaluate, restrict_by_queries, sample_indices, CountingOracle, DenseProblem, EntryCost,
    IndexSequence, ProblemBounds, QuadraticProblem, RestrictedProblem,
};
pub use solver::{solve, solve_full, solve_restricted, SolveReport, SolveStatus};
pub use synthetic::SyntheticProblem;
