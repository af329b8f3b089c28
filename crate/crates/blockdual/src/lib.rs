//! Distributed dual solver for L2-regularized empirical risk minimization.
//!
//! The solver works on the Lagrange dual of the ERM problem: one dual
//! coordinate per training instance, columns of the data matrix partitioned
//! across `K` simulated workers. Each outer iteration builds a block-diagonal
//! quadratic model of the smooth dual term, solves the per-worker blocks with
//! random-permuted cyclic coordinate descent, synchronizes the aggregated
//! direction with a single vector allreduce, and picks a step size by exact
//! line search (quadratic duals), Armijo backtracking, or a fixed baseline
//! rule. Communication is simulated in-process with deterministic reductions
//! and exact round/byte accounting.
//!
//! Modules:
//! - [`dataio`]: LIBSVM parsing, column-wise sparse storage, nnz-balanced
//!   partitioning, spectral-norm estimation.
//! - [`model`]: loss families, convex conjugates, per-coordinate feasible
//!   intervals, and the 1-D coordinate minimizers.
//! - [`cluster`]: the simulated worker substrate and communication stats.
//! - [`engine`]: the outer solver loop, line searches, baselines, traces.
//! - [`oracle`]: independent reference solutions used by tests and tooling.

pub mod cluster;
pub mod dataio;
pub mod engine;
mod error;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
