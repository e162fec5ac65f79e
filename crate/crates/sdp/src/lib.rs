//! A small, deterministic semidefinite-programming toolkit.
//!
//! The solver targets the structured problems that show up when bounding
//! graph invariants with moment-matrix relaxations: a block-diagonal PSD
//! variable, a few dozen to a few thousand sparse equality constraints, and
//! tolerance requirements around 1e-8.  Everything is dense per block,
//! single-threaded, and allocation-predictable; given identical inputs the
//! solver produces bit-identical output.
//!
//! # Problem form
//!
//! ```text
//!   maximize    <C, X>
//!   subject to  <A_k, X> = b_k,   k = 0..m
//!               X = diag(X_0, ..., X_{B-1}),   X_b >= 0
//! ```
//!
//! # Entry points
//!
//! * [`solve`] — the HKM predictor-corrector interior-point method.
//! * [`feasibility`] — margin-based feasibility with Farkas certificates;
//!   undecidable queries surface as [`SdpError::Undecided`], never as a
//!   silent boolean.
//! * [`dump_problem`] — deterministic text serialization for debugging.
//!
//! # Example
//!
//! ```
//! use sdp::{solve, Constraint, SdpProblem, SdpStatus, SparseSym};
//!
//! // maximize X_01 + X_10 subject to tr(X) = 1 on a 2x2 block: value 1.
//! let p = SdpProblem {
//!     block_sizes: vec![2],
//!     objective: SparseSym::from_entries([(0, 0, 1, 1.0)]),
//!     constraints: vec![Constraint {
//!         matrix: SparseSym::from_entries([(0, 0, 0, 1.0), (0, 1, 1, 1.0)]),
//!         rhs: 1.0,
//!     }],
//! };
//! let sol = solve(&p, 1e-9, 100).unwrap();
//! assert_eq!(sol.status, SdpStatus::Optimal);
//! assert!((sol.objective - 1.0).abs() < 1e-7);
//! ```

mod feasibility;
mod linalg;
mod problem;
mod solver;

pub use feasibility::{feasibility, FeasibilityReport, MARGIN_TOL};
pub use problem::{dump_problem, Constraint, Entry, SdpProblem, SparseSym};
pub use solver::{solve, IterStat, SdpSolution, SdpStatus};

use thiserror::Error;

/// Errors surfaced by the solver and feasibility interfaces.
#[derive(Debug, Error)]
pub enum SdpError {
    /// Malformed input (bad indices, non-finite data, empty blocks).
    #[error("invalid problem: {0}")]
    Invalid(String),
    /// An internal numerical invariant failed outside the solve loop.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A feasibility query could not be certified either way.
    #[error("feasibility undecided: margin {margin:.3e} is inside the tolerance band and no Farkas certificate verified")]
    Undecided { margin: f64 },
}
