//! Feasibility queries with margins and certificates.
//!
//! "Is there X >= 0 with <A_k, X> = b_k?" is answered through the margin
//! program
//!
//!   maximize t   s.t.  <A_k, X'> + t*tr(A_k) = b_k,   X' >= 0,  t <= t_cap
//!
//! obtained by writing X = X' + t*I.  The margin direction restores a strict
//! interior even when the query region is a face of the cone (for example
//! when diagonal entries are pinned to zero), which is precisely where a
//! naive phase-I stalls.  The cap t = t_cap - s with a 1x1 slack block s >= 0
//! keeps the program bounded; at any optimum with s* > 0 duality gives
//! b'y* = t*, so a decisively negative margin hands us a Farkas candidate
//! that is then re-verified against the ORIGINAL data before infeasibility
//! is reported.  Queries that cannot be certified either way come back as an
//! error, never as a silent boolean.

use nalgebra::DMatrix;

use crate::problem::{Constraint, SdpProblem, SparseSym};
use crate::solver::{solve, SdpSolution, SdpStatus};
use crate::SdpError;

/// Absolute margin threshold: margins in `[-MARGIN_TOL, +inf)` count as
/// feasible, margins below it must be certified by a verified Farkas ray.
pub const MARGIN_TOL: f64 = 1e-7;

/// Outcome of a feasibility query.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Optimal margin t*: the largest t with some X >= t*I satisfying the
    /// constraints (truncated above at the internal cap).
    pub margin: f64,
    /// A feasible point for the original query (when feasible).
    pub x: Option<Vec<DMatrix<f64>>>,
    /// Verified Farkas ray over the original constraints (when infeasible):
    /// `sum_k farkas_k A_k >= 0` and `b' farkas < 0`.
    pub farkas: Option<Vec<f64>>,
    /// The underlying margin solve, for diagnostics.
    pub solution: SdpSolution,
}

/// Decide feasibility of `<A_k, X> = b_k, X >= 0`.  The `objective` field of
/// `p` is ignored.  Returns `Err(SdpError::Undecided)` when neither a
/// feasible point with margin above `-MARGIN_TOL` nor a verifiable Farkas
/// certificate was found.
pub fn feasibility(p: &SdpProblem, tol: f64) -> Result<FeasibilityReport, SdpError> {
    p.validate()?;
    let t_cap = 1.0
        + p.constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(0.0, f64::max);
    let s_block = p.block_sizes.len();

    let mut blocks = p.block_sizes.clone();
    blocks.push(1);
    let constraints: Vec<Constraint> = p
        .constraints
        .iter()
        .map(|c| {
            let tr = c.matrix.trace();
            let mut entries: Vec<(usize, usize, usize, f64)> = c
                .matrix
                .entries()
                .iter()
                .map(|e| (e.block, e.row, e.col, e.value))
                .collect();
            if tr != 0.0 {
                entries.push((s_block, 0, 0, -tr));
            }
            Constraint {
                matrix: SparseSym::from_entries(entries),
                rhs: c.rhs - t_cap * tr,
            }
        })
        .collect();
    let margin_problem = SdpProblem {
        block_sizes: blocks,
        objective: SparseSym::from_entries([(s_block, 0, 0, -1.0)]),
        constraints,
    };

    let solution = solve(&margin_problem, tol, 200)?;
    let m = p.constraints.len();

    match solution.status {
        SdpStatus::Infeasible => {
            // The affine part itself is contradictory.  The ray is already
            // verified (presolve rays are exact, solver rays are checked),
            // but re-verify here against the original data for honesty.
            let ray = solution.farkas.clone().ok_or_else(|| {
                SdpError::Numerical("infeasible status without a Farkas ray".into())
            })?;
            match check_farkas(p, &ray) {
                Some(ray) => Ok(FeasibilityReport {
                    feasible: false,
                    margin: f64::NEG_INFINITY,
                    x: None,
                    farkas: Some(ray),
                    solution,
                }),
                None => Err(SdpError::Undecided {
                    margin: f64::NEG_INFINITY,
                }),
            }
        }
        SdpStatus::Optimal | SdpStatus::MaxIter | SdpStatus::NumericalFailure => {
            let converged = solution.status == SdpStatus::Optimal
                || (solution.rel_primal_residual <= 10.0 * tol
                    && solution.rel_dual_residual <= 10.0 * tol
                    && solution.rel_gap <= 10.0 * tol);
            let margin = t_cap + solution.objective;
            if converged && margin >= -MARGIN_TOL {
                // Reassemble X = X' + t*I on the original blocks.
                let mut x = solution.x[..p.block_sizes.len()].to_vec();
                for blk in x.iter_mut() {
                    for i in 0..blk.nrows() {
                        blk[(i, i)] += margin;
                    }
                }
                return Ok(FeasibilityReport {
                    feasible: true,
                    margin,
                    x: Some(x),
                    farkas: None,
                    solution,
                });
            }
            if converged && margin < -MARGIN_TOL {
                // b'y* = t* < 0: the multipliers are the Farkas candidate.
                let ray: Vec<f64> = solution.y[..m].to_vec();
                if let Some(ray) = check_farkas(p, &ray) {
                    return Ok(FeasibilityReport {
                        feasible: false,
                        margin,
                        x: None,
                        farkas: Some(ray),
                        solution,
                    });
                }
            }
            Err(SdpError::Undecided { margin })
        }
    }
}

/// Verify a Farkas candidate against the original problem data; returns the
/// trace-normalized ray on success.
fn check_farkas(p: &SdpProblem, ray: &[f64]) -> Option<Vec<f64>> {
    let mut w: Vec<DMatrix<f64>> = p
        .block_sizes
        .iter()
        .map(|&n| DMatrix::zeros(n, n))
        .collect();
    for (k, c) in p.constraints.iter().enumerate() {
        if ray[k] != 0.0 {
            c.matrix.add_scaled_to(ray[k], &mut w);
        }
    }
    let trw: f64 = w.iter().map(|blk| blk.trace()).sum();
    let norm: f64 = ray.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if trw.abs() > 1e-12 * (1.0 + norm) {
        trw
    } else if norm > 0.0 {
        norm
    } else {
        return None;
    };
    let ray: Vec<f64> = ray.iter().map(|v| v / scale).collect();
    for blk in w.iter_mut() {
        *blk /= scale;
    }
    let wmax = w
        .iter()
        .map(|blk| blk.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
        .fold(0.0, f64::max);
    let lam_min = w
        .iter()
        .filter(|blk| blk.nrows() > 0)
        .map(|blk| {
            blk.symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let bty: f64 = p
        .constraints
        .iter()
        .zip(&ray)
        .map(|(c, y)| c.rhs * y)
        .sum();
    let bscale = 1.0
        + p.constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(0.0, f64::max);
    if lam_min >= -MARGIN_TOL * (1.0 + wmax) && bty <= -MARGIN_TOL * bscale * 1e-2 {
        Some(ray)
    } else {
        None
    }
}
