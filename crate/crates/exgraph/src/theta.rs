//! Weighted Lovász number and theta-body membership for simple graphs.
//!
//! Both use one lifted formulation over symmetric (n+1)×(n+1) moment
//! matrices M ⪰ 0 with рow/column 0 playing the handle:
//!
//! * number: maximize Σ w_i M_ii subject to M_00 = 1, M_0i = M_ii, and
//!   M_ij = 0 on edges;
//! * membership of a behavior P: feasibility of the same system with
//!   M_0i = M_ii = P_i pinned.
//!
//! A feasible optimal M Gram-factorizes into a handle and one unit vector
//! per vertex with adjacent vectors orthogonal — an orthonormal
//! representation realizing the bound.

use crate::graph::{GraphError, SimpleGraph, WeightVector};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThetaError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("solver: {0}")]
    Sdp(#[from] sdp::SdpError),
    #[error("solver finished with status {0:?}")]
    Status(sdp::SdpStatus),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix must be square with at least one row")]
    Shape,
}

/// Default solver tolerance for the 9×9-scale theta problems.
pub const THETA_TOL: f64 = 1e-8;

fn lifted_problem(g: &SimpleGraph, w: Option<&WeightVector>, p: Option<&[f64]>) -> sdp::SdpProblem {
    let n = g.n();
    let mut constraints = Vec::with_capacity(1 + n + g.edges().len());
    constraints.push(sdp::Constraint {
        matrix: sdp::SparseSym::from_entries([(0, 0, 0, 1.0)]),
        rhs: 1.0,
    });
    for i in 1..=n {
        match p {
            None => {
                // M_0i − M_ii = 0.
                constraints.push(sdp::Constraint {
                    matrix: sdp::SparseSym::from_entries([(0, 0, i, 0.5), (0, i, i, -1.0)]),
                    rhs: 0.0,
                });
            }
            Some(p) => {
                constraints.push(sdp::Constraint {
                    matrix: sdp::SparseSym::from_entries([(0, 0, i, 0.5)]),
                    rhs: p[i - 1],
                });
                constraints.push(sdp::Constraint {
                    matrix: sdp::SparseSym::from_entries([(0, i, i, 1.0)]),
                    rhs: p[i - 1],
                });
            }
        }
    }
    for &(i, j) in g.edges() {
        constraints.push(sdp::Constraint {
            matrix: sdp::SparseSym::from_entries([(0, i + 1, j + 1, 0.5)]),
            rhs: 0.0,
        });
    }
    let objective = match w {
        Some(w) => sdp::SparseSym::from_entries(
            w.0.iter().enumerate().map(|(i, &wi)| (0, i + 1, i + 1, wi)),
        ),
        None => sdp::SparseSym::from_entries([]),
    };
    sdp::SdpProblem {
        block_sizes: vec![n + 1],
        objective,
        constraints,
    }
}

/// Weighted Lovász number ϑ(G, w).
pub fn theta(g: &SimpleGraph, w: &WeightVector, tol: f64) -> Result<f64, ThetaError> {
    Ok(theta_with_matrix(g, w, tol)?.0)
}

/// Weighted Lovász number together with the optimal lifted moment matrix
/// (input to [`extract_orthonormal_representation`]).
pub fn theta_with_matrix(
    g: &SimpleGraph,
    w: &WeightVector,
    tol: f64,
) -> Result<(f64, DMatrix<f64>), ThetaError> {
    w.validate(g.n())?;
    let problem = lifted_problem(g, Some(w), None);
    let solution = sdp::solve(&problem, tol, 200)?;
    // Accept a stalled exit whose certified residuals already sit within a
    // small multiple of the tolerance (the solver returns its best iterate).
    let worst = solution
        .rel_primal_residual
        .max(solution.rel_dual_residual)
        .max(solution.rel_gap);
    let near_optimal = matches!(
        solution.status,
        sdp::SdpStatus::MaxIter | sdp::SdpStatus::NumericalFailure
    ) && worst <= 100.0 * tol;
    if solution.status != sdp::SdpStatus::Optimal && !near_optimal {
        return Err(ThetaError::Status(solution.status));
    }
    Ok((solution.objective, solution.x.into_iter().next().unwrap()))
}

/// Is the behavior P inside the theta body TH(G)?
pub fn theta_body_membership(p: &[f64], g: &SimpleGraph, tol: f64) -> Result<bool, ThetaError> {
    let n = g.n();
    if p.len() != n {
        return Err(GraphError::WeightCount(p.len(), n).into());
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(GraphError::BadWeight(i, v).into());
        }
    }
    let problem = lifted_problem(g, None, Some(p));
    let report = sdp::feasibility(&problem, tol.min(1e-8))?;
    Ok(report.feasible)
}

/// A handle plus one unit vector per vertex; adjacent vertices' vectors are
/// orthogonal and ⟨handle, u_i⟩² recovers the vertex moment M_ii.
#[derive(Debug, Clone)]
pub struct OrthonormalRepresentation {
    pub handle: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

/// Vertices whose moment falls below this get a fresh coordinate axis
/// instead of a noise-amplifying division by √M_ii.
const ZERO_MOMENT: f64 = 1e-6;

/// Gram-factorize a feasible lifted matrix into handle + unit vectors.
pub fn extract_orthonormal_representation(
    m: &DMatrix<f64>,
) -> Result<OrthonormalRepresentation, ThetaError> {
    if m.nrows() != m.ncols() || m.nrows() < 1 {
        return Err(ThetaError::Shape);
    }
    let dim0 = m.nrows();
    let n = dim0 - 1;
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
    let floor = -1e-6 * lambda_max.max(1.0);
    let mut factors = DMatrix::<f64>::zeros(dim0, dim0);
    for k in 0..dim0 {
        let l = eig.eigenvalues[k];
        if l < floor {
            return Err(ThetaError::NotPsd(l));
        }
        let s = l.max(0.0).sqrt();
        for r in 0..dim0 {
            factors[(r, k)] = eig.eigenvectors[(r, k)] * s;
        }
    }
    // Row r of `factors` is the Gram vector of lifted index r.
    let zeros: Vec<usize> = (1..dim0).filter(|&i| sym[(i, i)] <= ZERO_MOMENT).collect();
    let dim = dim0 + zeros.len();
    let embed = |row: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for c in 0..dim0 {
            v[c] = factors[(row, c)];
        }
        v
    };
    let handle = embed(0);
    let mut vectors = Vec::with_capacity(n);
    let mut next_axis = dim0;
    for i in 1..dim0 {
        if sym[(i, i)] <= ZERO_MOMENT {
            let mut v = vec![0.0; dim];
            v[next_axis] = 1.0;
            next_axis += 1;
            vectors.push(v);
        } else {
            let scale = 1.0 / sym[(i, i)].sqrt();
            let mut v = embed(i);
            for c in &mut v {
                *c *= scale;
            }
            vectors.push(v);
        }
    }
    Ok(OrthonormalRepresentation {
        handle,
        vectors,
        dim,
    })
}
