//! HKM predictor-corrector interior-point method for block-diagonal SDPs.
//!
//! Primal:  max <C, X>   s.t.  <A_k, X> = b_k,  X >= 0 (blockwise)
//! Dual:    min b'y      s.t.  Z = sum_k y_k A_k - C >= 0
//!
//! The Newton system in the HKM (dual-scaled) direction reduces to the Schur
//! complement equation
//!
//!   M dy = sigma*mu*A(Z^-1) - A(X D Z^-1) - A(dX_aff dZ_aff Z^-1) - b,
//!   M_kl = tr(A_k X A_l Z^-1),   D = A*(y) - C - Z,
//!
//! with dZ = A*(dy) + D and dX = sigma*mu*Z^-1 - X - X dZ Z^-1 (symmetrized),
//! the last rhs term present only in the corrector pass.  M is symmetric
//! positive definite whenever the A_k are linearly independent; it is
//! assembled from sparse constraint data and factored with the blocked
//! Cholesky in `linalg`.

use nalgebra::DMatrix;

use crate::linalg::{cholesky_in_place, cholesky_solve};
use crate::problem::{presolve, Presolved, SdpProblem, SparseSym};
use crate::SdpError;

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    /// All three relative tolerances met.
    Optimal,
    /// Primal infeasibility proved by a verified Farkas ray.
    Infeasible,
    /// Iteration limit hit; best iterate returned.
    MaxIter,
    /// The linear algebra broke down; best iterate returned.
    NumericalFailure,
}

/// Per-iteration convergence record.
#[derive(Debug, Clone, Copy)]
pub struct IterStat {
    pub pobj: f64,
    pub dobj: f64,
    pub rel_primal: f64,
    pub rel_dual: f64,
    pub rel_gap: f64,
    pub mu: f64,
}

/// Result of a solve.  `x` is the block-diagonal primal matrix, `y` the dual
/// multipliers (one per ORIGINAL constraint; presolve-dropped constraints get
/// zero), and `s` the dual slack `A*(y) - C`.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub objective: f64,
    pub dual_objective: f64,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub rel_primal_residual: f64,
    pub rel_dual_residual: f64,
    pub rel_gap: f64,
    pub iterations: usize,
    /// On `Infeasible`: a ray with `sum_k farkas_k A_k >= 0` (verified to
    /// eigenvalue tolerance) and `b' farkas < 0`.
    pub farkas: Option<Vec<f64>>,
    pub trace: Vec<IterStat>,
    pub message: String,
}

/// Solve to relative tolerance `tol` (primal residual, dual residual, and
/// duality gap) within `max_iter` iterations.
pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    p.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SdpError::Invalid(format!("tolerance {tol} not positive")));
    }
    match presolve(p) {
        Presolved::Infeasible { farkas, reason } => {
            let zeros: Vec<DMatrix<f64>> = p
                .block_sizes
                .iter()
                .map(|&n| DMatrix::zeros(n, n))
                .collect();
            Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                objective: 0.0,
                dual_objective: 0.0,
                x: zeros.clone(),
                y: vec![0.0; p.constraints.len()],
                s: zeros,
                rel_primal_residual: f64::INFINITY,
                rel_dual_residual: f64::INFINITY,
                rel_gap: f64::INFINITY,
                iterations: 0,
                farkas: Some(farkas),
                trace: Vec::new(),
                message: format!("infeasible at presolve: {reason}"),
            })
        }
        Presolved::Reduced { problem, kept } => {
            let mut sol = ipm(&problem, tol, max_iter)?;
            // Scatter multipliers back to original constraint indices.
            let scatter = |v: &[f64]| -> Vec<f64> {
                let mut full = vec![0.0; p.constraints.len()];
                for (i, &k) in kept.iter().enumerate() {
                    full[k] = v[i];
                }
                full
            };
            sol.y = scatter(&sol.y);
            sol.farkas = sol.farkas.as_deref().map(scatter);
            Ok(sol)
        }
    }
}

struct Workspace {
    /// Sorted distinct blocks touched by each constraint.
    touched: Vec<Vec<usize>>,
    /// Dense scratch blocks for U_k = X A_k Z^-1.
    u: Vec<DMatrix<f64>>,
}

fn ipm(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    let sizes = &p.block_sizes;
    let nblocks = sizes.len();
    let ntot: usize = sizes.iter().sum();
    let m = p.constraints.len();
    let b: Vec<f64> = p.constraints.iter().map(|c| c.rhs).collect();
    let cons: Vec<&SparseSym> = p.constraints.iter().map(|c| &c.matrix).collect();

    let bnorm2 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bnorm_inf = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cnorm = p.objective.norm_fro();
    let max_anorm = cons.iter().map(|a| a.norm_fro()).fold(0.0, f64::max);
    let tau = 1.0 + bnorm_inf + max_anorm.max(cnorm);

    // No constraints: the cone optimum is analytic.
    if m == 0 {
        let c_dense = p.objective.to_dense(sizes);
        let lam_max = c_dense
            .iter()
            .filter(|blk| blk.nrows() > 0)
            .map(|blk| {
                blk.symmetric_eigenvalues()
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let zeros: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut neg_c = zeros.clone();
        p.objective.add_scaled_to(-1.0, &mut neg_c);
        if lam_max <= 1e-12 * (1.0 + cnorm) {
            return Ok(SdpSolution {
                status: SdpStatus::Optimal,
                objective: 0.0,
                dual_objective: 0.0,
                x: zeros.clone(),
                y: Vec::new(),
                s: neg_c,
                rel_primal_residual: 0.0,
                rel_dual_residual: 0.0,
                rel_gap: 0.0,
                iterations: 0,
                farkas: None,
                trace: Vec::new(),
                message: "unconstrained cone optimum at X = 0".into(),
            });
        }
        return Ok(SdpSolution {
            status: SdpStatus::NumericalFailure,
            objective: f64::INFINITY,
            dual_objective: 0.0,
            x: zeros.clone(),
            y: Vec::new(),
            s: neg_c,
            rel_primal_residual: 0.0,
            rel_dual_residual: f64::INFINITY,
            rel_gap: f64::INFINITY,
            iterations: 0,
            farkas: None,
            trace: Vec::new(),
            message: "objective unbounded over the cone (no constraints)".into(),
        });
    }

    let mut ws = Workspace {
        touched: cons
            .iter()
            .map(|a| {
                let mut blks: Vec<usize> = a.entries().iter().map(|e| e.block).collect();
                blks.dedup(); // entries are sorted by block already
                blks
            })
            .collect(),
        u: sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
    };

    let mut x: Vec<DMatrix<f64>> = sizes
        .iter()
        .map(|&n| DMatrix::identity(n, n) * tau)
        .collect();
    let mut z = x.clone();
    let mut y = vec![0.0; m];

    let mut trace: Vec<IterStat> = Vec::with_capacity(max_iter);
    let mut best: Option<(f64, Vec<DMatrix<f64>>, Vec<f64>, Vec<DMatrix<f64>>)> = None;
    let mut schur: Vec<f64> = vec![0.0; m * m];
    let mut status = SdpStatus::MaxIter;
    let mut message = String::new();
    let mut farkas: Option<Vec<f64>> = None;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it;
        let pobj = p.objective.inner(&x);
        let dobj = dot(&b, &y);
        let rp: Vec<f64> = (0..m).map(|k| b[k] - cons[k].inner(&x)).collect();
        let rel_p = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + bnorm2);
        // D = A*(y) - C - Z
        let mut d: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        p.objective.add_scaled_to(-1.0, &mut d);
        for k in 0..m {
            if y[k] != 0.0 {
                cons[k].add_scaled_to(y[k], &mut d);
            }
        }
        for bi in 0..nblocks {
            d[bi] -= &z[bi];
        }
        let rel_d = fro_norm(&d) / (1.0 + cnorm);
        let mu = (0..nblocks)
            .map(|bi| elem_dot(&x[bi], &z[bi]))
            .sum::<f64>()
            / ntot as f64;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        trace.push(IterStat {
            pobj,
            dobj,
            rel_primal: rel_p,
            rel_dual: rel_d,
            rel_gap,
            mu,
        });

        if rel_p <= tol && rel_d <= tol && rel_gap <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        let merit = rel_p.max(rel_d).max(rel_gap);
        if best.as_ref().map_or(true, |(bm, ..)| merit < *bm) {
            best = Some((merit, x.clone(), y.clone(), z.clone()));
        }

        // Dual objective diving to -infinity signals primal infeasibility;
        // confirm with a Farkas ray before declaring it.
        if dobj < -1e8 * (1.0 + bnorm_inf) {
            if let Some(ray) = verify_farkas_ray(&y, &cons, &b, sizes) {
                status = SdpStatus::Infeasible;
                farkas = Some(ray);
                message = "dual objective diverging; Farkas ray verified".into();
                break;
            }
        }
        if pobj > 1e8 * (1.0 + cnorm) && rel_p < tol.sqrt() {
            status = SdpStatus::NumericalFailure;
            message = "primal objective diverging (dual side likely infeasible)".into();
            break;
        }

        // Factor Z blockwise (with a tiny escalating ridge if needed).
        let zfac = match factor_blocks(&mut z, tau) {
            Some(f) => f,
            None => {
                status = SdpStatus::NumericalFailure;
                message = "dual slack lost positive definiteness".into();
                break;
            }
        };
        let zinv: Vec<DMatrix<f64>> = zfac.iter().map(|f| f.inverse()).collect();

        // E = X D Z^-1; the predictor/corrector right-hand sides need
        // <A_k, E>, <A_k, Z^-1> and later <A_k, G>.
        let e: Vec<DMatrix<f64>> = (0..nblocks)
            .map(|bi| &x[bi] * &d[bi] * &zinv[bi])
            .collect();
        let a_e: Vec<f64> = cons.iter().map(|a| a.inner(&e)).collect();
        let a_zinv: Vec<f64> = cons.iter().map(|a| a.inner(&zinv)).collect();

        // Schur complement M and its Cholesky factor.  Cholesky works in
        // place, so a failed attempt reassembles M and retries with an
        // escalating diagonal ridge.
        assemble_schur(&mut schur, &cons, &x, &zinv, &mut ws);
        let max_diag = (0..m)
            .map(|k| schur[k * m + k].abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut factored = cholesky_in_place(&mut schur, m).is_ok();
        if !factored {
            let mut ridge = 1e-13 * max_diag;
            for _ in 0..4 {
                assemble_schur(&mut schur, &cons, &x, &zinv, &mut ws);
                add_ridge(&mut schur, m, ridge);
                if cholesky_in_place(&mut schur, m).is_ok() {
                    factored = true;
                    break;
                }
                ridge *= 100.0;
            }
        }
        if !factored {
            status = SdpStatus::NumericalFailure;
            message = "Schur complement lost positive definiteness".into();
            break;
        }

        // Predictor (sigma = 0).
        let mut dy_aff: Vec<f64> = (0..m).map(|k| -a_e[k] - b[k]).collect();
        cholesky_solve(&schur, m, &mut dy_aff);
        let mut dz_aff = d.clone();
        for k in 0..m {
            if dy_aff[k] != 0.0 {
                cons[k].add_scaled_to(dy_aff[k], &mut dz_aff);
            }
        }
        let dx_aff: Vec<DMatrix<f64>> = (0..nblocks)
            .map(|bi| {
                let w = -&x[bi] - &x[bi] * &dz_aff[bi] * &zinv[bi];
                symmetrize(w)
            })
            .collect();
        let ap_aff = step_length(&x, &dx_aff, tau);
        let ad_aff = step_length(&z, &dz_aff, tau);
        let (ap_aff, ad_aff) = match (ap_aff, ad_aff) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                status = SdpStatus::NumericalFailure;
                message = "step length computation failed".into();
                break;
            }
        };

        // Mehrotra centering parameter.
        let mu_aff = {
            let mut acc = 0.0;
            for bi in 0..nblocks {
                acc += elem_dot(&x[bi], &z[bi])
                    + ad_aff * elem_dot(&x[bi], &dz_aff[bi])
                    + ap_aff * elem_dot(&dx_aff[bi], &z[bi])
                    + ap_aff * ad_aff * elem_dot(&dx_aff[bi], &dz_aff[bi]);
            }
            (acc / ntot as f64).max(0.0)
        };
        let sigma = if mu > 0.0 {
            ((mu_aff / mu).powi(3)).clamp(1e-10, 1.0)
        } else {
            0.1
        };

        // Corrector.
        let g: Vec<DMatrix<f64>> = (0..nblocks)
            .map(|bi| &dx_aff[bi] * &dz_aff[bi] * &zinv[bi])
            .collect();
        let mut dy: Vec<f64> = (0..m)
            .map(|k| sigma * mu * a_zinv[k] - a_e[k] - cons[k].inner(&g) - b[k])
            .collect();
        cholesky_solve(&schur, m, &mut dy);
        let mut dz = d;
        for k in 0..m {
            if dy[k] != 0.0 {
                cons[k].add_scaled_to(dy[k], &mut dz);
            }
        }
        let dx: Vec<DMatrix<f64>> = (0..nblocks)
            .map(|bi| {
                let w = &zinv[bi] * (sigma * mu) - &x[bi] - &x[bi] * &dz[bi] * &zinv[bi] - &g[bi];
                symmetrize(w)
            })
            .collect();

        let ap = step_length(&x, &dx, tau);
        let ad = step_length(&z, &dz, tau);
        let (ap, ad) = match (ap, ad) {
            (Some(a), Some(b)) => (0.98 * a, 0.98 * b),
            _ => {
                status = SdpStatus::NumericalFailure;
                message = "step length computation failed".into();
                break;
            }
        };
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);

        for bi in 0..nblocks {
            x[bi] += &dx[bi] * ap;
            z[bi] += &dz[bi] * ad;
        }
        for k in 0..m {
            y[k] += ad * dy[k];
        }
        if x.iter().any(|blk| blk.iter().any(|v| !v.is_finite()))
            || z.iter().any(|blk| blk.iter().any(|v| !v.is_finite()))
            || y.iter().any(|v| !v.is_finite())
        {
            status = SdpStatus::NumericalFailure;
            message = "iterate became non-finite".into();
            break;
        }
        iterations = it + 1;
    }

    // On a non-optimal exit return the best iterate seen.
    if status == SdpStatus::MaxIter || status == SdpStatus::NumericalFailure {
        if let Some((_, bx, by, bz)) = best {
            x = bx;
            y = by;
            z = bz;
        }
        if status == SdpStatus::MaxIter {
            message = format!("iteration limit {max_iter} reached");
        }
    }

    // Final certified quantities, recomputed from the returned iterate.
    let pobj = p.objective.inner(&x);
    let dobj = dot(&b, &y);
    let rp: Vec<f64> = (0..m).map(|k| b[k] - cons[k].inner(&x)).collect();
    let rel_p = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + bnorm2);
    let mut slack: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    p.objective.add_scaled_to(-1.0, &mut slack);
    for k in 0..m {
        if y[k] != 0.0 {
            cons[k].add_scaled_to(y[k], &mut slack);
        }
    }
    let mut dmat = slack.clone();
    for bi in 0..nblocks {
        dmat[bi] -= &z[bi];
    }
    let rel_d = fro_norm(&dmat) / (1.0 + cnorm);
    let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

    Ok(SdpSolution {
        status,
        objective: pobj,
        dual_objective: dobj,
        x,
        y,
        s: slack,
        rel_primal_residual: rel_p,
        rel_dual_residual: rel_d,
        rel_gap,
        iterations,
        farkas,
        trace,
        message,
    })
}

fn add_ridge(buf: &mut [f64], m: usize, ridge: f64) {
    for k in 0..m {
        buf[k * m + k] += ridge;
    }
}

/// Blockwise Cholesky of the (symmetric positive definite) iterate,
/// perturbing the iterate by an escalating ridge if positivity is lost to
/// roundoff.
fn factor_blocks(
    blocks: &mut [DMatrix<f64>],
    scale: f64,
) -> Option<Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>>> {
    let mut out = Vec::with_capacity(blocks.len());
    for blk in blocks.iter_mut() {
        let mut ridge = 1e-14 * scale;
        let mut fac = nalgebra::Cholesky::new(blk.clone());
        let mut tries = 0;
        while fac.is_none() && tries < 4 {
            for i in 0..blk.nrows() {
                blk[(i, i)] += ridge;
            }
            fac = nalgebra::Cholesky::new(blk.clone());
            ridge *= 100.0;
            tries += 1;
        }
        out.push(fac?);
    }
    Some(out)
}

/// Largest alpha <= 1 with S + alpha*dS staying in the cone (fraction 1.0;
/// the caller applies the 0.98 damping).  Uses the eigenvalues of
/// L^-1 dS L^-T.
fn step_length(s: &[DMatrix<f64>], ds: &[DMatrix<f64>], scale: f64) -> Option<f64> {
    let mut alpha = 1.0f64;
    for (sb, db) in s.iter().zip(ds) {
        if sb.nrows() == 0 {
            continue;
        }
        let fac = nalgebra::Cholesky::new(sb.clone()).or_else(|| {
            let mut bumped = sb.clone();
            for i in 0..bumped.nrows() {
                bumped[(i, i)] += 1e-12 * scale;
            }
            nalgebra::Cholesky::new(bumped)
        })?;
        let l = fac.l();
        let v = l.solve_lower_triangular(db)?;
        let w = l.solve_lower_triangular(&v.transpose())?.transpose();
        let wsym = symmetrize(w);
        let lam_min = wsym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if lam_min < -1e-14 {
            alpha = alpha.min(-1.0 / lam_min);
        }
    }
    Some(alpha)
}

/// Verified Farkas ray from a diverging dual iterate: normalized y with
/// lambda_min(sum y_k A_k) above -1e-7 (relative) and b'y below -1e-7.
fn verify_farkas_ray(
    y: &[f64],
    cons: &[&SparseSym],
    b: &[f64],
    sizes: &[usize],
) -> Option<Vec<f64>> {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return None;
    }
    let ray: Vec<f64> = y.iter().map(|v| v / norm).collect();
    let mut w: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for (k, a) in cons.iter().enumerate() {
        if ray[k] != 0.0 {
            a.add_scaled_to(ray[k], &mut w);
        }
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
    let bty = dot(b, &ray);
    let bscale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if lam_min >= -1e-7 * (1.0 + wmax) && bty <= -1e-7 * bscale {
        Some(ray)
    } else {
        None
    }
}

/// Schur matrix assembly: for each k compute U_k = X A_k Z^-1 on the blocks
/// A_k touches (as sums of column outer products), then fill row k of the
/// lower triangle with M[k][l] = <A_l, U_k> for l <= k.
fn assemble_schur(
    out: &mut [f64],
    cons: &[&SparseSym],
    x: &[DMatrix<f64>],
    zinv: &[DMatrix<f64>],
    ws: &mut Workspace,
) {
    let m = cons.len();
    for k in 0..m {
        for &bi in &ws.touched[k] {
            ws.u[bi].fill(0.0);
        }
        for e in cons[k].entries() {
            let n = x[e.block].nrows();
            let xs = x[e.block].as_slice();
            let zs = zinv[e.block].as_slice();
            let us = ws.u[e.block].as_mut_slice();
            // U += v * x_col(row) * zinv_col(col)' and the mirrored term.
            outer_acc(us, n, e.value, xs, e.row, zs, e.col);
            if e.row != e.col {
                outer_acc(us, n, e.value, xs, e.col, zs, e.row);
            }
        }
        for l in 0..=k {
            let mut s = 0.0;
            for e in cons[l].entries() {
                if ws.touched[k].binary_search(&e.block).is_err() {
                    continue;
                }
                let ub = &ws.u[e.block];
                s += if e.row == e.col {
                    e.value * ub[(e.row, e.col)]
                } else {
                    e.value * (ub[(e.row, e.col)] + ub[(e.col, e.row)])
                };
            }
            out[k * m + l] = s;
        }
    }
}

/// us (col-major n x n) += v * xcol(i) * zcol(j)'.
fn outer_acc(us: &mut [f64], n: usize, v: f64, xs: &[f64], i: usize, zs: &[f64], j: usize) {
    let xcol = &xs[i * n..(i + 1) * n];
    let zcol = &zs[j * n..(j + 1) * n];
    for c in 0..n {
        let f = v * zcol[c];
        if f == 0.0 {
            continue;
        }
        let ucol = &mut us[c * n..(c + 1) * n];
        for r in 0..n {
            ucol[r] += f * xcol[r];
        }
    }
}

fn symmetrize(w: DMatrix<f64>) -> DMatrix<f64> {
    let wt = w.transpose();
    (w + wt) * 0.5
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Elementwise (Frobenius) inner product of two symmetric dense blocks.
fn elem_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn fro_norm(blocks: &[DMatrix<f64>]) -> f64 {
    blocks
        .iter()
        .map(|blk| blk.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}
