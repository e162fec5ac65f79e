//! Dense Cholesky for the Schur complement system.
//!
//! The Schur matrix of the interior-point method is symmetric positive
//! definite and can reach dimensions of a few thousand for moment-matrix
//! relaxations, so factorization dominates total runtime.  This is a
//! right-looking blocked factorization on a row-major buffer: the panel is
//! copied to a compact scratch block so the rank-k trailing update — where
//! essentially all the flops are — runs on contiguous slices in 2x2 tiles.

/// Panel width for the blocked factorization.
const NB: usize = 48;

/// In-place lower Cholesky of the symmetric matrix stored row-major in `a`
/// (only the lower triangle is read or written; the strict upper triangle is
/// left untouched).  On failure returns the pivot index that lost
/// positivity.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    let mut scratch: Vec<f64> = Vec::new();
    let mut k0 = 0;
    while k0 < n {
        let kb = NB.min(n - k0);
        // Factor the diagonal panel.  Contributions from columns < k0 were
        // applied by earlier trailing updates, so it factors in isolation.
        for j in k0..k0 + kb {
            let mut d = a[j * n + j];
            for t in k0..j {
                let v = a[j * n + t];
                d -= v * v;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(j);
            }
            let ljj = d.sqrt();
            a[j * n + j] = ljj;
            for i in j + 1..k0 + kb {
                let mut s = a[i * n + j];
                for t in k0..j {
                    s -= a[i * n + t] * a[j * n + t];
                }
                a[i * n + j] = s / ljj;
            }
        }
        // Rows below the panel: solve against the transposed panel factor.
        for i in k0 + kb..n {
            for j in k0..k0 + kb {
                let mut s = a[i * n + j];
                for t in k0..j {
                    s -= a[i * n + t] * a[j * n + t];
                }
                a[i * n + j] = s / a[j * n + j];
            }
        }
        syrk_lower_update(a, n, k0, kb, &mut scratch);
        k0 += kb;
    }
    Ok(())
}

/// Trailing update `a[i][j] -= dot(a[i][k0..k0+kb], a[j][k0..k0+kb])` for all
/// `k0+kb <= j <= i < n`.  The panel rows are first copied into a compact
/// `rows x kb` scratch block, then consumed in 2x2 tiles of contiguous dot
/// products.
fn syrk_lower_update(a: &mut [f64], n: usize, k0: usize, kb: usize, scratch: &mut Vec<f64>) {
    let start = k0 + kb;
    if start >= n {
        return;
    }
    let rows = n - start;
    scratch.clear();
    scratch.resize(rows * kb, 0.0);
    for r in 0..rows {
        let src = (start + r) * n + k0;
        scratch[r * kb..(r + 1) * kb].copy_from_slice(&a[src..src + kb]);
    }
    let b = &scratch[..];
    let mut ii = 0;
    while ii < rows {
        let two_i = ii + 1 < rows;
        let bi0 = &b[ii * kb..(ii + 1) * kb];
        let bi1 = if two_i {
            &b[(ii + 1) * kb..(ii + 2) * kb]
        } else {
            bi0
        };
        let mut jj = 0;
        while jj <= ii {
            let two_j = jj + 1 <= ii;
            let bj0 = &b[jj * kb..(jj + 1) * kb];
            let bj1 = if two_j {
                &b[(jj + 1) * kb..(jj + 2) * kb]
            } else {
                bj0
            };
            let (mut s00, mut s01, mut s10, mut s11) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for t in 0..kb {
                let xi0 = bi0[t];
                let xi1 = bi1[t];
                let xj0 = bj0[t];
                let xj1 = bj1[t];
                s00 += xi0 * xj0;
                s01 += xi0 * xj1;
                s10 += xi1 * xj0;
                s11 += xi1 * xj1;
            }
            let i = start + ii;
            let j = start + jj;
            a[i * n + j] -= s00;
            if two_j {
                a[i * n + j + 1] -= s01;
            }
            if two_i {
                a[(i + 1) * n + j] -= s10;
                if two_j {
                    a[(i + 1) * n + j + 1] -= s11;
                }
            }
            jj += 2;
        }
        // The (ii+1, ii+1) diagonal entry is the one pair the tiling above
        // cannot reach (its column index exceeds every jj the inner loop
        // visits with a valid second column).
        if two_i {
            let mut d = 0.0;
            for t in 0..kb {
                d += bi1[t] * bi1[t];
            }
            let i1 = start + ii + 1;
            a[i1 * n + i1] -= d;
        }
        ii += 2;
    }
}

/// Solve `L L' x = rhs` in place given the in-place lower factor.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, rhs: &mut [f64]) {
    debug_assert_eq!(l.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    // Forward: L w = rhs.
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let mut s = rhs[i];
        for (t, lit) in row.iter().enumerate() {
            s -= lit * rhs[t];
        }
        rhs[i] = s / l[i * n + i];
    }
    // Backward: L' x = w.
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= l[j * n + i] * rhs[j];
        }
        rhs[i] = s / l[i * n + i];
    }
}
