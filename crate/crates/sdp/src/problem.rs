//! Problem data: sparse symmetric matrices over a block-diagonal cone,
//! validation, presolve, and a deterministic text dump.

use nalgebra::DMatrix;
use std::collections::HashMap;

use crate::SdpError;

/// One nonzero of a block-diagonal symmetric matrix.  Entries are stored on
/// the upper triangle (`row <= col`) of their block; an off-diagonal entry
/// `(i, j, v)` represents the value `v` at both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A sparse symmetric matrix over a fixed block structure.  Construction
/// normalizes entries: lower-triangle input is mirrored to the upper
/// triangle, entries are sorted by `(block, row, col)`, duplicates at the
/// same position are summed, and exact zeros are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSym {
    entries: Vec<Entry>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from raw `(block, row, col, value)` tuples; either triangle may
    /// be given.
    pub fn from_entries<I: IntoIterator<Item = (usize, usize, usize, f64)>>(iter: I) -> Self {
        let mut entries: Vec<Entry> = iter
            .into_iter()
            .map(|(block, row, col, value)| Entry {
                block,
                row: row.min(col),
                col: row.max(col),
                value,
            })
            .collect();
        entries.sort_by_key(|e| (e.block, e.row, e.col));
        let mut out: Vec<Entry> = Vec::with_capacity(entries.len());
        for e in entries {
            match out.last_mut() {
                Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => {
                    last.value += e.value;
                }
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        Self { entries: out }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Frobenius inner product `<A, M>` with a dense block-diagonal matrix.
    /// `M` need not be symmetric; the symmetric part is what the product
    /// sees: off-diagonal entries contribute `v * (M[i,j] + M[j,i])`.
    pub fn inner(&self, m: &[DMatrix<f64>]) -> f64 {
        let mut acc = 0.0;
        for e in &self.entries {
            let blk = &m[e.block];
            if e.row == e.col {
                acc += e.value * blk[(e.row, e.col)];
            } else {
                acc += e.value * (blk[(e.row, e.col)] + blk[(e.col, e.row)]);
            }
        }
        acc
    }

    /// `out += scale * A` (both triangles of each off-diagonal entry).
    pub fn add_scaled_to(&self, scale: f64, out: &mut [DMatrix<f64>]) {
        for e in &self.entries {
            let blk = &mut out[e.block];
            blk[(e.row, e.col)] += scale * e.value;
            if e.row != e.col {
                blk[(e.col, e.row)] += scale * e.value;
            }
        }
    }

    /// Dense realization over the given block sizes.
    pub fn to_dense(&self, block_sizes: &[usize]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect();
        self.add_scaled_to(1.0, &mut out);
        out
    }

    pub fn norm_fro(&self) -> f64 {
        let mut acc = 0.0;
        for e in &self.entries {
            let mult = if e.row == e.col { 1.0 } else { 2.0 };
            acc += mult * e.value * e.value;
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value.abs())
            .fold(0.0, f64::max)
    }

    /// Trace (sum of diagonal entries).
    pub fn trace(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.row == e.col)
            .map(|e| e.value)
            .sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|e| e.row == e.col)
    }

    /// Exact structural key (positions plus value bit patterns) used by
    /// presolve to detect duplicate constraint matrices.
    fn key(&self) -> Vec<(usize, usize, usize, u64)> {
        self.entries
            .iter()
            .map(|e| (e.block, e.row, e.col, e.value.to_bits()))
            .collect()
    }
}

/// One linear constraint `<matrix, X> = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub matrix: SparseSym,
    pub rhs: f64,
}

/// A semidefinite program in primal standard form over a block-diagonal
/// cone:
///
/// ```text
///   maximize    <objective, X>
///   subject to  <constraints[k].matrix, X> = constraints[k].rhs,  k = 0..m
///               X  block-diagonal, each block positive semidefinite
/// ```
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub objective: SparseSym,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn total_dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.block_sizes.is_empty() {
            return Err(SdpError::Invalid("no blocks".into()));
        }
        if let Some(b) = self.block_sizes.iter().position(|&n| n == 0) {
            return Err(SdpError::Invalid(format!("block {b} has size 0")));
        }
        let check = |mat: &SparseSym, what: &str| -> Result<(), SdpError> {
            for e in mat.entries() {
                if e.block >= self.block_sizes.len() {
                    return Err(SdpError::Invalid(format!(
                        "{what}: block index {} out of range",
                        e.block
                    )));
                }
                let n = self.block_sizes[e.block];
                if e.row >= n || e.col >= n {
                    return Err(SdpError::Invalid(format!(
                        "{what}: entry ({}, {}) outside block {} of size {n}",
                        e.row, e.col, e.block
                    )));
                }
                if !e.value.is_finite() {
                    return Err(SdpError::Invalid(format!("{what}: non-finite value")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (k, c) in self.constraints.iter().enumerate() {
            check(&c.matrix, &format!("constraint {k}"))?;
            if !c.rhs.is_finite() {
                return Err(SdpError::Invalid(format!("constraint {k}: non-finite rhs")));
            }
        }
        Ok(())
    }
}

/// Result of presolve: either the reduced problem (with a map back to the
/// original constraint indices) or a proof of infeasibility in the form of a
/// Farkas vector `y` over the ORIGINAL constraints with
/// `sum_k y_k A_k >= 0` (entrywise-diagonal or identically zero) and
/// `b' y < 0`.
#[derive(Debug)]
pub(crate) enum Presolved {
    Reduced {
        problem: SdpProblem,
        /// `kept[i]` = original index of reduced constraint `i`.
        kept: Vec<usize>,
    },
    Infeasible {
        farkas: Vec<f64>,
        reason: String,
    },
}

pub(crate) fn presolve(p: &SdpProblem) -> Presolved {
    let m = p.constraints.len();
    let rhs_scale = 1.0
        + p.constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(0.0, f64::max);
    let mut keep = vec![true; m];
    let mut seen: HashMap<Vec<(usize, usize, usize, u64)>, usize> = HashMap::new();
    // Singleton diagonal pins: (block, index) -> (implied value, constraint).
    let mut pins: HashMap<(usize, usize), (f64, usize)> = HashMap::new();

    for (k, c) in p.constraints.iter().enumerate() {
        let entries = c.matrix.entries();
        // Empty matrix: either vacuous or outright contradictory.
        if entries.is_empty() {
            if c.rhs.abs() > 1e-12 * rhs_scale {
                let mut farkas = vec![0.0; m];
                farkas[k] = -c.rhs.signum();
                return Presolved::Infeasible {
                    farkas,
                    reason: format!("constraint {k} has zero matrix but rhs {}", c.rhs),
                };
            }
            keep[k] = false;
            continue;
        }
        // Diagonal matrix with single-signed entries bounds <A, X> one-sided
        // on the cone; a contradictory rhs is a one-constraint Farkas proof.
        if c.matrix.is_diagonal() {
            let all_nonneg = entries.iter().all(|e| e.value > 0.0);
            let all_nonpos = entries.iter().all(|e| e.value < 0.0);
            if (all_nonneg && c.rhs < -1e-12 * rhs_scale)
                || (all_nonpos && c.rhs > 1e-12 * rhs_scale)
            {
                let mut farkas = vec![0.0; m];
                farkas[k] = if all_nonneg { 1.0 } else { -1.0 };
                return Presolved::Infeasible {
                    farkas,
                    reason: format!(
                        "constraint {k} forces a sign on <A, X> contradicted by rhs {}",
                        c.rhs
                    ),
                };
            }
        }
        // Singleton diagonal entry: a pin X_ii = rhs / v.  Two pins on the
        // same position must agree.
        if entries.len() == 1 && entries[0].row == entries[0].col {
            let e = entries[0];
            let val = c.rhs / e.value;
            match pins.get(&(e.block, e.row)) {
                Some(&(prev, kprev)) => {
                    if (val - prev).abs() > 1e-9 * (1.0 + prev.abs()) {
                        let s = -(val - prev).signum();
                        let mut farkas = vec![0.0; m];
                        farkas[k] = s / e.value;
                        let eprev = p.constraints[kprev].matrix.entries()[0];
                        farkas[kprev] = -s / eprev.value;
                        return Presolved::Infeasible {
                            farkas,
                            reason: format!(
                                "constraints {kprev} and {k} pin X[{},{}] of block {} to \
                                 {prev} and {val}",
                                e.row, e.row, e.block
                            ),
                        };
                    }
                    keep[k] = false; // consistent duplicate pin
                    continue;
                }
                None => {
                    pins.insert((e.block, e.row), (val, k));
                }
            }
        }
        // Exact duplicates of an earlier matrix: drop if the rhs agrees,
        // otherwise the pair is a two-constraint Farkas proof.
        match seen.get(&c.matrix.key()) {
            Some(&kprev) => {
                let bprev = p.constraints[kprev].rhs;
                if (c.rhs - bprev).abs() > 1e-12 * rhs_scale {
                    let s = -(c.rhs - bprev).signum();
                    let mut farkas = vec![0.0; m];
                    farkas[k] = s;
                    farkas[kprev] = -s;
                    return Presolved::Infeasible {
                        farkas,
                        reason: format!(
                            "constraints {kprev} and {k} share a matrix but have rhs \
                             {bprev} and {}",
                            c.rhs
                        ),
                    };
                }
                keep[k] = false;
            }
            None => {
                seen.insert(c.matrix.key(), k);
            }
        }
    }

    let kept: Vec<usize> = (0..m).filter(|&k| keep[k]).collect();
    let problem = SdpProblem {
        block_sizes: p.block_sizes.clone(),
        objective: p.objective.clone(),
        constraints: kept.iter().map(|&k| p.constraints[k].clone()).collect(),
    };
    Presolved::Reduced { problem, kept }
}

/// Deterministic text dump of a problem: a `blocks` header, then the
/// objective and each constraint as one line per nonzero in
/// `block,row,col,value` form.  Values round-trip exactly.
pub fn dump_problem(p: &SdpProblem) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    write!(s, "blocks").unwrap();
    for n in &p.block_sizes {
        write!(s, " {n}").unwrap();
    }
    s.push('\n');
    s.push_str("objective\n");
    for e in p.objective.entries() {
        writeln!(s, "{},{},{},{:e}", e.block, e.row, e.col, e.value).unwrap();
    }
    for (k, c) in p.constraints.iter().enumerate() {
        writeln!(s, "constraint {k} rhs {:e}", c.rhs).unwrap();
        for e in c.matrix.entries() {
            writeln!(s, "{},{},{},{:e}", e.block, e.row, e.col, e.value).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_mirrors_sorts_and_coalesces() {
        let a = SparseSym::from_entries([(0, 2, 1, 0.5), (0, 1, 2, 0.25), (0, 0, 0, 1.0)]);
        assert_eq!(a.entries().len(), 2);
        assert_eq!(
            (a.entries()[1].row, a.entries()[1].col, a.entries()[1].value),
            (1, 2, 0.75)
        );
        let zeroed = SparseSym::from_entries([(0, 0, 1, 1.0), (0, 1, 0, -1.0)]);
        assert!(zeroed.is_empty());
    }

    #[test]
    fn inner_product_counts_both_triangles() {
        let a = SparseSym::from_entries([(0, 0, 1, 2.0), (0, 1, 1, 3.0)]);
        let mut x = vec![DMatrix::zeros(2, 2)];
        x[0][(0, 1)] = 5.0;
        x[0][(1, 0)] = 5.0;
        x[0][(1, 1)] = 7.0;
        assert_eq!(a.inner(&x), 2.0 * 10.0 + 3.0 * 7.0);
        assert!((a.norm_fro() - (2.0 * 4.0 + 9.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn presolve_drops_duplicates_and_zero_rows() {
        let mat = SparseSym::from_entries([(0, 0, 0, 1.0), (0, 0, 1, 2.0)]);
        let p = SdpProblem {
            block_sizes: vec![2],
            objective: SparseSym::new(),
            constraints: vec![
                Constraint { matrix: mat.clone(), rhs: 1.0 },
                Constraint { matrix: mat, rhs: 1.0 },
                Constraint { matrix: SparseSym::new(), rhs: 0.0 },
            ],
        };
        match presolve(&p) {
            Presolved::Reduced { problem, kept } => {
                assert_eq!(problem.constraints.len(), 1);
                assert_eq!(kept, vec![0]);
            }
            _ => panic!("expected reduction"),
        }
    }

    #[test]
    fn presolve_flags_contradictions_with_valid_farkas() {
        let mat = SparseSym::from_entries([(0, 0, 1, 1.0)]);
        let p = SdpProblem {
            block_sizes: vec![2],
            objective: SparseSym::new(),
            constraints: vec![
                Constraint { matrix: mat.clone(), rhs: 1.0 },
                Constraint { matrix: mat, rhs: 2.0 },
            ],
        };
        match presolve(&p) {
            Presolved::Infeasible { farkas, .. } => {
                // sum_k y_k A_k must vanish and b'y must be negative.
                assert_eq!(farkas.len(), 2);
                assert!((farkas[0] + farkas[1]).abs() < 1e-15);
                let bty = farkas[0] * 1.0 + farkas[1] * 2.0;
                assert!(bty < -0.5);
            }
            _ => panic!("expected infeasibility"),
        }

        // Diagonal-sign contradiction: tr(X) = -1 on a PSD block.
        let eye = SparseSym::from_entries([(0, 0, 0, 1.0), (0, 1, 1, 1.0)]);
        let p2 = SdpProblem {
            block_sizes: vec![2],
            objective: SparseSym::new(),
            constraints: vec![Constraint { matrix: eye, rhs: -1.0 }],
        };
        match presolve(&p2) {
            Presolved::Infeasible { farkas, .. } => assert_eq!(farkas, vec![1.0]),
            _ => panic!("expected infeasibility"),
        }
    }

    #[test]
    fn dump_round_trips_structure() {
        let p = SdpProblem {
            block_sizes: vec![2, 1],
            objective: SparseSym::from_entries([(0, 0, 0, -1.0)]),
            constraints: vec![Constraint {
                matrix: SparseSym::from_entries([(1, 0, 0, 0.5)]),
                rhs: 1.0,
            }],
        };
        let s = dump_problem(&p);
        assert!(s.starts_with("blocks 2 1\n"));
        assert!(s.contains("objective\n0,0,0,-1e0"));
        assert!(s.contains("constraint 0 rhs 1e0\n1,0,0,5e-1"));
    }
}
