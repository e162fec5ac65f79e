//! Independent sets, the weighted independence number, and membership in the
//! classical (stable-set) polytope.
//!
//! All routines work on the shadow of the input graph: which party can
//! distinguish two exclusive events does not matter classically, so the
//! classical sets of a colored graph and of its shadow coincide.

use crate::graph::{GraphError, ShadowAccess, WeightVector};

/// Exhaustive enumeration is exact only while bitsets and recursion stay
/// cheap; beyond this the classical layer refuses rather than approximate.
const ENUM_LIMIT: usize = 24;

/// A set of pairwise non-adjacent vertices (listed in increasing order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependentSet {
    pub members: Vec<usize>,
}

impl IndependentSet {
    /// 0/1 characteristic vector of the set.
    pub fn characteristic_vector(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for &v in &self.members {
            x[v] = 1.0;
        }
        x
    }
}

fn adjacency_masks<G: ShadowAccess>(g: &G) -> Result<Vec<u64>, GraphError> {
    let n = g.vertex_count();
    if n > ENUM_LIMIT {
        return Err(GraphError::TooLarge(n, ENUM_LIMIT));
    }
    let mut adj = vec![0u64; n];
    for (i, j) in g.shadow_edges() {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    Ok(adj)
}

/// All maximal independent sets of the shadow of `g`, via Bron–Kerbosch with
/// pivoting on the complement graph.
pub fn independent_sets<G: ShadowAccess>(g: &G) -> Result<Vec<IndependentSet>, GraphError> {
    let n = g.vertex_count();
    let adj = adjacency_masks(g)?;
    let full: u64 = if n == 64 { !0 } else { (1u64 << n) - 1 };
    // Complement adjacency: maximal independent sets of G are maximal
    // cliques of the complement.
    let comp: Vec<u64> = (0..n).map(|v| full & !adj[v] & !(1u64 << v)).collect();

    let mut out: Vec<u64> = Vec::new();
    fn expand(r: u64, mut p: u64, mut x: u64, comp: &[u64], out: &mut Vec<u64>) {
        if p == 0 && x == 0 {
            out.push(r);
            return;
        }
        // Pivot: vertex of P ∪ X with the most neighbors inside P.
        let mut pivot_best = u64::MAX;
        let mut pivot = 0usize;
        let mut cand = p | x;
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            let missed = (p & !comp[u]).count_ones() as u64;
            if missed < pivot_best {
                pivot_best = missed;
                pivot = u;
            }
        }
        let mut branch = p & !comp[pivot];
        while branch != 0 {
            let v = branch.trailing_zeros() as usize;
            branch &= branch - 1;
            let bit = 1u64 << v;
            expand(r | bit, p & comp[v], x & comp[v], comp, out);
            p &= !bit;
            x |= bit;
        }
    }
    expand(0, full, 0, &comp, &mut out);
    out.sort_unstable();

    Ok(out
        .into_iter()
        .map(|mask| {
            let mut members = Vec::with_capacity(mask.count_ones() as usize);
            let mut m = mask;
            while m != 0 {
                members.push(m.trailing_zeros() as usize);
                m &= m - 1;
            }
            IndependentSet { members }
        })
        .collect())
}

/// Compensated (Neumaier) sum: keeps the weighted sums reproducible down to
/// the last ulp even for adversarial weight orderings.
fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Weighted independence number: the classical bound on Σ w_i P_i.
pub fn alpha<G: ShadowAccess>(g: &G, w: &WeightVector) -> Result<f64, GraphError> {
    let n = g.vertex_count();
    w.validate(n)?;
    let sets = independent_sets(g)?;
    let mut best = 0.0f64;
    for set in &sets {
        let total = neumaier_sum(set.members.iter().map(|&v| w.0[v]));
        if total > best {
            best = total;
        }
    }
    Ok(best)
}

/// Like [`alpha`], also returning one maximizing independent set.
pub fn alpha_with_set<G: ShadowAccess>(
    g: &G,
    w: &WeightVector,
) -> Result<(f64, IndependentSet), GraphError> {
    let n = g.vertex_count();
    w.validate(n)?;
    let sets = independent_sets(g)?;
    let mut best = 0.0f64;
    let mut best_set = IndependentSet { members: vec![] };
    for set in sets {
        let total = neumaier_sum(set.members.iter().map(|&v| w.0[v]));
        if total > best {
            best = total;
            best_set = set;
        }
    }
    Ok((best, best_set))
}

/// Is `p` a convex combination of independent-set characteristic vectors?
///
/// Because the polytope is down-closed (any entry of a classical behavior can
/// be lowered freely), the test is the linear feasibility program
/// Σ_j λ_j χ_{S_j} ≥ p, Σ_j λ_j = 1, λ ≥ 0 over the maximal sets only.
pub fn classical_membership<G: ShadowAccess>(p: &[f64], g: &G) -> Result<bool, GraphError> {
    let n = g.vertex_count();
    if p.len() != n {
        return Err(GraphError::WeightCount(p.len(), n));
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(GraphError::BadWeight(i, v));
        }
    }
    let sets = independent_sets(g)?;
    let k = sets.len();

    // LP as a diagonal SDP: scalar blocks λ_0..λ_{k-1}, s_0..s_{n-1} (all
    // ≥ 0 via PSD); rows: Σλ = 1 and Σ_{j∋i} λ_j − s_i = p_i per vertex.
    let mut constraints = Vec::with_capacity(1 + n);
    let ones: Vec<(usize, usize, usize, f64)> = (0..k).map(|j| (j, 0, 0, 1.0)).collect();
    constraints.push(sdp::Constraint {
        matrix: sdp::SparseSym::from_entries(ones),
        rhs: 1.0,
    });
    for i in 0..n {
        let mut entries: Vec<(usize, usize, usize, f64)> = sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.members.binary_search(&i).is_ok())
            .map(|(j, _)| (j, 0, 0, 1.0))
            .collect();
        entries.push((k + i, 0, 0, -1.0));
        constraints.push(sdp::Constraint {
            matrix: sdp::SparseSym::from_entries(entries),
            rhs: p[i],
        });
    }
    let problem = sdp::SdpProblem {
        block_sizes: vec![1; k + n],
        objective: sdp::SparseSym::from_entries([]),
        constraints,
    };
    let report = sdp::feasibility(&problem, 1e-9)
        .map_err(|e| GraphError::Inconsistent(format!("membership LP: {e}")))?;
    Ok(report.feasible)
}
