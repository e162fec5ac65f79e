//! Colored Lovász number upper bounds via moment-matrix relaxations.
//!
//! Vertices of a bicolored exclusivity graph are modeled by abstract
//! projector generators A_i (first party) and B_i (second party) subject to
//! A_iA_j = 0 on first-color edges, B_iB_j = 0 on second-color edges,
//! [A_i, B_j] = 0, and idempotence.  A moment matrix over a word basis,
//! positive semidefinite with its identity moment pinned to 1, relaxes the
//! set of quantum behaviors P_i = ⟨A_iB_i⟩; maximizing Σ w_i ⟨A_iB_i⟩ over
//! it upper-bounds the colored Lovász number ϑ_c(𝒢, w).
//!
//! The relaxation models commuting-operator correlations, which contain the
//! tensor-product realizations the colored number is defined with — so it
//! bounds from above, as required.

use crate::graph::{ColoredExclusivityGraph, GraphError, WeightVector};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NpaError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("solver: {0}")]
    Sdp(#[from] sdp::SdpError),
    #[error("solver finished with status {0:?} (residuals {1:.2e}/{2:.2e}, gap {3:.2e})")]
    Status(sdp::SdpStatus, f64, f64, f64),
    #[error("moment matrix would have {0} words (cap {1})")]
    TooManyWords(usize, usize),
    #[error("relaxation would have {0} variable classes (cap {1})")]
    TooManyClasses(usize, usize),
}

/// Relaxation level: the word basis used for moment-matrix rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpaLevel {
    /// {1} ∪ {A_i} ∪ {B_i}.
    One,
    /// Level 1 plus all cross products A_iB_j.
    OnePlusAb,
    /// Level 1+AB plus same-party pairs A_iA_j, B_iB_j that survive
    /// orthogonality.
    Two,
}

impl NpaLevel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1" => Some(Self::One),
            "1ab" | "1+ab" | "1+AB" | "1AB" => Some(Self::OnePlusAb),
            "2" => Some(Self::Two),
            _ => None,
        }
    }
}

impl fmt::Display for NpaLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::One => write!(f, "1"),
            Self::OnePlusAb => write!(f, "1+AB"),
            Self::Two => write!(f, "2"),
        }
    }
}

/// A product of projector generators in normal order: all first-party
/// letters (in application order) before all second-party letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
}

impl Word {
    pub fn identity() -> Self {
        Word {
            a: vec![],
            b: vec![],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_empty() && self.b.is_empty()
    }

    /// Adjoint: each party's letter sequence reversed (projectors are
    /// self-adjoint, parties commute).
    pub fn adjoint(&self) -> Self {
        Word {
            a: self.a.iter().rev().copied().collect(),
            b: self.b.iter().rev().copied().collect(),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let mut first = true;
        for &l in &self.a {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "A{l}")?;
            first = false;
        }
        for &l in &self.b {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "B{l}")?;
            first = false;
        }
        Ok(())
    }
}

/// Reduce one party's letter sequence left to right: drop repeated letters
/// (idempotence), kill the word on same-color edges (orthogonality).  Both
/// rules only shorten or annihilate, and only ever inspect adjacent letters,
/// so this one pass reaches the unique normal form.
fn reduce_party(letters: &[u8], is_edge: &dyn Fn(u8, u8) -> bool) -> Option<Vec<u8>> {
    let mut out: Vec<u8> = Vec::with_capacity(letters.len());
    for &l in letters {
        if let Some(&top) = out.last() {
            if top == l {
                continue;
            }
            if is_edge(top, l) {
                return None;
            }
        }
        out.push(l);
    }
    Some(out)
}

/// Canonical form of a word under the graph's relations, or `None` for the
/// zero operator.
pub fn canonicalize(word: &Word, g: &ColoredExclusivityGraph) -> Option<Word> {
    let a = reduce_party(&word.a, &|x, y| g.has_edge_a(x as usize, y as usize))?;
    let b = reduce_party(&word.b, &|x, y| g.has_edge_b(x as usize, y as usize))?;
    Some(Word { a, b })
}

/// Product of two canonical words (u then v), canonicalized.
fn multiply(u: &Word, v: &Word, g: &ColoredExclusivityGraph) -> Option<Word> {
    let joined = Word {
        a: u.a.iter().chain(&v.a).copied().collect(),
        b: u.b.iter().chain(&v.b).copied().collect(),
    };
    canonicalize(&joined, g)
}

/// Moment entries share a variable exactly when their canonical products
/// agree up to adjoint; the class key is the smaller of the two forms.
fn class_key(product: Word) -> Word {
    let adj = product.adjoint();
    if adj < product {
        adj
    } else {
        product
    }
}

const WORD_CAP: usize = 400;
const CLASS_CAP: usize = 8000;

/// Word basis, variable classes, and objective bookkeeping of a relaxation.
#[derive(Debug, Clone)]
pub struct MomentStructure {
    /// Row/column words; index 0 is the identity.
    pub words: Vec<Word>,
    /// Per class: canonical monomial and its upper-triangle positions.
    pub classes: Vec<(Word, Vec<(usize, usize)>)>,
    /// Class index of the identity moment (pinned to 1).
    pub identity: usize,
    /// Class index of ⟨A_iB_i⟩ for each vertex i.
    pub vertex_class: Vec<usize>,
}

fn basis_words(g: &ColoredExclusivityGraph, level: NpaLevel) -> Result<Vec<Word>, NpaError> {
    let n = g.n();
    let mut words = vec![Word::identity()];
    for i in 0..n {
        words.push(Word {
            a: vec![i as u8],
            b: vec![],
        });
    }
    for i in 0..n {
        words.push(Word {
            a: vec![],
            b: vec![i as u8],
        });
    }
    if matches!(level, NpaLevel::OnePlusAb | NpaLevel::Two) {
        // The A_iB_i rows make the principal submatrix on {1} ∪ {A_iB_i}
        // a lifted theta system for the shadow (diagonal ⟨A_iB_i⟩ equals
        // the (1, A_iB_i) moment, colored edges zero the off-diagonal), so
        // from this level on the bound can never exceed ϑ(shadow, w).
        for i in 0..n {
            for j in 0..n {
                words.push(Word {
                    a: vec![i as u8],
                    b: vec![j as u8],
                });
            }
        }
    }
    if level == NpaLevel::Two {
        for i in 0..n {
            for k in 0..n {
                if i != k && !g.has_edge_a(i, k) {
                    words.push(Word {
                        a: vec![i as u8, k as u8],
                        b: vec![],
                    });
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                if i != k && !g.has_edge_b(i, k) {
                    words.push(Word {
                        a: vec![],
                        b: vec![i as u8, k as u8],
                    });
                }
            }
        }
    }
    if words.len() > WORD_CAP {
        return Err(NpaError::TooManyWords(words.len(), WORD_CAP));
    }
    Ok(words)
}

/// Build the word basis and the entry-to-variable classification for `g` at
/// the given level.
pub fn moment_structure(
    g: &ColoredExclusivityGraph,
    level: NpaLevel,
) -> Result<MomentStructure, NpaError> {
    let words = basis_words(g, level)?;
    let nw = words.len();
    let mut ids: BTreeMap<Word, usize> = BTreeMap::new();
    let mut classes: Vec<(Word, Vec<(usize, usize)>)> = Vec::new();
    for r in 0..nw {
        let radj = words[r].adjoint();
        for c in r..nw {
            let Some(product) = multiply(&radj, &words[c], g) else {
                continue; // structural zero of the moment matrix
            };
            let key = class_key(product);
            let id = *ids.entry(key.clone()).or_insert_with(|| {
                classes.push((key, Vec::new()));
                classes.len() - 1
            });
            classes[id].1.push((r, c));
        }
    }
    if classes.len() > CLASS_CAP {
        return Err(NpaError::TooManyClasses(classes.len(), CLASS_CAP));
    }
    let identity = *ids.get(&Word::identity()).expect("identity moment");
    let vertex_class = (0..g.n())
        .map(|i| {
            let w = Word {
                a: vec![i as u8],
                b: vec![i as u8],
            };
            *ids.get(&w).expect("vertex moment ⟨A_iB_i⟩")
        })
        .collect();
    Ok(MomentStructure {
        words,
        classes,
        identity,
        vertex_class,
    })
}

impl MomentStructure {
    /// Indicator matrix of a class: ⟨F_c, X⟩ sums X over the class's
    /// positions (both triangles).
    fn indicator(&self, class: usize, scale: f64) -> Vec<(usize, usize, usize, f64)> {
        self.classes[class]
            .1
            .iter()
            .map(|&(r, c)| (0usize, r, c, scale))
            .collect()
    }

    /// The variable-class table (monomial → id) as JSON, for cross-checking
    /// against other moment-relaxation implementations.
    pub fn class_table_json(&self) -> String {
        let table: BTreeMap<String, usize> = self
            .classes
            .iter()
            .enumerate()
            .map(|(id, (word, _))| (word.to_string(), id))
            .collect();
        serde_json::to_string_pretty(&table).expect("serializable table")
    }
}

/// A fully assembled relaxation: structure plus the SDP whose negated
/// optimum is the upper bound on ϑ_c(𝒢, w).
#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    pub structure: MomentStructure,
    pub problem: sdp::SdpProblem,
}

/// Assemble the level-`level` relaxation of max Σ w_i ⟨A_iB_i⟩.
///
/// The solver's dual variables are the moments: each non-identity class c
/// contributes a constraint ⟨F_c, X⟩ = −obj_c, the objective is −F_id, and
/// the dual slack Z = Σ y_c F_c + F_id is exactly the moment matrix M(y)
/// with the identity pinned to 1.  The relaxation value is the negated
/// solver optimum.
pub fn build_relaxation(
    g: &ColoredExclusivityGraph,
    w: &WeightVector,
    level: NpaLevel,
) -> Result<MomentRelaxation, NpaError> {
    w.validate(g.n())?;
    let structure = moment_structure(g, level)?;
    let nw = structure.words.len();
    let mut objective_of_class = vec![0.0; structure.classes.len()];
    for (i, &c) in structure.vertex_class.iter().enumerate() {
        objective_of_class[c] += w.0[i];
    }
    let mut constraints = Vec::with_capacity(structure.classes.len() - 1);
    for c in 0..structure.classes.len() {
        if c == structure.identity {
            continue;
        }
        constraints.push(sdp::Constraint {
            matrix: sdp::SparseSym::from_entries(structure.indicator(c, 1.0)),
            rhs: -objective_of_class[c],
        });
    }
    let problem = sdp::SdpProblem {
        block_sizes: vec![nw],
        objective: sdp::SparseSym::from_entries([(0, 0, 0, -1.0)]),
        constraints,
    };
    Ok(MomentRelaxation { structure, problem })
}

fn run(problem: &sdp::SdpProblem, tol: f64) -> Result<sdp::SdpSolution, NpaError> {
    let solution = sdp::solve(problem, tol, 300)?;
    // The solver re-certifies residuals on the iterate it returns, so a
    // stalled run whose best iterate already sits within a small multiple
    // of the tolerance is still a usable optimum.
    let worst = solution
        .rel_primal_residual
        .max(solution.rel_dual_residual)
        .max(solution.rel_gap);
    let near_optimal = matches!(
        solution.status,
        sdp::SdpStatus::MaxIter | sdp::SdpStatus::NumericalFailure
    ) && worst <= 100.0 * tol;
    if solution.status != sdp::SdpStatus::Optimal && !near_optimal {
        return Err(NpaError::Status(
            solution.status,
            solution.rel_primal_residual,
            solution.rel_dual_residual,
            solution.rel_gap,
        ));
    }
    Ok(solution)
}

/// Upper bound on the colored Lovász number ϑ_c(𝒢, w) at the given level.
///
/// Vertices of exactly zero weight are removed first: a moment assignment
/// for the pruned graph extends by zero rows to one for the full graph and
/// conversely restricts, so the two relaxations have the same optimum while
/// the pruned one stays much smaller.
pub fn theta_colored_upper(
    g: &ColoredExclusivityGraph,
    w: &WeightVector,
    level: NpaLevel,
    tol: f64,
) -> Result<f64, NpaError> {
    w.validate(g.n())?;
    let support: Vec<usize> = (0..g.n()).filter(|&i| w.0[i] != 0.0).collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    let (sub, weights) = if support.len() == g.n() {
        (g.clone(), w.clone())
    } else {
        (
            g.induced(&support)?,
            WeightVector(support.iter().map(|&i| w.0[i]).collect()),
        )
    };
    let relaxation = build_relaxation(&sub, &weights, level)?;
    let solution = run(&relaxation.problem, tol)?;
    Ok(-solution.objective)
}

/// Margin of a behavior inside the level-`level` relaxation: the largest t
/// with M(y) ⪰ tI over moment completions pinned to P.  Nonnegative (up to
/// solver noise) exactly when the relaxation admits P.
pub fn colored_membership_margin(
    p: &[f64],
    g: &ColoredExclusivityGraph,
    level: NpaLevel,
    tol: f64,
) -> Result<f64, NpaError> {
    let n = g.n();
    if p.len() != n {
        return Err(GraphError::WeightCount(p.len(), n).into());
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(GraphError::BadWeight(i, v).into());
        }
    }
    let structure = moment_structure(g, level)?;
    let nw = structure.words.len();
    let pinned: BTreeMap<usize, f64> = structure
        .vertex_class
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, p[i]))
        .collect();

    // Dual-side again: minimize over free moments the violation margin.
    // C = −(F_id + Σ_i P_i F_{c_i}); one zero-sum row per free class; one
    // trace row carrying the margin variable.
    let mut cost: Vec<(usize, usize, usize, f64)> = vec![(0, 0, 0, -1.0)];
    for (&c, &value) in &pinned {
        if value != 0.0 {
            cost.extend(structure.indicator(c, -value));
        }
    }
    let mut constraints = Vec::new();
    for c in 0..structure.classes.len() {
        if c == structure.identity || pinned.contains_key(&c) {
            continue;
        }
        constraints.push(sdp::Constraint {
            matrix: sdp::SparseSym::from_entries(structure.indicator(c, 1.0)),
            rhs: 0.0,
        });
    }
    constraints.push(sdp::Constraint {
        matrix: sdp::SparseSym::from_entries((0..nw).map(|k| (0, k, k, -1.0))),
        rhs: -1.0,
    });
    let problem = sdp::SdpProblem {
        block_sizes: vec![nw],
        objective: sdp::SparseSym::from_entries(cost),
        constraints,
    };
    let solution = run(&problem, tol)?;
    Ok(-solution.objective)
}

/// Does the relaxation admit the behavior P?  `false` certifies that no
/// quantum realization of the colored graph produces P; `true` is only
/// necessary.  The acceptance threshold scales with the solver tolerance.
pub fn colored_membership_upper(
    p: &[f64],
    g: &ColoredExclusivityGraph,
    level: NpaLevel,
    tol: f64,
) -> Result<bool, NpaError> {
    let margin = colored_membership_margin(p, g, level, tol)?;
    Ok(margin >= -(20.0 * tol).max(1e-7))
}
