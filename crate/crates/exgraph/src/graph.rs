//! Two-party events, bicolored exclusivity graphs, isomorphism, and the
//! shadow-family enumeration.
//!
//! An *event* records one outcome per party for one measurement setting per
//! party.  Two events are exclusive *for a party* when that party uses the
//! same setting in both but reports different outcomes; each party therefore
//! induces its own edge color on the event set.  The union of the two colors
//! is the *shadow* — the plain exclusivity graph that forgets which party
//! can tell the events apart.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot parse event '{0}': expected outcomes|settings with equal lengths")]
    Parse(String),
    #[error("events have different party counts ({0} vs {1})")]
    Arity(usize, usize),
    #[error("only two-party events are supported here (got {0} parties)")]
    Parties(usize),
    #[error("vertex index {0} out of range for {1} vertices")]
    VertexRange(usize, usize),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("label count {0} does not match vertex count {1}")]
    LabelCount(usize, usize),
    #[error("{0} vertices exceed the exact-canonicalization limit of {1}")]
    TooLarge(usize, usize),
    #[error("family of 3^{0} resolutions is too large to enumerate")]
    FamilyTooLarge(usize),
    #[error("weight vector has {0} entries for {1} vertices")]
    WeightCount(usize, usize),
    #[error("weight {1} at position {0} is negative or not finite")]
    BadWeight(usize, f64),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Inconsistent(String),
}

/// One outcome per party, one setting per party.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub outcomes: Vec<u8>,
    pub settings: Vec<u8>,
}

impl Event {
    pub fn new(outcomes: Vec<u8>, settings: Vec<u8>) -> Result<Self, GraphError> {
        if outcomes.len() != settings.len() || outcomes.is_empty() {
            return Err(GraphError::Parse(format!("{outcomes:?}|{settings:?}")));
        }
        Ok(Self { outcomes, settings })
    }

    /// Parse `"ab|xy"` (any party count; one digit per party).
    pub fn parse(s: &str) -> Result<Self, GraphError> {
        let (o, x) = s
            .split_once('|')
            .ok_or_else(|| GraphError::Parse(s.into()))?;
        let digits = |part: &str| -> Result<Vec<u8>, GraphError> {
            part.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| GraphError::Parse(s.into()))
                })
                .collect()
        };
        Self::new(digits(o)?, digits(x)?)
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            write!(f, "{o}")?;
        }
        write!(f, "|")?;
        for s in &self.settings {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Per-party exclusivity of two two-party events: `(alice, bob)` where a
/// party is exclusive iff its settings agree and its outcomes differ.
pub fn exclusive(v1: &Event, v2: &Event) -> Result<(bool, bool), GraphError> {
    if v1.parties() != v2.parties() {
        return Err(GraphError::Arity(v1.parties(), v2.parties()));
    }
    if v1.parties() != 2 {
        return Err(GraphError::Parties(v1.parties()));
    }
    let per_party = |p: usize| v1.settings[p] == v2.settings[p] && v1.outcomes[p] != v2.outcomes[p];
    Ok((per_party(0), per_party(1)))
}

fn normalize_edges(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Result<BTreeSet<(usize, usize)>, GraphError> {
    let mut out = BTreeSet::new();
    for (i, j) in edges {
        if i >= n {
            return Err(GraphError::VertexRange(i, n));
        }
        if j >= n {
            return Err(GraphError::VertexRange(j, n));
        }
        if i == j {
            return Err(GraphError::SelfLoop(i, j));
        }
        out.insert((i.min(j), i.max(j)));
    }
    Ok(out)
}

fn check_labels(n: usize, labels: &Option<Vec<Event>>) -> Result<(), GraphError> {
    if let Some(l) = labels {
        if l.len() != n {
            return Err(GraphError::LabelCount(l.len(), n));
        }
    }
    Ok(())
}

/// An undirected simple graph, optionally labeled by events.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    labels: Option<Vec<Event>>,
}

impl SimpleGraph {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        labels: Option<Vec<Event>>,
    ) -> Result<Self, GraphError> {
        check_labels(n, &labels)?;
        Ok(Self {
            n,
            edges: normalize_edges(n, edges)?,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[Event]> {
        self.labels.as_deref()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Induced subgraph on `keep` (which must be sorted and in range);
    /// vertex `keep[t]` becomes vertex `t`.
    pub fn induced(&self, keep: &[usize]) -> Result<Self, GraphError> {
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(t, &v)| (v, t)).collect();
        for &v in keep {
            if v >= self.n {
                return Err(GraphError::VertexRange(v, self.n));
            }
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(i, j)| Some((*pos.get(&i)?, *pos.get(&j)?)));
        let labels = self
            .labels
            .as_ref()
            .map(|l| keep.iter().map(|&v| l[v].clone()).collect());
        Self::new(keep.len(), edges, labels)
    }

    pub fn to_json_string(&self) -> Result<String, GraphError> {
        let dto = SimpleGraphDto {
            n: self.n,
            labels: self
                .labels
                .as_ref()
                .map(|l| l.iter().map(|e| e.to_string()).collect()),
            edges: self.edges.iter().copied().collect(),
        };
        Ok(serde_json::to_string_pretty(&dto)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let dto: SimpleGraphDto = serde_json::from_str(s)?;
        let labels = dto
            .labels
            .map(|l| l.iter().map(|s| Event::parse(s)).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        Self::new(dto.n, dto.edges, labels)
    }
}

/// A bicolored exclusivity graph: one edge color per party.  An edge present
/// in both colors is a *double* edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredExclusivityGraph {
    n: usize,
    edges_a: BTreeSet<(usize, usize)>,
    edges_b: BTreeSet<(usize, usize)>,
    labels: Option<Vec<Event>>,
}

impl ColoredExclusivityGraph {
    pub fn new(
        n: usize,
        edges_a: impl IntoIterator<Item = (usize, usize)>,
        edges_b: impl IntoIterator<Item = (usize, usize)>,
        labels: Option<Vec<Event>>,
    ) -> Result<Self, GraphError> {
        check_labels(n, &labels)?;
        Ok(Self {
            n,
            edges_a: normalize_edges(n, edges_a)?,
            edges_b: normalize_edges(n, edges_b)?,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges_a(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges_a
    }

    pub fn edges_b(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges_b
    }

    pub fn labels(&self) -> Option<&[Event]> {
        self.labels.as_deref()
    }

    /// Edges present in both colors.
    pub fn doubles(&self) -> Vec<(usize, usize)> {
        self.edges_a.intersection(&self.edges_b).copied().collect()
    }

    pub fn has_edge_a(&self, i: usize, j: usize) -> bool {
        self.edges_a.contains(&(i.min(j), i.max(j)))
    }

    pub fn has_edge_b(&self, i: usize, j: usize) -> bool {
        self.edges_b.contains(&(i.min(j), i.max(j)))
    }

    /// Induced subgraph on `keep`, renumbering as in [`SimpleGraph::induced`].
    pub fn induced(&self, keep: &[usize]) -> Result<Self, GraphError> {
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(t, &v)| (v, t)).collect();
        for &v in keep {
            if v >= self.n {
                return Err(GraphError::VertexRange(v, self.n));
            }
        }
        let map = |set: &BTreeSet<(usize, usize)>| -> Vec<(usize, usize)> {
            set.iter()
                .filter_map(|&(i, j)| Some((*pos.get(&i)?, *pos.get(&j)?)))
                .collect()
        };
        let labels = self
            .labels
            .as_ref()
            .map(|l| keep.iter().map(|&v| l[v].clone()).collect());
        Self::new(keep.len(), map(&self.edges_a), map(&self.edges_b), labels)
    }

    pub fn to_json_string(&self) -> Result<String, GraphError> {
        let dto = ColoredGraphDto {
            n: self.n,
            labels: self
                .labels
                .as_ref()
                .map(|l| l.iter().map(|e| e.to_string()).collect()),
            edges_a: self.edges_a.iter().copied().collect(),
            edges_b: self.edges_b.iter().copied().collect(),
        };
        Ok(serde_json::to_string_pretty(&dto)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let dto: ColoredGraphDto = serde_json::from_str(s)?;
        let labels = dto
            .labels
            .map(|l| l.iter().map(|s| Event::parse(s)).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        Self::new(dto.n, dto.edges_a, dto.edges_b, labels)
    }
}

#[derive(Serialize, Deserialize)]
struct SimpleGraphDto {
    n: usize,
    labels: Option<Vec<String>>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct ColoredGraphDto {
    n: usize,
    labels: Option<Vec<String>>,
    edges_a: Vec<(usize, usize)>,
    edges_b: Vec<(usize, usize)>,
}

/// Anything that exposes a vertex count and a shadow edge set.  Lets the
/// classical-set routines accept simple and colored graphs alike.
pub trait ShadowAccess {
    fn vertex_count(&self) -> usize;
    fn shadow_edges(&self) -> Vec<(usize, usize)>;
}

impl ShadowAccess for SimpleGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn shadow_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().copied().collect()
    }
}

impl ShadowAccess for ColoredExclusivityGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn shadow_edges(&self) -> Vec<(usize, usize)> {
        self.edges_a.union(&self.edges_b).copied().collect()
    }
}

impl<T: ShadowAccess + ?Sized> ShadowAccess for &T {
    fn vertex_count(&self) -> usize {
        (**self).vertex_count()
    }
    fn shadow_edges(&self) -> Vec<(usize, usize)> {
        (**self).shadow_edges()
    }
}

/// Nonnegative vertex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn validate(&self, n: usize) -> Result<(), GraphError> {
        if self.0.len() != n {
            return Err(GraphError::WeightCount(self.0.len(), n));
        }
        for (i, &w) in self.0.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(GraphError::BadWeight(i, w));
            }
        }
        Ok(())
    }
}

/// Build the colored exclusivity graph of a list of two-party events.
pub fn build_colored_graph(events: &[Event]) -> Result<ColoredExclusivityGraph, GraphError> {
    let n = events.len();
    let mut ea = Vec::new();
    let mut eb = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = exclusive(&events[i], &events[j])?;
            if a {
                ea.push((i, j));
            }
            if b {
                eb.push((i, j));
            }
        }
    }
    ColoredExclusivityGraph::new(n, ea, eb, Some(events.to_vec()))
}

/// Forget colors: the union graph.
pub fn shadow(g: &ColoredExclusivityGraph) -> SimpleGraph {
    SimpleGraph {
        n: g.n,
        edges: g.edges_a.union(&g.edges_b).copied().collect(),
        labels: g.labels.clone(),
    }
}

/// The eight stabilizer events of the tilted two-setting scenario in
/// canonical circulant order: the shadow is the circulant graph Ci8(1, 4),
/// the first color carries the even cycle steps plus all four diagonals,
/// the second color the odd steps plus the diagonals.
pub fn chsh_colored() -> ColoredExclusivityGraph {
    let spec = [
        "00|00", "11|01", "10|11", "00|10", "11|00", "00|01", "01|11", "11|10",
    ];
    let events: Vec<Event> = spec.iter().map(|s| Event::parse(s).unwrap()).collect();
    build_colored_graph(&events).unwrap()
}

/// Shadow of [`chsh_colored`]: the circulant graph Ci8(1, 4).
pub fn chsh_shadow() -> SimpleGraph {
    shadow(&chsh_colored())
}

/// The k-th member (k = 0..=4) of the double-resolution chain used for the
/// comparison table: the first k diagonals, in the fixed order (2,6), (0,4),
/// (1,5), (3,7), are resolved toward the first color (removed from the
/// second).  Labels run 44,44 → 44,43 → 44,33 → 44,311 → 44,1111.
pub fn chain_member(k: usize) -> Result<ColoredExclusivityGraph, GraphError> {
    const ORDER: [(usize, usize); 4] = [(2, 6), (0, 4), (1, 5), (3, 7)];
    if k > 4 {
        return Err(GraphError::VertexRange(k, 5));
    }
    let g = chsh_colored();
    let removed = &ORDER[..k];
    let eb: Vec<(usize, usize)> = g
        .edges_b()
        .iter()
        .copied()
        .filter(|e| !removed.contains(e))
        .collect();
    ColoredExclusivityGraph::new(
        8,
        g.edges_a().iter().copied().collect::<Vec<_>>(),
        eb,
        Some(g.labels().unwrap().to_vec()),
    )
}

/// The 44,1111 chain endpoint: every diagonal resolved toward the first
/// color, leaving the second color a perfect matching.
pub fn g44_1111() -> ColoredExclusivityGraph {
    chain_member(4).unwrap()
}

/// The balanced 33,33 member: diagonals (1,5), (3,7) stay in the first
/// color, (0,4), (2,6) in the second; each color splits into two paths of
/// three edges.
pub fn g33_33() -> ColoredExclusivityGraph {
    let g = chsh_colored();
    let keep_a = [(1, 5), (3, 7)];
    let keep_b = [(0, 4), (2, 6)];
    let ea: Vec<(usize, usize)> = g
        .edges_a()
        .iter()
        .copied()
        .filter(|e| !g.edges_b().contains(e) || keep_a.contains(e))
        .collect();
    let eb: Vec<(usize, usize)> = g
        .edges_b()
        .iter()
        .copied()
        .filter(|e| !g.edges_a().contains(e) || keep_b.contains(e))
        .collect();
    ColoredExclusivityGraph::new(8, ea, eb, Some(g.labels().unwrap().to_vec())).unwrap()
}

/// Witness of a colored isomorphism: `perm[v]` is the image of vertex `v`;
/// `color_swapped` says whether the colors were exchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoWitness {
    pub perm: Vec<usize>,
    pub color_swapped: bool,
}

/// Adjacency color codes: bit 0 = first color, bit 1 = second color.
fn color_matrix(g: &ColoredExclusivityGraph) -> Vec<u8> {
    let n = g.n();
    let mut m = vec![0u8; n * n];
    for &(i, j) in g.edges_a() {
        m[i * n + j] |= 1;
        m[j * n + i] |= 1;
    }
    for &(i, j) in g.edges_b() {
        m[i * n + j] |= 2;
        m[j * n + i] |= 2;
    }
    m
}

fn swap_code(c: u8) -> u8 {
    match c {
        1 => 2,
        2 => 1,
        other => other,
    }
}

/// Decide colored isomorphism by signature-pruned backtracking; returns a
/// witness permutation (and whether colors were swapped, if allowed).
pub fn colored_isomorphic(
    g1: &ColoredExclusivityGraph,
    g2: &ColoredExclusivityGraph,
    allow_color_swap: bool,
) -> Option<IsoWitness> {
    if g1.n() != g2.n() {
        return None;
    }
    let n = g1.n();
    let m1 = color_matrix(g1);
    let m2 = color_matrix(g2);
    let signature = |m: &[u8], v: usize, swapped: bool| -> (usize, usize, usize) {
        let mut only_a = 0;
        let mut only_b = 0;
        let mut both = 0;
        for u in 0..n {
            match if swapped { swap_code(m[v * n + u]) } else { m[v * n + u] } {
                1 => only_a += 1,
                2 => only_b += 1,
                3 => both += 1,
                _ => {}
            }
        }
        (only_a, only_b, both)
    };

    let attempt = |swapped: bool| -> Option<Vec<usize>> {
        let sig1: Vec<_> = (0..n).map(|v| signature(&m1, v, false)).collect();
        let sig2: Vec<_> = (0..n).map(|v| signature(&m2, v, swapped)).collect();
        {
            let mut s1 = sig1.clone();
            let mut s2 = sig2.clone();
            s1.sort_unstable();
            s2.sort_unstable();
            if s1 != s2 {
                return None;
            }
        }
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn backtrack(
            v: usize,
            n: usize,
            m1: &[u8],
            m2: &[u8],
            sig1: &[(usize, usize, usize)],
            sig2: &[(usize, usize, usize)],
            swapped: bool,
            perm: &mut [usize],
            used: &mut [bool],
        ) -> bool {
            if v == n {
                return true;
            }
            for img in 0..n {
                if used[img] || sig1[v] != sig2[img] {
                    continue;
                }
                let ok = (0..v).all(|u| {
                    let want = m1[v * n + u];
                    let got = m2[img * n + perm[u]];
                    want == if swapped { swap_code(got) } else { got }
                });
                if ok {
                    perm[v] = img;
                    used[img] = true;
                    if backtrack(v + 1, n, m1, m2, sig1, sig2, swapped, perm, used) {
                        return true;
                    }
                    used[img] = false;
                    perm[v] = usize::MAX;
                }
            }
            false
        }
        if backtrack(0, n, &m1, &m2, &sig1, &sig2, swapped, &mut perm, &mut used) {
            Some(perm)
        } else {
            None
        }
    };

    if let Some(perm) = attempt(false) {
        return Some(IsoWitness {
            perm,
            color_swapped: false,
        });
    }
    if allow_color_swap {
        if let Some(perm) = attempt(true) {
            return Some(IsoWitness {
                perm,
                color_swapped: true,
            });
        }
    }
    None
}

/// Iterative Heap's algorithm over permutations of `0..n`.
fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

const CANON_LIMIT: usize = 10;

fn pair_bit(n: usize, i: usize, j: usize) -> u32 {
    debug_assert!(i < j);
    (i * n - i * (i + 1) / 2 + (j - i - 1)) as u32
}

/// Exact canonical encodings under vertex permutations: `plain` minimizes
/// the (color1, color2) bitmask pair; `swapped` additionally minimizes over
/// the color exchange.  Equality of encodings is isomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    pub plain: (u64, u64),
    pub swapped: (u64, u64),
}

pub fn canonical_form(g: &ColoredExclusivityGraph) -> Result<CanonicalForm, GraphError> {
    let n = g.n();
    if n > CANON_LIMIT {
        return Err(GraphError::TooLarge(n, CANON_LIMIT));
    }
    let ea: Vec<(usize, usize)> = g.edges_a().iter().copied().collect();
    let eb: Vec<(usize, usize)> = g.edges_b().iter().copied().collect();
    let mut best_plain = (u64::MAX, u64::MAX);
    let mut best_swap = (u64::MAX, u64::MAX);
    for_each_permutation(n, |perm| {
        let mask = |edges: &[(usize, usize)]| -> u64 {
            let mut m = 0u64;
            for &(i, j) in edges {
                let (pi, pj) = (perm[i], perm[j]);
                m |= 1u64 << pair_bit(n, pi.min(pj), pi.max(pj));
            }
            m
        };
        let a = mask(&ea);
        let b = mask(&eb);
        if (a, b) < best_plain {
            best_plain = (a, b);
        }
        let lo = if (a, b) < (b, a) { (a, b) } else { (b, a) };
        if lo < best_swap {
            best_swap = lo;
        }
    });
    Ok(CanonicalForm {
        plain: best_plain,
        swapped: best_swap,
    })
}

/// Sizes (in edges) of the connected components of one color class, largest
/// first, written without separators ("44", "311", "1111").
fn component_code(n: usize, edges: &BTreeSet<(usize, usize)>) -> String {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for &(i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
        }
    }
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for &(i, _) in edges {
        let r = find(&mut parent, i);
        *count.entry(r).or_insert(0) += 1;
    }
    let mut sizes: Vec<usize> = count.values().copied().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    if sizes.is_empty() {
        return "0".into();
    }
    sizes
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("")
}

/// Base label of a colored graph: the two per-color component codes, larger
/// first, comma separated ("44,43").  Component sizes of ten or more would
/// need a separator; in-scope graphs stay single-digit.
pub fn base_label(g: &ColoredExclusivityGraph) -> String {
    let a = component_code(g.n(), g.edges_a());
    let b = component_code(g.n(), g.edges_b());
    if a >= b {
        format!("{a},{b}")
    } else {
        format!("{b},{a}")
    }
}

/// The family of a colored graph: every resolution of its double edges (keep
/// the double, or delete either color), deduplicated up to colored
/// isomorphism with color swap.
#[derive(Debug, Clone)]
pub struct FamilyEnumeration {
    /// One representative per isomorphism class, in first-seen order of the
    /// base-3 resolution sweep (member 0 is the input graph).
    pub members: Vec<ColoredExclusivityGraph>,
    /// Labels with deterministic superscripts distinguishing classes that
    /// share a base label ("44,33^1", "44,33^2").
    pub labels: Vec<String>,
    /// `(i, j)` when some resolution in class `i` yields a graph in class
    /// `j` by deleting exactly one color instance of one double edge.
    pub covering: Vec<(usize, usize)>,
    /// Class count when color swap is NOT allowed in the deduplication.
    pub count_without_swap: usize,
}

pub fn enumerate_shadow_family(
    g: &ColoredExclusivityGraph,
) -> Result<FamilyEnumeration, GraphError> {
    let doubles = g.doubles();
    let d = doubles.len();
    if d > 8 {
        return Err(GraphError::FamilyTooLarge(d));
    }
    let total = 3usize.pow(d as u32);

    // Build each resolution: digit 0 keeps the double, 1 keeps only the
    // first color, 2 keeps only the second.
    let resolve = |assignment: usize| -> ColoredExclusivityGraph {
        let mut ea = g.edges_a().clone();
        let mut eb = g.edges_b().clone();
        let mut a = assignment;
        for &(i, j) in &doubles {
            match a % 3 {
                1 => {
                    eb.remove(&(i, j));
                }
                2 => {
                    ea.remove(&(i, j));
                }
                _ => {}
            }
            a /= 3;
        }
        ColoredExclusivityGraph {
            n: g.n(),
            edges_a: ea,
            edges_b: eb,
            labels: g.labels.clone(),
        }
    };

    let mut class_of = vec![usize::MAX; total];
    let mut class_by_canon: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut plain_canons: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut members: Vec<ColoredExclusivityGraph> = Vec::new();
    let mut canon_of_class: Vec<(u64, u64)> = Vec::new();
    for a in 0..total {
        let resolved = resolve(a);
        let canon = canonical_form(&resolved)?;
        plain_canons.insert(canon.plain);
        let id = *class_by_canon.entry(canon.swapped).or_insert_with(|| {
            members.push(resolved);
            canon_of_class.push(canon.swapped);
            members.len() - 1
        });
        class_of[a] = id;
    }

    // Covering: delete one color instance of one still-double edge.
    let mut covering: BTreeSet<(usize, usize)> = BTreeSet::new();
    for a in 0..total {
        let mut pow = 1usize;
        let mut rest = a;
        for _ in 0..d {
            if rest % 3 == 0 {
                for step in [1usize, 2] {
                    let child = a + step * pow;
                    covering.insert((class_of[a], class_of[child]));
                }
            }
            pow *= 3;
            rest /= 3;
        }
    }

    // Labels: group classes by base label, rank groups of two or more by
    // canonical encoding, append "^rank".
    let bases: Vec<String> = members.iter().map(base_label).collect();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, base) in bases.iter().enumerate() {
        groups.entry(base).or_default().push(idx);
    }
    let mut labels = bases.clone();
    for ids in groups.values() {
        if ids.len() < 2 {
            continue;
        }
        let mut ranked: Vec<usize> = ids.clone();
        ranked.sort_by_key(|&idx| canon_of_class[idx]);
        for (rank, &idx) in ranked.iter().enumerate() {
            labels[idx] = format!("{}^{}", bases[idx], rank + 1);
        }
    }

    Ok(FamilyEnumeration {
        members,
        labels,
        covering: covering.into_iter().collect(),
        count_without_swap: plain_canons.len(),
    })
}

/// Label of a colored graph within its shadow family.  When the graph
/// carries event labels the family is rebuilt from the full exclusivity
/// structure of those events, so superscripts are globally consistent across
/// every member of the same family; unlabeled graphs are ranked within the
/// family generated by their own double edges.
pub fn family_label(g: &ColoredExclusivityGraph) -> Result<String, GraphError> {
    let parent = match g.labels() {
        Some(events) => {
            let full = build_colored_graph(events)?;
            // The labeled graph must be a resolution of its own event
            // structure; otherwise fall back to the graph itself.
            let consistent = g
                .edges_a()
                .is_subset(full.edges_a())
                && g.edges_b().is_subset(full.edges_b())
                && shadow(g).edges() == shadow(&full).edges();
            if consistent {
                full
            } else {
                g.clone()
            }
        }
        None => g.clone(),
    };
    let fam = enumerate_shadow_family(&parent)?;
    let target = canonical_form(g)?.swapped;
    for (idx, member) in fam.members.iter().enumerate() {
        if canonical_form(member)?.swapped == target {
            return Ok(fam.labels[idx].clone());
        }
    }
    // Not a resolution of the parent (possible only in the fallback path).
    Ok(base_label(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_parse_and_display_round_trip() {
        let e = Event::parse("01|10").unwrap();
        assert_eq!(e.outcomes, vec![0, 1]);
        assert_eq!(e.settings, vec![1, 0]);
        assert_eq!(e.to_string(), "01|10");
        assert!(Event::parse("0110").is_err());
        assert!(Event::parse("01|1").is_err());
    }

    #[test]
    fn exclusivity_is_per_party() {
        let a = Event::parse("00|00").unwrap();
        let b = Event::parse("11|00").unwrap();
        assert_eq!(exclusive(&a, &b).unwrap(), (true, true));
        let c = Event::parse("10|00").unwrap();
        assert_eq!(exclusive(&a, &c).unwrap(), (true, false));
        let d = Event::parse("00|11").unwrap();
        assert_eq!(exclusive(&a, &d).unwrap(), (false, false));
    }

    #[test]
    fn canonical_chsh_structure() {
        let g = chsh_colored();
        assert_eq!(g.n(), 8);
        let diag: BTreeSet<_> = [(0, 4), (1, 5), (2, 6), (3, 7)].into_iter().collect();
        let ea_expect: BTreeSet<_> = [(0, 1), (2, 3), (4, 5), (6, 7)]
            .into_iter()
            .chain(diag.iter().copied())
            .collect();
        let eb_expect: BTreeSet<_> = [(1, 2), (3, 4), (5, 6), (0, 7)]
            .into_iter()
            .chain(diag.iter().copied())
            .collect();
        assert_eq!(g.edges_a(), &ea_expect);
        assert_eq!(g.edges_b(), &eb_expect);
        assert_eq!(g.doubles(), diag.into_iter().collect::<Vec<_>>());

        // Shadow is the circulant Ci8(1, 4).
        let s = chsh_shadow();
        let mut expect = BTreeSet::new();
        for i in 0..8usize {
            let j = (i + 1) % 8;
            expect.insert((i.min(j), i.max(j)));
            let k = (i + 4) % 8;
            expect.insert((i.min(k), i.max(k)));
        }
        assert_eq!(s.edges(), &expect);
    }

    #[test]
    fn pentagon_mask_leaves_a_five_cycle() {
        let s = chsh_shadow();
        let sub = s.induced(&[2, 3, 4, 5, 6]).unwrap();
        let expect: BTreeSet<_> = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)].into_iter().collect();
        assert_eq!(sub.edges(), &expect);
    }

    #[test]
    fn known_independent_triple() {
        let s = chsh_shadow();
        for &(i, j) in &[(0usize, 3usize), (0, 5), (3, 5)] {
            assert!(!s.has_edge(i, j), "({i},{j}) should be independent");
        }
    }

    #[test]
    fn chsh_has_color_swap_symmetry() {
        let g = chsh_colored();
        let swapped = ColoredExclusivityGraph::new(
            g.n(),
            g.edges_b().iter().copied().collect::<Vec<_>>(),
            g.edges_a().iter().copied().collect::<Vec<_>>(),
            None,
        )
        .unwrap();
        let w = colored_isomorphic(&g, &swapped, true).expect("isomorphic");
        // Verify the witness really maps edges onto edges.
        for &(i, j) in g.edges_a() {
            let (pi, pj) = (w.perm[i], w.perm[j]);
            let target = if w.color_swapped {
                swapped.has_edge_b(pi, pj)
            } else {
                swapped.has_edge_a(pi, pj)
            };
            assert!(target);
        }
    }

    #[test]
    fn isomorphism_distinguishes_colors() {
        // Path with mixed colors vs path with one color.
        let g1 = ColoredExclusivityGraph::new(3, [(0, 1)], [(1, 2)], None).unwrap();
        let g2 = ColoredExclusivityGraph::new(3, [(0, 1), (1, 2)], [], None).unwrap();
        assert!(colored_isomorphic(&g1, &g2, true).is_none());
        let g3 = ColoredExclusivityGraph::new(3, [(1, 2)], [(0, 1)], None).unwrap();
        assert!(colored_isomorphic(&g1, &g3, false).is_some()); // relabel 0<->2
        assert_eq!(
            colored_isomorphic(&g1, &g2, false),
            None,
        );
    }

    #[test]
    fn base_labels_match_component_structure() {
        let g = chsh_colored();
        assert_eq!(base_label(&g), "44,44");
        // Remove one diagonal from color B: components 4 and 3.
        let mut eb: Vec<_> = g.edges_b().iter().copied().collect();
        eb.retain(|&e| e != (2, 6));
        let h = ColoredExclusivityGraph::new(
            8,
            g.edges_a().iter().copied().collect::<Vec<_>>(),
            eb,
            None,
        )
        .unwrap();
        assert_eq!(base_label(&h), "44,43");
    }

    #[test]
    fn small_family_enumerates_resolutions() {
        // One double edge: the family is {double, color-1 only, color-2 only};
        // with swap allowed the two single-color resolutions merge.
        let g = ColoredExclusivityGraph::new(2, [(0, 1)], [(0, 1)], None).unwrap();
        let fam = enumerate_shadow_family(&g).unwrap();
        assert_eq!(fam.members.len(), 2);
        assert_eq!(fam.count_without_swap, 3);
        assert_eq!(fam.covering, vec![(0, 1)]);
    }

    #[test]
    fn chsh_family_has_fifteen_classes() {
        let fam = enumerate_shadow_family(&chsh_colored()).unwrap();
        assert_eq!(fam.members.len(), 15);
        assert_eq!(fam.count_without_swap, 27);
        assert_eq!(fam.labels[0], "44,44");
        // Every class must be reachable from the unresolved graph.
        let mut reach = vec![false; 15];
        reach[0] = true;
        for _ in 0..15 {
            for &(i, j) in &fam.covering {
                if reach[i] {
                    reach[j] = true;
                }
            }
        }
        assert!(reach.iter().all(|&r| r));
        // Labels are unique.
        let set: BTreeSet<_> = fam.labels.iter().collect();
        assert_eq!(set.len(), 15);
    }

    #[test]
    fn chain_members_carry_expected_labels() {
        let g = chsh_colored();
        let ea: Vec<_> = g.edges_a().iter().copied().collect();
        let chain_graph = |resolved: &[(usize, usize)]| {
            let eb: Vec<_> = g
                .edges_b()
                .iter()
                .copied()
                .filter(|e| !resolved.contains(e))
                .collect();
            ColoredExclusivityGraph::new(8, ea.clone(), eb, Some(g.labels().unwrap().to_vec()))
                .unwrap()
        };
        let steps: [&[(usize, usize)]; 5] = [
            &[],
            &[(2, 6)],
            &[(2, 6), (0, 4)],
            &[(2, 6), (0, 4), (1, 5)],
            &[(2, 6), (0, 4), (1, 5), (3, 7)],
        ];
        let labels: Vec<String> = steps
            .iter()
            .map(|r| family_label(&chain_graph(r)).unwrap())
            .collect();
        assert_eq!(labels[0], "44,44");
        assert_eq!(labels[1], "44,43");
        assert!(labels[2].starts_with("44,33^"));
        assert_eq!(labels[3], "44,311");
        assert_eq!(labels[4], "44,1111");
    }

    #[test]
    fn named_builders_match_their_labels() {
        for k in 0..=4 {
            let g = chain_member(k).unwrap();
            assert_eq!(g.edges_a().len(), 8);
            assert_eq!(g.edges_b().len(), 8 - k);
        }
        assert!(chain_member(5).is_err());
        assert_eq!(family_label(&g44_1111()).unwrap(), "44,1111");

        let g = g33_33();
        assert_eq!(g.edges_a().len(), 6);
        assert_eq!(g.edges_b().len(), 6);
        assert!(g.doubles().is_empty());
        assert_eq!(family_label(&g).unwrap(), "33,33");
        // Second color keeps (0,4) and (2,6); first color keeps the other two
        // diagonals.
        assert!(g.has_edge_b(0, 4) && g.has_edge_b(2, 6));
        assert!(g.has_edge_a(1, 5) && g.has_edge_a(3, 7));
        assert!(!g.has_edge_a(0, 4) && !g.has_edge_b(1, 5));
    }

    #[test]
    fn json_round_trip() {
        let g = chsh_colored();
        let s = g.to_json_string().unwrap();
        let back = ColoredExclusivityGraph::from_json_str(&s).unwrap();
        assert_eq!(g, back);
        let sh = chsh_shadow();
        let s2 = sh.to_json_string().unwrap();
        assert_eq!(SimpleGraph::from_json_str(&s2).unwrap(), sh);
    }
}

