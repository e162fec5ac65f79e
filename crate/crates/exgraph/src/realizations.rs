//! Explicit quantum realizations that certify lower bounds.
//!
//! A realization assigns each event a rank-one (or higher-rank) projector
//! pair — one factor per party — together with a shared state, such that
//! events joined by a first-color edge get orthogonal first-party factors
//! and likewise for the second color.  The weighted sum of event
//! probabilities is then a genuine lower bound on the colored quantum value.
//!
//! The module ships three families of hand-built realizations on the
//! eight-event graphs (a one-parameter planar interpolation on the full
//! graph, a matching rotation on the 44,1111 member, and a qutrit branch on
//! the 33,33 member), a seesaw ascent for arbitrary graphs and dimensions,
//! and two standard conversions: Naimark dilation of a binary POVM to a
//! projective pair, and purification of a mixed state.

use crate::graph::{chsh_colored, g33_33, g44_1111, ColoredExclusivityGraph, Event, GraphError};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Idempotence / symmetry tolerance for projector validation.
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Tolerance on the state norm.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance on per-edge orthogonality residuals.
pub const EDGE_TOL: f64 = 1e-9;

/// Schmidt coefficient of the symmetric two-qubit point.
pub const SYMMETRIC_SCHMIDT: f64 = FRAC_1_SQRT_2;
/// Schmidt coefficient at the far end of the planar interpolation.
const SCHMIDT_END: f64 = 0.633_797_649;
/// First-party setting-0 tilt (degrees) at the far end of the interpolation.
const GAMMA_END_DEG: f64 = 24.852_368;
/// First-party setting-1 tilt (degrees) at the far end of the interpolation.
const DELTA_END_DEG: f64 = 14.576_104;
/// Default sharpness of the interpolation schedules.
pub const DEFAULT_SCHEDULE_EXPONENT: f64 = 0.63;

#[derive(Debug, thiserror::Error)]
pub enum RealizationError {
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("state norm deviates from 1 by {0:.3e}")]
    StateNorm(f64),
    #[error("party-{party} projector {index} violates projector axioms (residual {residual:.3e})")]
    NotProjector {
        party: char,
        index: usize,
        residual: f64,
    },
    #[error("party-{party} edge ({i}, {j}) violates orthogonality (residual {residual:.3e})")]
    EdgeResidual {
        party: char,
        i: usize,
        j: usize,
        residual: f64,
    },
    #[error("probability {index} lies outside [0, 1] by {excess:.3e}")]
    ProbabilityRange { index: usize, excess: f64 },
    #[error("epsilon {0} outside the supported range [{1}, {2}]")]
    EpsilonRange(f64, f64, f64),
    #[error(
        "party-{party} color component {vertices:?} admits no proper coloring \
         with {dim} orthogonal directions"
    )]
    InfeasibleColoring {
        party: char,
        vertices: Vec<usize>,
        dim: usize,
    },
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("effects do not resolve the identity (residual {0:.3e})")]
    NotResolution(f64),
    #[error("density matrix trace deviates from 1 by {0:.3e}")]
    Trace(f64),
    #[error("dilation unitary residual {0:.3e} exceeds tolerance")]
    NotUnitary(f64),
}

/// A point on the single-qubit X–Z great circle.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub z: f64,
}

impl BlochVector {
    /// Unit vector at angle `phi` (radians) from the +z axis toward +x.
    pub fn from_angle(phi: f64) -> Self {
        Self {
            x: phi.sin(),
            z: phi.cos(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.z)
    }
}

/// Rank-one qubit projector ½(I + x·σx + z·σz) onto the +1 eigenspace of the
/// Bloch direction `r`, which must be a unit vector.
pub fn bloch_projector(r: BlochVector) -> Result<DMatrix<f64>, RealizationError> {
    if (r.norm() - 1.0).abs() > 1e-9 {
        return Err(RealizationError::BadParameter(format!(
            "Bloch vector ({}, {}) is not normalized",
            r.x, r.z
        )));
    }
    Ok(DMatrix::from_row_slice(
        2,
        2,
        &[
            0.5 * (1.0 + r.z),
            0.5 * r.x,
            0.5 * r.x,
            0.5 * (1.0 - r.z),
        ],
    ))
}

/// Probability of the joint outcome picked by Bloch directions `ra`, `rb` on
/// the Schmidt state a|00⟩ + b|11⟩ with b = √(1−a²).
///
/// Closed form: only I⊗I, σz⊗I, I⊗σz, σz⊗σz and σx⊗σx have nonzero
/// expectation on a Schmidt state in the computational basis.
pub fn pair_expectation(a: f64, ra: BlochVector, rb: BlochVector) -> f64 {
    let b2 = 1.0 - a * a;
    let zbias = a * a - b2;
    let cross = 2.0 * a * b2.max(0.0).sqrt();
    0.25 * (1.0 + zbias * (ra.z + rb.z) + ra.z * rb.z + cross * ra.x * rb.x)
}

/// An explicit finite-dimensional model: a bipartite state plus one
/// projector pair per event.
#[derive(Clone, Debug)]
pub struct Realization {
    /// Local dimensions (first party, second party).
    pub dims: (usize, usize),
    /// State vector of length `dims.0 * dims.1`, index `p * dims.1 + q`.
    pub state: Vec<f64>,
    /// One `dims.0 × dims.0` projector per event.
    pub proj_a: Vec<DMatrix<f64>>,
    /// One `dims.1 × dims.1` projector per event.
    pub proj_b: Vec<DMatrix<f64>>,
}

fn projector_residual(m: &DMatrix<f64>) -> f64 {
    let idem = m * m - m;
    let sym = m - m.transpose();
    let mut worst: f64 = 0.0;
    for v in idem.iter().chain(sym.iter()) {
        worst = worst.max(v.abs());
    }
    worst
}

impl Realization {
    /// State reshaped as a `dims.0 × dims.1` matrix V with V[p, q] =
    /// state[p * dims.1 + q].
    fn state_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dims.0, self.dims.1, &self.state)
    }

    /// Check shapes, state norm, projector axioms, and per-edge
    /// orthogonality against `g`.
    pub fn validate(&self, g: &ColoredExclusivityGraph) -> Result<(), RealizationError> {
        let (da, db) = self.dims;
        if da == 0 || db == 0 {
            return Err(RealizationError::Shape("zero local dimension".into()));
        }
        if self.state.len() != da * db {
            return Err(RealizationError::Shape(format!(
                "state length {} does not match dims ({da}, {db})",
                self.state.len()
            )));
        }
        if self.proj_a.len() != g.n() || self.proj_b.len() != g.n() {
            return Err(RealizationError::Shape(format!(
                "projector count ({}, {}) does not match {} events",
                self.proj_a.len(),
                self.proj_b.len(),
                g.n()
            )));
        }
        let norm2: f64 = self.state.iter().map(|v| v * v).sum();
        if (norm2.sqrt() - 1.0).abs() > STATE_TOL {
            return Err(RealizationError::StateNorm((norm2.sqrt() - 1.0).abs()));
        }
        for (party, projs, dim) in [('A', &self.proj_a, da), ('B', &self.proj_b, db)] {
            for (i, m) in projs.iter().enumerate() {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(RealizationError::Shape(format!(
                        "party-{party} projector {i} is {}×{}, expected {dim}×{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let residual = projector_residual(m);
                if residual > PROJECTOR_TOL {
                    return Err(RealizationError::NotProjector {
                        party,
                        index: i,
                        residual,
                    });
                }
            }
        }
        for (party, edges, projs) in [
            ('A', g.edges_a(), &self.proj_a),
            ('B', g.edges_b(), &self.proj_b),
        ] {
            for &(i, j) in edges {
                let prod = &projs[i] * &projs[j];
                let residual = prod.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if residual > EDGE_TOL {
                    return Err(RealizationError::EdgeResidual {
                        party,
                        i,
                        j,
                        residual,
                    });
                }
            }
        }
        Ok(())
    }

    /// Event probabilities ⟨ψ| Π_i^A ⊗ Π_i^B |ψ⟩ without validation.
    fn behavior_raw(&self) -> Vec<f64> {
        let v = self.state_matrix();
        (0..self.proj_a.len())
            .map(|i| {
                let t = v.transpose() * &self.proj_a[i] * &v;
                t.iter()
                    .zip(self.proj_b[i].iter())
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect()
    }

    /// Per-edge orthogonality residuals, reported per color.
    pub fn edge_residuals(&self, g: &ColoredExclusivityGraph) -> (Vec<f64>, Vec<f64>) {
        let res = |edges: &std::collections::BTreeSet<(usize, usize)>,
                   projs: &Vec<DMatrix<f64>>| {
            edges
                .iter()
                .map(|&(i, j)| {
                    (&projs[i] * &projs[j])
                        .iter()
                        .fold(0.0f64, |m, v| m.max(v.abs()))
                })
                .collect()
        };
        (
            res(g.edges_a(), &self.proj_a),
            res(g.edges_b(), &self.proj_b),
        )
    }

    /// JSON dump: dimensions, state, projectors (row-major), and per-edge
    /// orthogonality residuals.
    pub fn to_json_string(&self, g: &ColoredExclusivityGraph) -> String {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
                .collect()
        };
        let (res_a, res_b) = self.edge_residuals(g);
        let edge_list = |edges: &std::collections::BTreeSet<(usize, usize)>, res: &[f64]| {
            edges
                .iter()
                .zip(res)
                .map(|(&(i, j), r)| {
                    serde_json::json!({ "i": i, "j": j, "residual": r })
                })
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "dims": [self.dims.0, self.dims.1],
            "state": self.state,
            "projectors_a": self.proj_a.iter().map(rows).collect::<Vec<_>>(),
            "projectors_b": self.proj_b.iter().map(rows).collect::<Vec<_>>(),
            "edge_residuals_a": edge_list(g.edges_a(), &res_a),
            "edge_residuals_b": edge_list(g.edges_b(), &res_b),
        })
        .to_string()
    }
}

/// Validate `r` against `g` and return the clamped behavior vector.
pub fn behavior_from_realization(
    r: &Realization,
    g: &ColoredExclusivityGraph,
) -> Result<Vec<f64>, RealizationError> {
    r.validate(g)?;
    let mut p = r.behavior_raw();
    for (i, v) in p.iter_mut().enumerate() {
        if *v < -1e-12 || *v > 1.0 + 1e-12 {
            return Err(RealizationError::ProbabilityRange {
                index: i,
                excess: if *v < 0.0 { -*v } else { *v - 1.0 },
            });
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(p)
}

/// Validate and return the weighted value Σ wᵢ pᵢ of a realization.
pub fn weighted_value(
    r: &Realization,
    g: &ColoredExclusivityGraph,
    w: &[f64],
) -> Result<f64, RealizationError> {
    if w.len() != g.n() {
        return Err(RealizationError::Shape(format!(
            "{} weights for {} events",
            w.len(),
            g.n()
        )));
    }
    let p = behavior_from_realization(r, g)?;
    Ok(w.iter().zip(&p).map(|(a, b)| a * b).sum())
}

fn parsed_events(g: &ColoredExclusivityGraph) -> Result<Vec<Event>, RealizationError> {
    g.labels()
        .map(<[Event]>::to_vec)
        .ok_or_else(|| RealizationError::Shape("graph carries no event labels".into()))
}

/// Build a two-qubit realization from per-event Bloch angles and a Schmidt
/// coefficient.
fn qubit_realization(
    phi_a: &[f64],
    phi_b: &[f64],
    a: f64,
) -> Result<Realization, RealizationError> {
    let b = (1.0 - a * a).max(0.0).sqrt();
    let proj = |angles: &[f64]| -> Result<Vec<DMatrix<f64>>, RealizationError> {
        angles
            .iter()
            .map(|&phi| bloch_projector(BlochVector::from_angle(phi)))
            .collect()
    };
    Ok(Realization {
        dims: (2, 2),
        state: vec![a, 0.0, 0.0, b],
        proj_a: proj(phi_a)?,
        proj_b: proj(phi_b)?,
    })
}

fn check_unit_interval(epsilon: f64) -> Result<(), RealizationError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(RealizationError::EpsilonRange(epsilon, 0.0, 1.0));
    }
    Ok(())
}

fn check_exponent(name: &str, value: f64) -> Result<(), RealizationError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(RealizationError::BadParameter(format!(
            "schedule exponent {name} must be a positive finite number, got {value}"
        )));
    }
    Ok(())
}

/// Interpolation parameters of the planar branch at a given ε: measurement
/// tilts γ, δ (radians) and the Schmidt coefficient a.
fn planar_parameters(epsilon: f64, s: f64, t: f64) -> (f64, f64, f64) {
    let u = epsilon.powf(t);
    let v = epsilon.powf(s);
    let gamma = ((1.0 - u) * 22.5 + u * GAMMA_END_DEG).to_radians();
    let delta = ((1.0 - u) * 22.5 + u * DELTA_END_DEG).to_radians();
    let a = (1.0 - v) * SYMMETRIC_SCHMIDT + v * SCHMIDT_END;
    (gamma, delta, a)
}

/// One-parameter planar realization on the full eight-event graph.
///
/// At ε = 0 every event has probability (2 + √2)/8; as ε grows the
/// measurement tilts and the Schmidt coefficient interpolate (with
/// sharpness exponents `t` and `s`) toward a point tuned for the uniform
/// five-event weight at ε = 1.  The returned realization is exactly
/// orthogonal on every edge of the full graph, for every ε.
pub fn chsh_interpolation(epsilon: f64, s: f64, t: f64) -> Result<Realization, RealizationError> {
    check_unit_interval(epsilon)?;
    check_exponent("s", s)?;
    check_exponent("t", t)?;
    let g = chsh_colored();
    let events = parsed_events(&g)?;
    let (gamma, delta, a) = planar_parameters(epsilon, s, t);
    // Antipodal outcome pairs per setting keep every same-setting pair of
    // events orthogonal, which covers all edges of the full graph.
    let theta_a = [PI - gamma, 1.5 * PI - delta];
    let theta_b = [PI + gamma, 0.5 * PI + delta];
    let mut phi_a = Vec::with_capacity(8);
    let mut phi_b = Vec::with_capacity(8);
    for ev in &events {
        phi_a.push(theta_a[ev.settings[0] as usize] + PI * f64::from(ev.outcomes[0]));
        phi_b.push(theta_b[ev.settings[1] as usize] + PI * f64::from(ev.outcomes[1]));
    }
    qubit_realization(&phi_a, &phi_b, a)
}

/// Matching-rotation realization on the 44,1111 member.
///
/// The first party keeps the symmetric-point axes; the second party owns a
/// perfect matching and may rotate each matched axis pair independently.
/// Matched pairs whose two events both carry weight gain nothing from
/// rotating (their preferred directions cancel), so only the pair
/// containing events 1 and 2 rotates, by ε^t·π/4: as the weight on event 1
/// fades, event 2's second-party axis swings into full alignment with its
/// first-party partner.  `s` shrinks the Schmidt coefficient from 1/√2.
pub fn g44_1111_interpolation(
    epsilon: f64,
    t: f64,
    s: f64,
) -> Result<Realization, RealizationError> {
    check_unit_interval(epsilon)?;
    check_exponent("t", t)?;
    if !s.is_finite() || s < 0.0 || s >= 1.0 {
        return Err(RealizationError::BadParameter(format!(
            "Schmidt shrink s must lie in [0, 1), got {s}"
        )));
    }
    let g = g44_1111();
    let events = parsed_events(&g)?;
    let tilt = epsilon.powf(t) * PI / 4.0;
    let theta_a = [PI / 8.0, -3.0 * PI / 8.0];
    let mut phi_a = vec![0.0; 8];
    for (i, ev) in events.iter().enumerate() {
        phi_a[i] = theta_a[ev.settings[0] as usize] + PI * f64::from(ev.outcomes[0]);
    }
    // Second-party base axis per matched edge: the shared setting's
    // symmetric-point axis, rotated only on the (1, 2) pair.
    let mut phi_b = vec![f64::NAN; 8];
    for &(i, j) in g.edges_b() {
        let setting = events[i].settings[1];
        debug_assert_eq!(setting, events[j].settings[1]);
        let base = if setting == 0 { -PI / 8.0 } else { 3.0 * PI / 8.0 };
        let rotated = if (i, j) == (1, 2) { base + tilt } else { base };
        phi_b[i] = rotated + PI * f64::from(events[i].outcomes[1]);
        phi_b[j] = rotated + PI * f64::from(events[j].outcomes[1]);
    }
    let a = (1.0 - s) * SYMMETRIC_SCHMIDT;
    qubit_realization(&phi_a, &phi_b, a)
}

/// Qutrit × qubit branch on the 33,33 member, defined for ε ∈ [0.85, 1].
///
/// At ε = 0.85 it coincides (as a behavior) with the planar branch at the
/// default schedule; at ε = 1 event 7's first-party vector has left the
/// plane entirely, freeing event 6 to align perfectly with its partner.
/// The first-party factors of the setting-1 quartet {2, 3, 6, 7} live in
/// R³; everything else stays in the plane.
pub fn g33_33_qutrit_point(epsilon: f64) -> Result<Realization, RealizationError> {
    if !(0.85..=1.0).contains(&epsilon) {
        return Err(RealizationError::EpsilonRange(epsilon, 0.85, 1.0));
    }
    let lambda = (epsilon - 0.85) / 0.15;
    let g = g33_33();
    let events = parsed_events(&g)?;

    // Planar-branch parameters at ε = 0.85 (default schedule), moved
    // linearly back to the symmetric point as λ → 1.
    let (g85, d85, a85_flipped) = planar_parameters(
        0.85,
        DEFAULT_SCHEDULE_EXPONENT,
        DEFAULT_SCHEDULE_EXPONENT,
    );
    // The planar branch tilts the *flipped* frame; in the unflipped frame
    // used here the Schmidt weights swap roles.
    let a85 = (1.0 - a85_flipped * a85_flipped).max(0.0).sqrt();
    let gamma = (1.0 - lambda) * g85 + lambda * (PI / 8.0);
    let delta = (1.0 - lambda) * d85 + lambda * (PI / 8.0);
    let a = (1.0 - lambda) * a85 + lambda * SYMMETRIC_SCHMIDT;
    let b = (1.0 - a * a).max(0.0).sqrt();

    let theta_a = [gamma, delta - 0.5 * PI];
    let theta_b = [-gamma, 0.5 * PI - delta];

    // First party in R³.  In-plane state vector for Bloch angle φ: the +1
    // eigenvector of cos φ σz + sin φ σx is (cos φ/2, sin φ/2), embedded
    // with third coordinate 0.
    let inplane = |phi: f64| DVector::from_vec(vec![(phi / 2.0).cos(), (phi / 2.0).sin(), 0.0]);
    let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);

    let mut vec_a: Vec<DVector<f64>> = Vec::with_capacity(8);
    for ev in &events {
        let phi = theta_a[ev.settings[0] as usize] + PI * f64::from(ev.outcomes[0]);
        vec_a.push(inplane(phi));
    }
    // Setting-1 quartet: keep 3 and its antipode 2 planar, lift 7 out of
    // the plane by μ and compensate 6 by ν so the quartet's three
    // first-color edges (2,3), (6,7), (3,7) stay exactly orthogonal.
    let phi3 = theta_a[1];
    let q3 = inplane(phi3);
    let q2 = inplane(phi3 + PI);
    let mu = (1.0 - lambda) * 0.5 * PI;
    let nu = -lambda * PI / 8.0;
    let q7 = mu.sin() * &q2 + mu.cos() * &e3;
    let q6 = nu.cos() * &q3 + nu.sin() * (mu.cos() * &q2 - mu.sin() * &e3);
    vec_a[2] = q2;
    vec_a[3] = q3;
    vec_a[6] = q6;
    vec_a[7] = q7;

    let proj_a: Vec<DMatrix<f64>> = vec_a.iter().map(|u| u * u.transpose()).collect();
    let mut proj_b = Vec::with_capacity(8);
    for ev in &events {
        let phi = theta_b[ev.settings[1] as usize] + PI * f64::from(ev.outcomes[1]);
        proj_b.push(bloch_projector(BlochVector::from_angle(phi))?);
    }

    // Schmidt state a|00⟩ + b|11⟩ embedded in 3 × 2.
    let mut state = vec![0.0; 6];
    state[0] = a;
    state[3] = b;
    Ok(Realization {
        dims: (3, 2),
        state,
        proj_a,
        proj_b,
    })
}

/// Options for the seesaw ascent.
#[derive(Clone, Debug)]
pub struct SeesawOptions {
    /// Local dimensions (first party, second party).
    pub dims: (usize, usize),
    /// Independent random restarts.
    pub restarts: usize,
    /// Maximum sweeps per restart.
    pub iters: usize,
    /// RNG seed; identical seeds reproduce identical runs.
    pub seed: u64,
    /// Stop a restart once a sweep improves the value by less than this.
    pub tol: f64,
    /// Optional warm start: the first restart begins from this
    /// realization's frames and state instead of a random draw.  The
    /// realization only needs to be approximately feasible — the first
    /// full sweep restores exact orthogonality — but its dimensions must
    /// match `dims`.
    pub init: Option<Realization>,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            dims: (2, 2),
            restarts: 8,
            iters: 60,
            seed: 0,
            tol: 1e-12,
            init: None,
        }
    }
}

/// Result of a seesaw run: the best value found, the realization achieving
/// it, and that restart's per-sweep value history.
#[derive(Clone, Debug)]
pub struct SeesawOutcome {
    pub value: f64,
    pub realization: Realization,
    pub history: Vec<f64>,
}

fn adjacency_lists(n: usize, edges: &std::collections::BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

fn components(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Exact backtracking k-coloring of one component; returns per-vertex
/// colors indexed like `verts`.
fn color_component(verts: &[usize], adj: &[Vec<usize>], k: usize) -> Option<Vec<usize>> {
    let index: std::collections::BTreeMap<usize, usize> =
        verts.iter().enumerate().map(|(a, &v)| (v, a)).collect();
    let mut colors = vec![usize::MAX; verts.len()];
    fn go(
        pos: usize,
        verts: &[usize],
        adj: &[Vec<usize>],
        index: &std::collections::BTreeMap<usize, usize>,
        colors: &mut [usize],
        k: usize,
    ) -> bool {
        if pos == verts.len() {
            return true;
        }
        // Symmetry breaking: the first vertex may as well take color 0,
        // the second at most color 1, and so on.
        let cap = k.min(pos + 1);
        for c in 0..cap {
            let clash = adj[verts[pos]].iter().any(|u| {
                index
                    .get(u)
                    .is_some_and(|&a| colors[a] != usize::MAX && colors[a] == c)
            });
            if !clash {
                colors[pos] = c;
                if go(pos + 1, verts, adj, index, colors, k) {
                    return true;
                }
                colors[pos] = usize::MAX;
            }
        }
        false
    }
    if go(0, verts, adj, &index, &mut colors, k) {
        Some(colors)
    } else {
        None
    }
}

/// Proper coloring of a whole color class, or the offending component.
fn class_coloring(
    n: usize,
    adj: &[Vec<usize>],
    dim: usize,
    party: char,
) -> Result<Vec<usize>, RealizationError> {
    let mut colors = vec![0usize; n];
    for comp in components(n, adj) {
        match color_component(&comp, adj, dim) {
            Some(local) => {
                for (slot, &v) in comp.iter().enumerate() {
                    colors[v] = local[slot];
                }
            }
            None => {
                return Err(RealizationError::InfeasibleColoring {
                    party,
                    vertices: comp,
                    dim,
                })
            }
        }
    }
    Ok(colors)
}

/// Random orthogonal matrix via QR of a Gaussian matrix.
fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(dim, dim, |_, _| {
            // Box–Muller from two uniforms.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        });
        let qr = m.qr();
        let q = qr.q();
        if q.ncols() == dim {
            return q;
        }
    }
}

/// Orthonormal basis of the orthogonal complement of `span`, each column a
/// basis vector of R^dim.
fn orthocomplement(dim: usize, span: &[&DVector<f64>]) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let orthogonalize = |v: &DVector<f64>, basis: &[DVector<f64>]| -> Option<DVector<f64>> {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(&w);
                w -= c * b;
            }
        }
        let n = w.norm();
        if n > 1e-10 {
            Some(w / n)
        } else {
            None
        }
    };
    for v in span {
        if let Some(w) = orthogonalize(v, &basis) {
            basis.push(w);
        }
    }
    let span_dim = basis.len();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let e = DVector::from_fn(dim, |r, _| if r == k { 1.0 } else { 0.0 });
        if let Some(w) = orthogonalize(&e, &basis) {
            basis.push(w);
        }
    }
    let comp = &basis[span_dim..];
    let mut out = DMatrix::zeros(dim, comp.len());
    for (c, v) in comp.iter().enumerate() {
        out.set_column(c, v);
    }
    out
}

fn top_eigvec(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).into_owned(),
    )
}

/// Alternating ascent over rank-one projectors and the shared state.
///
/// Three interleaved monotone moves: (1) the state jumps to the top
/// eigenvector of the weighted sum of projector products; (2) each color
/// component of each party rotates as a whole by one generalized-power
/// (polar) step — a common rotation preserves every inner product, hence
/// feasibility, and the objective is convex in the rotation so the polar
/// step never decreases it; (3) each event's vector moves to the best unit
/// vector orthogonal to its same-color neighbors' current vectors.  Move
/// (2) escapes rigid components (e.g. two-dimensional four-cycles) that
/// move (3) cannot rotate; move (3) reshapes components with internal
/// slack that no common rotation reaches.  Restarts draw fresh random
/// frames seeded from `opts.seed`.
pub fn seesaw(
    g: &ColoredExclusivityGraph,
    w: &[f64],
    opts: &SeesawOptions,
) -> Result<SeesawOutcome, RealizationError> {
    let n = g.n();
    if w.len() != n {
        return Err(RealizationError::Shape(format!(
            "{} weights for {n} events",
            w.len()
        )));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(RealizationError::BadParameter(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let (da, db) = opts.dims;
    if da == 0 || db == 0 || da * db > 64 {
        return Err(RealizationError::Shape(format!(
            "unsupported dimensions ({da}, {db})"
        )));
    }
    if opts.restarts == 0 || opts.iters == 0 {
        return Err(RealizationError::BadParameter(
            "restarts and iters must be positive".into(),
        ));
    }
    if let Some(init) = &opts.init {
        if init.dims != opts.dims {
            return Err(RealizationError::Shape(format!(
                "warm start has dimensions {:?}, options ask for {:?}",
                init.dims, opts.dims
            )));
        }
        if init.proj_a.len() != n || init.proj_b.len() != n || init.state.len() != da * db {
            return Err(RealizationError::Shape(
                "warm start does not match the graph".into(),
            ));
        }
    }
    let adj_a = adjacency_lists(n, g.edges_a());
    let adj_b = adjacency_lists(n, g.edges_b());
    let colors_a = class_coloring(n, &adj_a, da, 'A')?;
    let colors_b = class_coloring(n, &adj_b, db, 'B')?;
    let comps_a = components(n, &adj_a);
    let comps_b = components(n, &adj_b);

    // One damped polar step of the component rotation: with gradient
    // G = Σ wᵢ (Mᵢuᵢ)uᵢᵀ, apply O = polar(G + τI) to every vector of the
    // component.  Monotone for any τ ≥ 0 because tr(O) ≤ dim on the
    // orthogonal group and the objective is convex in O; the damping keeps
    // the rotation from greedy-jumping into a deterministic corner.
    let rotate_component =
        |comp: &[usize], vecs: &mut [DVector<f64>], grads: &[DVector<f64>], damping: f64| {
            let dim = vecs[comp[0]].len();
            let mut grad = DMatrix::zeros(dim, dim);
            let mut seen = false;
            for &i in comp {
                if grads[i].norm() == 0.0 {
                    continue;
                }
                seen = true;
                grad += &grads[i] * vecs[i].transpose();
            }
            if !seen || grad.iter().fold(0.0f64, |m, x| m.max(x.abs())) < 1e-13 {
                return;
            }
            let tau = damping * grad.norm();
            for k in 0..dim {
                grad[(k, k)] += tau;
            }
            let svd = grad.svd(true, true);
            let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
                return;
            };
            let o = u * vt;
            for &i in comp {
                vecs[i] = &o * &vecs[i];
            }
        };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<SeesawOutcome> = None;

    for restart in 0..opts.restarts {
        // Alternate rotation damping across restarts: gentler steps follow
        // narrow ridges, heavier ones converge faster on easy landscapes.
        let damping = 1.0 + 2.0 * (restart % 3) as f64;
        // Feasible start: an independent random orthonormal frame per color
        // component (sharing one frame per party keeps all projectors
        // commuting, which traps the whole run on the classical manifold);
        // vertex v gets its component frame's column of its color.  A warm
        // start replaces the first restart's draw with frames read off the
        // supplied realization.
        let mut vecs_a: Vec<DVector<f64>> = vec![DVector::zeros(da); n];
        for comp in &comps_a {
            let q = random_orthogonal(da, &mut rng);
            for &v in comp {
                vecs_a[v] = q.column(colors_a[v]).into_owned();
            }
        }
        let mut vecs_b: Vec<DVector<f64>> = vec![DVector::zeros(db); n];
        for comp in &comps_b {
            let q = random_orthogonal(db, &mut rng);
            for &v in comp {
                vecs_b[v] = q.column(colors_b[v]).into_owned();
            }
        }
        let mut state = DVector::from_fn(da * db, |_, _| rng.gen_range(-1.0..1.0));
        if restart == 0 {
            if let Some(init) = &opts.init {
                // Near-zero projectors keep their random color-class
                // vector; everything else takes the projector's leading
                // eigenvector.
                let read_frames = |proj: &[DMatrix<f64>], out: &mut [DVector<f64>]| {
                    for (v, p) in proj.iter().enumerate() {
                        let eig = ((p + p.transpose()) * 0.5).symmetric_eigen();
                        let top = eig
                            .eigenvalues
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                            .map(|(k, _)| k)
                            .unwrap_or(0);
                        let mut u = eig.eigenvectors.column(top).into_owned();
                        let nrm = u.norm();
                        if eig.eigenvalues[top] > 1e-9 && nrm > 1e-9 {
                            u /= nrm;
                            out[v] = u;
                        }
                    }
                };
                read_frames(&init.proj_a, &mut vecs_a);
                read_frames(&init.proj_b, &mut vecs_b);
                state = DVector::from_column_slice(&init.state);
            }
        }
        let nrm = state.norm();
        if nrm < 1e-9 {
            state = DVector::from_fn(da * db, |r, _| if r == 0 { 1.0 } else { 0.0 });
        } else {
            state /= nrm;
        }

        let objective = |state: &DVector<f64>,
                         vecs_a: &[DVector<f64>],
                         vecs_b: &[DVector<f64>]| {
            let v = DMatrix::from_row_slice(da, db, state.as_slice());
            (0..n)
                .map(|i| {
                    let x = v.transpose() * &vecs_a[i];
                    let y = x.dot(&vecs_b[i]);
                    w[i] * y * y
                })
                .sum::<f64>()
        };

        let mut history = vec![objective(&state, &vecs_a, &vecs_b)];
        for _sweep in 0..opts.iters {
            // State update: top eigenvector of Σ wᵢ Πᵢ^A ⊗ Πᵢ^B.
            let mut s = DMatrix::zeros(da * db, da * db);
            for i in 0..n {
                if w[i] == 0.0 {
                    continue;
                }
                let pa = &vecs_a[i] * vecs_a[i].transpose();
                let pb = &vecs_b[i] * vecs_b[i].transpose();
                for p in 0..da {
                    for pp in 0..da {
                        for q in 0..db {
                            for qq in 0..db {
                                s[(p * db + q, pp * db + qq)] +=
                                    w[i] * pa[(p, pp)] * pb[(q, qq)];
                            }
                        }
                    }
                }
            }
            let (_, top) = top_eigvec(&s);
            state = top;
            let v = DMatrix::from_row_slice(da, db, state.as_slice());

            // First party: component rotations, then per-event updates.
            let grads_a: Vec<DVector<f64>> = (0..n)
                .map(|i| {
                    // wᵢ Mᵢ uᵢ with Mᵢ = V Πᵢ^B Vᵀ.
                    let x = v.transpose() * &vecs_a[i];
                    (&v * &vecs_b[i]) * (w[i] * vecs_b[i].dot(&x))
                })
                .collect();
            for comp in &comps_a {
                rotate_component(comp, &mut vecs_a, &grads_a, damping);
            }
            for i in 0..n {
                let m = &v * (&vecs_b[i] * vecs_b[i].transpose()) * v.transpose();
                let span: Vec<&DVector<f64>> = adj_a[i].iter().map(|&j| &vecs_a[j]).collect();
                let q = orthocomplement(da, &span);
                if q.ncols() > 0 {
                    let (_, y) = top_eigvec(&(q.transpose() * &m * &q));
                    vecs_a[i] = &q * y;
                }
            }

            // Second party, symmetrically.
            let grads_b: Vec<DVector<f64>> = (0..n)
                .map(|i| {
                    let x = &v * &vecs_b[i];
                    (v.transpose() * &vecs_a[i]) * (w[i] * vecs_a[i].dot(&x))
                })
                .collect();
            for comp in &comps_b {
                rotate_component(comp, &mut vecs_b, &grads_b, damping);
            }
            for i in 0..n {
                let m = v.transpose() * (&vecs_a[i] * vecs_a[i].transpose()) * &v;
                let span: Vec<&DVector<f64>> = adj_b[i].iter().map(|&j| &vecs_b[j]).collect();
                let q = orthocomplement(db, &span);
                if q.ncols() > 0 {
                    let (_, y) = top_eigvec(&(q.transpose() * &m * &q));
                    vecs_b[i] = &q * y;
                }
            }
            let val = objective(&state, &vecs_a, &vecs_b);
            let gain = val - history.last().unwrap();
            history.push(val);
            if gain.abs() < opts.tol {
                break;
            }
        }

        let value = *history.last().unwrap();
        if best.as_ref().is_none_or(|b| value > b.value) {
            let realization = Realization {
                dims: (da, db),
                state: state.as_slice().to_vec(),
                proj_a: vecs_a.iter().map(|u| u * u.transpose()).collect(),
                proj_b: vecs_b.iter().map(|u| u * u.transpose()).collect(),
            };
            best = Some(SeesawOutcome {
                value,
                realization,
                history,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Symmetric PSD square root via eigendecomposition; eigenvalues below
/// `-1e-8` are rejected, small negatives are clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, RealizationError> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-8 {
            return Err(RealizationError::NotPsd(*v));
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose())
}

/// Naimark dilation report: the projective pair on the doubled space, the
/// embedded state, the dilation unitary, and the verification residuals.
#[derive(Clone, Debug)]
pub struct Dilation {
    /// Two projectors on the `2d`-dimensional system ⊗ flag space.
    pub projectors: [DMatrix<f64>; 2],
    /// Embedded density matrix ρ ⊗ |0⟩⟨0|.
    pub state: DMatrix<f64>,
    /// The block unitary implementing the dilation.
    pub unitary: DMatrix<f64>,
    /// Max-abs entry of UᵀU − I.
    pub unitary_residual: f64,
    /// Max-abs entry of Πᵢ² − Πᵢ, per projector.
    pub projector_residuals: [f64; 2],
    /// |tr(πᵢ ρ) − tr(Πᵢ ρ_emb)| per effect.
    pub trace_mismatch: [f64; 2],
}

/// Dilate a binary POVM {π₀, π₁} on dimension d, measured on state ρ, to a
/// projective pair on dimension 2d with identical outcome statistics.
///
/// Because π₀ + π₁ = I the square roots √π₀, √π₁ commute, so the block
/// matrix [[√π₀, −√π₁], [√π₁, √π₀]] (flag-major blocks) is orthogonal; the
/// projectors are its pullbacks of I ⊗ |i⟩⟨i| on the flag qubit.
pub fn naimark_dilate(
    pi0: &DMatrix<f64>,
    pi1: &DMatrix<f64>,
    rho: &DMatrix<f64>,
) -> Result<Dilation, RealizationError> {
    let d = pi0.nrows();
    if pi0.ncols() != d || pi1.nrows() != d || pi1.ncols() != d || rho.nrows() != d || rho.ncols() != d
    {
        return Err(RealizationError::Shape(
            "effects and state must be square matrices of equal dimension".into(),
        ));
    }
    let sum_residual = (pi0 + pi1 - DMatrix::identity(d, d))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if sum_residual > 1e-10 {
        return Err(RealizationError::NotResolution(sum_residual));
    }
    let trace_err = (rho.trace() - 1.0).abs();
    if trace_err > 1e-9 {
        return Err(RealizationError::Trace(trace_err));
    }
    let rho_sym = (rho + rho.transpose()) * 0.5;
    let min_eig = rho_sym
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 {
        return Err(RealizationError::NotPsd(min_eig));
    }

    let r0 = psd_sqrt(pi0)?;
    let r1 = psd_sqrt(pi1)?;

    // Index (p, e) ↦ p * 2 + e: system-major, flag minor.
    let mut u = DMatrix::zeros(2 * d, 2 * d);
    for p in 0..d {
        for q in 0..d {
            u[(p * 2, q * 2)] = r0[(p, q)];
            u[(p * 2, q * 2 + 1)] = -r1[(p, q)];
            u[(p * 2 + 1, q * 2)] = r1[(p, q)];
            u[(p * 2 + 1, q * 2 + 1)] = r0[(p, q)];
        }
    }
    let unitary_residual = (u.transpose() * &u - DMatrix::identity(2 * d, 2 * d))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if unitary_residual > 1e-8 {
        return Err(RealizationError::NotUnitary(unitary_residual));
    }

    let mut flag = [DMatrix::zeros(2 * d, 2 * d), DMatrix::zeros(2 * d, 2 * d)];
    for e in 0..2 {
        for p in 0..d {
            flag[e][(p * 2 + e, p * 2 + e)] = 1.0;
        }
    }
    let projectors = [
        u.transpose() * &flag[0] * &u,
        u.transpose() * &flag[1] * &u,
    ];
    let projector_residuals = [
        projector_residual(&projectors[0]),
        projector_residual(&projectors[1]),
    ];

    let mut state = DMatrix::zeros(2 * d, 2 * d);
    for p in 0..d {
        for q in 0..d {
            state[(p * 2, q * 2)] = rho_sym[(p, q)];
        }
    }
    let expect = |m: &DMatrix<f64>, r: &DMatrix<f64>| (m * r).trace();
    let trace_mismatch = [
        (expect(pi0, &rho_sym) - expect(&projectors[0], &state)).abs(),
        (expect(pi1, &rho_sym) - expect(&projectors[1], &state)).abs(),
    ];
    Ok(Dilation {
        projectors,
        state,
        unitary: u,
        unitary_residual,
        projector_residuals,
        trace_mismatch,
    })
}

/// Purify a d-dimensional density matrix into a vector on d × d
/// (system ⊗ reference, index s·d + r).  The reference slot r carries the
/// r-th eigenvector, ordered by descending eigenvalue with a deterministic
/// sign convention.
pub fn purify(rho: &DMatrix<f64>) -> Result<DVector<f64>, RealizationError> {
    let d = rho.nrows();
    if rho.ncols() != d || d == 0 {
        return Err(RealizationError::Shape(
            "density matrix must be square and nonempty".into(),
        ));
    }
    let trace_err = (rho.trace() - 1.0).abs();
    if trace_err > 1e-9 {
        return Err(RealizationError::Trace(trace_err));
    }
    let sym = (rho + rho.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });
    let mut psi = DVector::zeros(d * d);
    for (slot, &idx) in order.iter().enumerate() {
        let lam = eig.eigenvalues[idx];
        if lam < -1e-9 {
            return Err(RealizationError::NotPsd(lam));
        }
        let coef = lam.max(0.0).sqrt();
        if coef == 0.0 {
            continue;
        }
        let mut v = eig.eigenvectors.column(idx).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        for s in 0..d {
            psi[s * d + slot] = coef * v[s];
        }
    }
    let norm = psi.norm();
    if norm < 1e-9 {
        return Err(RealizationError::Trace(1.0));
    }
    Ok(psi / norm)
}

/// Trace out the reference factor of a purification produced by [`purify`].
pub fn partial_trace_reference(psi: &DVector<f64>, d: usize) -> DMatrix<f64> {
    let mut rho = DMatrix::zeros(d, d);
    for s in 0..d {
        for sp in 0..d {
            let mut acc = 0.0;
            for r in 0..d {
                acc += psi[s * d + r] * psi[sp * d + r];
            }
            rho[(s, sp)] = acc;
        }
    }
    rho
}
