//! Weight paths, ε-grid sweeps, kink detection, separation search, and
//! CSV/JSON/SVG emission.
//!
//! A sweep walks a one-parameter family of weight vectors, computing at
//! each point a moment-relaxation upper bound and the best available
//! explicit-realization lower bound, and assembles the results into rows
//! ready for emission.  On top of the raw curves sit two analyses: a
//! second-difference kink detector and a search for weights whose bounds
//! certify that one graph's quantum set is strictly smaller than
//! another's.

use crate::graph::{shadow, ColoredExclusivityGraph, GraphError, ShadowAccess, WeightVector};
use crate::npa::{theta_colored_upper, NpaError, NpaLevel};
use crate::realizations::{
    chsh_interpolation, g33_33_qutrit_point, g44_1111_interpolation, seesaw, weighted_value,
    Realization, RealizationError, SeesawOptions, SeesawOutcome, DEFAULT_SCHEDULE_EXPONENT,
};
use crate::theta::{extract_orthonormal_representation, theta_with_matrix, ThetaError};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("relaxation error: {0}")]
    Npa(#[from] NpaError),
    #[error("realization error: {0}")]
    Realization(#[from] RealizationError),
    #[error("theta error: {0}")]
    Theta(#[from] ThetaError),
    #[error("bad input: {0}")]
    BadInput(String),
}

/// Default mask of zeroed vertices for the eight-event weight paths.
pub const DEFAULT_MASK: [usize; 3] = [0, 1, 7];

/// A one-parameter path of weight vectors: convex interpolation from the
/// uniform distribution (ε = 0) to a fixed target distribution (ε = 1).
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightPath {
    kind: String,
    target: Vec<f64>,
}

impl WeightPath {
    /// Uniform target on the five events outside the default mask.
    pub fn fig4() -> Self {
        Self::masked_uniform(8, &DEFAULT_MASK).expect("default mask is valid")
    }

    /// Uniform target on the complement of `mask` among `n` events.
    pub fn masked_uniform(n: usize, mask: &[usize]) -> Result<Self, SweepError> {
        if mask.len() >= n {
            return Err(SweepError::BadInput(format!(
                "mask of {} vertices leaves no support among {n}",
                mask.len()
            )));
        }
        if mask.iter().any(|&v| v >= n) {
            return Err(SweepError::BadInput("mask vertex out of range".into()));
        }
        let support = n - mask.len();
        let mut target = vec![1.0 / support as f64; n];
        for &v in mask {
            target[v] = 0.0;
        }
        Ok(Self {
            kind: "fig4".into(),
            target,
        })
    }

    /// Five given target weights on the ascending complement of the
    /// default mask (vertices 2..=6 of an eight-event graph).
    pub fn random_kappa(kappa: [f64; 5]) -> Result<Self, SweepError> {
        let sum: f64 = kappa.iter().sum();
        if kappa.iter().any(|&k| !(k.is_finite() && k >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(SweepError::BadInput(format!(
                "kappa must be nonnegative and sum to 1, got {kappa:?}"
            )));
        }
        let mut target = vec![0.0; 8];
        target[2..=6].copy_from_slice(&kappa);
        Ok(Self {
            kind: "random_kappa".into(),
            target,
        })
    }

    /// Arbitrary target distribution.
    pub fn custom(target: Vec<f64>) -> Result<Self, SweepError> {
        let sum: f64 = target.iter().sum();
        if target.is_empty()
            || target.iter().any(|&k| !(k.is_finite() && k >= 0.0))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(SweepError::BadInput(
                "custom target must be a probability distribution".into(),
            ));
        }
        Ok(Self {
            kind: "custom".into(),
            target,
        })
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }
}

/// The weight vector at parameter ε: (1−ε)·uniform + ε·target.
pub fn weight_at(path: &WeightPath, epsilon: f64) -> Result<WeightVector, SweepError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(SweepError::BadInput(format!(
            "epsilon {epsilon} outside [0, 1]"
        )));
    }
    let n = path.target.len() as f64;
    Ok(WeightVector(
        path.target
            .iter()
            .map(|&t| (1.0 - epsilon) / n + epsilon * t)
            .collect(),
    ))
}

/// Evenly spaced grid from `start` to `stop` (inclusive) with step `step`.
pub fn parse_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, SweepError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start
    {
        return Err(SweepError::BadInput(format!(
            "bad grid {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step).round() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| start + k as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - stop).abs() < step * 1e-6 {
            *last = stop;
        }
    }
    while grid.last().is_some_and(|&g| g > stop + 1e-12) {
        grid.pop();
    }
    Ok(grid)
}

/// The best explicit lower bound found for `(g, w)` at path parameter ε.
#[derive(Clone, Debug)]
pub struct LowerBound {
    pub value: f64,
    pub realization: Realization,
    /// Which construction produced it: "planar", "matching", "qutrit",
    /// "theta", or "seesaw".
    pub kind: String,
}

/// For a one-color graph, seed a single-restart seesaw with the Gram
/// factors of the optimal theta matrix.  Plain seesaw tends to fall into
/// the classical corner on these graphs, while the theta extraction sits
/// at the true optimum but is only feasible to solver precision; one
/// warm-started sweep keeps the value and restores exact orthogonality.
fn theta_seeded_seesaw(
    g: &ColoredExclusivityGraph,
    w: &[f64],
    a_side: bool,
    seed: u64,
) -> Result<SeesawOutcome, SweepError> {
    let sh = shadow(g);
    let wv = WeightVector(w.to_vec());
    let (_, m) = theta_with_matrix(&sh, &wv, 1e-9)?;
    let rep = extract_orthonormal_representation(&m)?;
    let d = rep.dim.max(1);
    let n = g.n();
    let unit = DMatrix::<f64>::identity(1, 1);
    let rank_one: Vec<DMatrix<f64>> = rep
        .vectors
        .iter()
        .map(|u| {
            let v = DVector::from_column_slice(u);
            &v * v.transpose()
        })
        .collect();
    let (dims, proj_a, proj_b) = if a_side {
        ((d, 1), rank_one, vec![unit; n])
    } else {
        ((1, d), vec![unit; n], rank_one)
    };
    let init = Realization {
        dims,
        state: rep.handle.clone(),
        proj_a,
        proj_b,
    };
    let opts = SeesawOptions {
        dims,
        restarts: 1,
        iters: 60,
        seed,
        tol: 1e-14,
        init: Some(init),
    };
    seesaw(g, w, &opts).map_err(Into::into)
}

/// Try every applicable realization family and return the best.
///
/// The planar interpolation is exactly feasible on any graph whose edges
/// are a subset of the full eight-event graph's; the matching rotation and
/// the qutrit branch validate only on their own members.  Each candidate is
/// checked against `g` before its value counts.  Seesaw runs for every
/// entry of `dims`, skipping dimensions the graph cannot be colored into.
pub fn best_lower_bound(
    g: &ColoredExclusivityGraph,
    w: &[f64],
    epsilon: f64,
    dims: &[(usize, usize)],
    seed: u64,
) -> Result<Option<LowerBound>, SweepError> {
    let mut best: Option<LowerBound> = None;
    let mut consider = |r: Realization, kind: &str| {
        if let Ok(value) = weighted_value(&r, g, w) {
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(LowerBound {
                    value,
                    realization: r,
                    kind: kind.into(),
                });
            }
        }
    };

    if (0.0..=1.0).contains(&epsilon) {
        let s = DEFAULT_SCHEDULE_EXPONENT;
        if let Ok(r) = chsh_interpolation(epsilon, s, s) {
            consider(r, "planar");
        }
        for shrink in [0.0, 0.01, 0.02, 0.027, 0.03, 0.04] {
            if let Ok(r) = g44_1111_interpolation(epsilon, 1.0, shrink) {
                consider(r, "matching");
            }
        }
        if epsilon >= 0.85 {
            if let Ok(r) = g33_33_qutrit_point(epsilon) {
                consider(r, "qutrit");
            }
        }
    }

    let a_side = g.edges_b().is_empty() && !g.edges_a().is_empty();
    let b_side = g.edges_a().is_empty() && !g.edges_b().is_empty();
    if a_side || b_side {
        if let Ok(out) = theta_seeded_seesaw(g, w, a_side, seed) {
            consider(out.realization, "theta");
        }
    }

    for (k, &d) in dims.iter().enumerate() {
        let opts = SeesawOptions {
            dims: d,
            seed: seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)),
            ..SeesawOptions::default()
        };
        match seesaw(g, w, &opts) {
            Ok(out) => consider(out.realization, "seesaw"),
            Err(RealizationError::InfeasibleColoring { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(best)
}

/// One sweep row: bounds for a single (graph, ε) pair.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SweepRow {
    pub graph_label: String,
    pub epsilon: f64,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub gap: Option<f64>,
    pub level: String,
    /// Dimensions of the realization behind `lower`, as "dAxdB".
    pub dims: Option<String>,
    /// Which realization family produced `lower`.
    pub realization: Option<String>,
    pub seconds: f64,
    /// Any solver failure or invariant violation; the sweep continues.
    pub error: Option<String>,
}

/// A full sweep: one row per (graph, ε), in input order.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Options for [`sweep`].
#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub level: NpaLevel,
    /// Seesaw dimensions to try for lower bounds; empty disables seesaw.
    pub dims: Vec<(usize, usize)>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            level: NpaLevel::OnePlusAb,
            dims: vec![],
            seed: 0,
            tol: 1e-8,
        }
    }
}

/// Sweep the weight path over the grid for every labeled graph.
///
/// Solver failures mark the affected row and the sweep continues.  A row
/// whose bounds invert beyond tolerance (lower > upper + 1e−4) is marked
/// too: that can only come from a defect, never from valid bounds.
pub fn sweep(
    graphs: &[(String, ColoredExclusivityGraph)],
    path: &WeightPath,
    grid: &[f64],
    opts: &SweepOptions,
) -> Result<SweepResult, SweepError> {
    let mut rows = Vec::with_capacity(graphs.len() * grid.len());
    for (label, g) in graphs {
        if path.len() != g.n() {
            return Err(SweepError::BadInput(format!(
                "path over {} events used with graph {label} of {} events",
                path.len(),
                g.n()
            )));
        }
        for (k, &eps) in grid.iter().enumerate() {
            let started = Instant::now();
            let w = weight_at(path, eps)?;
            let mut error: Option<String> = None;
            let upper = match theta_colored_upper(g, &w, opts.level, opts.tol) {
                Ok(v) => Some(v),
                Err(e) => {
                    error = Some(format!("upper: {e}"));
                    None
                }
            };
            let row_seed = opts.seed.wrapping_add(k as u64);
            let lower = match best_lower_bound(g, &w.0, eps, &opts.dims, row_seed) {
                Ok(b) => b,
                Err(e) => {
                    error.get_or_insert_with(|| format!("lower: {e}"));
                    None
                }
            };
            let gap = match (upper, &lower) {
                (Some(u), Some(l)) => {
                    if l.value > u + 1e-4 {
                        error.get_or_insert_with(|| {
                            format!("bound inversion: lower {} > upper {u}", l.value)
                        });
                    }
                    Some(u - l.value)
                }
                _ => None,
            };
            rows.push(SweepRow {
                graph_label: label.clone(),
                epsilon: eps,
                upper,
                lower: lower.as_ref().map(|l| l.value),
                gap,
                level: opts.level.to_string(),
                dims: lower
                    .as_ref()
                    .map(|l| format!("{}x{}", l.realization.dims.0, l.realization.dims.1)),
                realization: lower.as_ref().map(|l| l.kind.clone()),
                seconds: started.elapsed().as_secs_f64(),
                error,
            });
        }
    }
    Ok(SweepResult { rows })
}

/// Locate kinks: grid points whose three-point second difference exceeds
/// `threshold` times the median second difference (and an absolute noise
/// floor).  Adjacent flagged points merge into one kink at the strongest
/// point.  The curve must be sorted by ε.
pub fn detect_kink(curve: &[(f64, f64)], threshold: f64) -> Vec<f64> {
    if curve.len() < 3 || threshold <= 0.0 {
        return vec![];
    }
    // Three-point second derivative estimate, valid on nonuniform grids.
    let mut mags = Vec::with_capacity(curve.len() - 2);
    for k in 1..curve.len() - 1 {
        let (x0, y0) = curve[k - 1];
        let (x1, y1) = curve[k];
        let (x2, y2) = curve[k + 1];
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        if h0 <= 0.0 || h1 <= 0.0 {
            return vec![];
        }
        let second = 2.0 * ((y2 - y1) / h1 - (y1 - y0) / h0) / (h0 + h1);
        mags.push((x1, second.abs()));
    }
    let mut sorted: Vec<f64> = mags.iter().map(|&(_, m)| m).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let floor = 1e-9;
    let cut = (threshold * median).max(floor);

    let mut kinks = Vec::new();
    let mut cluster: Vec<(f64, f64)> = Vec::new();
    let flush = |cluster: &mut Vec<(f64, f64)>, kinks: &mut Vec<f64>| {
        if let Some(&(x, _)) = cluster
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        {
            kinks.push(x);
        }
        cluster.clear();
    };
    let mut prev_flagged = false;
    for &(x, m) in &mags {
        if m > cut {
            cluster.push((x, m));
            prev_flagged = true;
        } else if prev_flagged {
            flush(&mut cluster, &mut kinks);
            prev_flagged = false;
        }
    }
    flush(&mut cluster, &mut kinks);
    kinks
}

/// A weight whose bounds prove one quantum set strictly smaller than
/// another: an explicit realization on the relaxed graph beats the
/// moment-relaxation upper bound of the constrained graph.
#[derive(Clone, Debug)]
pub struct SeparationCertificate {
    pub weight: WeightVector,
    /// True if the first argument of [`find_separating_weight`] played the
    /// relaxed role.
    pub relaxed_is_first: bool,
    /// Certified value of the relaxed graph (from `realization`).
    pub lower: f64,
    /// Upper bound for the constrained graph.
    pub upper: f64,
    pub gap: f64,
    pub realization: Realization,
    pub kind: String,
}

fn same_shadow(g1: &ColoredExclusivityGraph, g2: &ColoredExclusivityGraph) -> bool {
    g1.n() == g2.n() && g1.shadow_edges() == g2.shadow_edges()
}

/// Candidate orientations (relaxed, constrained) worth trying.
fn orientations(
    g1: &ColoredExclusivityGraph,
    g2: &ColoredExclusivityGraph,
) -> Vec<bool> {
    let subset = |a: &ColoredExclusivityGraph, b: &ColoredExclusivityGraph| {
        a.edges_a().is_subset(b.edges_a()) && a.edges_b().is_subset(b.edges_b())
    };
    let one_color =
        |g: &ColoredExclusivityGraph| g.edges_a().is_empty() || g.edges_b().is_empty();
    // Fewer colored constraints (componentwise subset) means a larger
    // quantum set; a one-color graph relaxes any coloring of its shadow.
    if subset(g1, g2) && !subset(g2, g1) {
        vec![true]
    } else if subset(g2, g1) && !subset(g1, g2) {
        vec![false]
    } else if one_color(g1) && !one_color(g2) {
        vec![true]
    } else if one_color(g2) && !one_color(g1) {
        vec![false]
    } else {
        vec![true, false]
    }
}

fn default_separation_dims(relaxed: &ColoredExclusivityGraph) -> Vec<(usize, usize)> {
    if relaxed.edges_b().is_empty() {
        vec![(3, 1), (4, 1)]
    } else if relaxed.edges_a().is_empty() {
        vec![(1, 3), (1, 4)]
    } else {
        vec![(2, 2), (3, 2)]
    }
}

/// Search for a weight separating the quantum sets of two graphs on the
/// same shadow.
///
/// Candidates are the masked-uniform endpoint, `trials` random simplex
/// points, and local refinements of the best find; the winner is certified
/// only after fresh solver calls reproduce a gap above 1e−3.  `None` means
/// the budget ran out, not that the sets coincide.
pub fn find_separating_weight(
    g1: &ColoredExclusivityGraph,
    g2: &ColoredExclusivityGraph,
    level: NpaLevel,
    trials: usize,
    seed: u64,
    dims: &[(usize, usize)],
    tol: f64,
) -> Result<Option<SeparationCertificate>, SweepError> {
    if !same_shadow(g1, g2) {
        return Err(SweepError::BadInput(
            "graphs must share the same shadow".into(),
        ));
    }
    const CERT_GAP: f64 = 1e-3;
    let n = g1.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for relaxed_is_first in orientations(g1, g2) {
        let (relaxed, constrained) = if relaxed_is_first { (g1, g2) } else { (g2, g1) };
        let dims_here: Vec<(usize, usize)> = if dims.is_empty() {
            default_separation_dims(relaxed)
        } else {
            dims.to_vec()
        };

        // Gap for one candidate weight; returns the lower-bound witness.
        let evaluate = |w: &[f64], seed: u64| -> Option<(f64, LowerBound, f64)> {
            let wv = WeightVector(w.to_vec());
            let upper = theta_colored_upper(constrained, &wv, level, tol).ok()?;
            let lower = best_lower_bound(relaxed, w, f64::NAN, &dims_here, seed).ok()??;
            Some((lower.value - upper, lower, upper))
        };

        // Candidate list: masked uniform endpoint first, then random
        // simplex points.
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        if n == 8 {
            if let Ok(path) = WeightPath::masked_uniform(8, &DEFAULT_MASK) {
                candidates.push(weight_at(&path, 1.0)?.0);
            }
        }
        for _ in 0..trials {
            let raw: Vec<f64> = (0..n)
                .map(|_| -(rng.gen_range(1e-12..1.0f64)).ln())
                .collect();
            let total: f64 = raw.iter().sum();
            candidates.push(raw.into_iter().map(|x| x / total).collect());
        }

        let mut best: Option<(f64, Vec<f64>)> = None;
        for (k, w) in candidates.iter().enumerate() {
            if let Some((gap, _, _)) = evaluate(w, seed.wrapping_add(k as u64)) {
                if best.as_ref().is_none_or(|(g, _)| gap > *g) {
                    best = Some((gap, w.clone()));
                }
            }
        }

        // Local refinement around the best candidate.
        if let Some((mut best_gap, mut best_w)) = best {
            for &delta in &[0.1, 0.05, 0.02] {
                for step in 0..2 * n {
                    let mut w = best_w.clone();
                    let i = step / 2;
                    let sign = if step % 2 == 0 { 1.0 } else { -1.0 };
                    w[i] = (w[i] + sign * delta).max(0.0);
                    let total: f64 = w.iter().sum();
                    if total <= 0.0 {
                        continue;
                    }
                    for x in w.iter_mut() {
                        *x /= total;
                    }
                    if let Some((gap, _, _)) =
                        evaluate(&w, seed.wrapping_add(1000 + step as u64))
                    {
                        if gap > best_gap {
                            best_gap = gap;
                            best_w = w;
                        }
                    }
                }
            }

            if best_gap > CERT_GAP {
                // Re-verify from scratch before reporting.
                let wv = WeightVector(best_w.clone());
                let upper = theta_colored_upper(constrained, &wv, level, tol)?;
                let lower = best_lower_bound(
                    relaxed,
                    &best_w,
                    f64::NAN,
                    &dims_here,
                    seed.wrapping_mul(31).wrapping_add(7),
                )?;
                if let Some(lower) = lower {
                    let fresh = weighted_value(&lower.realization, relaxed, &best_w)?;
                    if fresh - upper > CERT_GAP {
                        return Ok(Some(SeparationCertificate {
                            weight: wv,
                            relaxed_is_first,
                            lower: fresh,
                            upper,
                            gap: fresh - upper,
                            realization: lower.realization,
                            kind: lower.kind,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9}")).unwrap_or_default()
}

/// Quote a CSV field when it contains a delimiter, quote, or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV emission: fixed column set, one row per sweep row.
pub fn emit_csv(result: &SweepResult) -> String {
    let mut out = String::from("graph_label,epsilon,upper,lower,gap,level,dims,seconds\n");
    for r in &result.rows {
        out.push_str(&format!(
            "{},{:.6},{},{},{},{},{},{:.3}\n",
            csv_field(&r.graph_label),
            r.epsilon,
            fmt_opt(r.upper),
            fmt_opt(r.lower),
            fmt_opt(r.gap),
            r.level,
            r.dims.clone().unwrap_or_default(),
            r.seconds,
        ));
    }
    out
}

/// JSON emission mirroring [`SweepResult`].
pub fn emit_json(result: &SweepResult) -> String {
    serde_json::to_string_pretty(result).expect("sweep rows serialize")
}

/// SVG emission: one polyline of upper bounds per graph over ε ∈ [0, 1].
pub fn emit_svg(result: &SweepResult) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;
    const PALETTE: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];

    let mut labels: Vec<&str> = Vec::new();
    for r in &result.rows {
        if !labels.contains(&r.graph_label.as_str()) {
            labels.push(&r.graph_label);
        }
    }
    let values: Vec<f64> = result.rows.iter().filter_map(|r| r.upper).collect();
    let (ymin, ymax) = if values.is_empty() {
        (0.0, 1.0)
    } else {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.08).max(1e-4);
        (lo - pad, hi + pad)
    };
    let x_of = |eps: f64| ML + eps.clamp(0.0, 1.0) * (W - ML - MR);
    let y_of = |v: f64| H - MB - (v - ymin) / (ymax - ymin) * (H - MT - MB);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for k in 0..=5 {
        let eps = k as f64 / 5.0;
        let x = x_of(eps);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{eps:.1}</text>\n",
            H - MB + 20.0
        ));
        let v = ymin + (ymax - ymin) * k as f64 / 5.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{ML}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            ML - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{v:.4}</text>\n",
            ML - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">epsilon</text>\n",
        (ML + W - MR) / 2.0,
        H - 10.0
    ));

    for (gi, label) in labels.iter().enumerate() {
        let color = PALETTE[gi % PALETTE.len()];
        let pts: Vec<String> = result
            .rows
            .iter()
            .filter(|r| r.graph_label == *label)
            .filter_map(|r| {
                r.upper
                    .map(|u| format!("{:.2},{:.2}", x_of(r.epsilon), y_of(u)))
            })
            .collect();
        if pts.is_empty() {
            continue;
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            W - MR - 120.0,
            MT + 16.0 * (gi as f64 + 1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
