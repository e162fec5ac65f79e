//! Randomized property suites: order relations between the bounds,
//! scaling laws, realization consistency, and dilation identities.

use exgraph::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Random bicolored graph on `n` vertices: each vertex pair is absent,
/// first-color, second-color, or doubled.
fn colored_graph(n: usize) -> impl Strategy<Value = ColoredExclusivityGraph> {
    let pairs = n * (n - 1) / 2;
    proptest::collection::vec(0u8..4, pairs).prop_map(move |choices| {
        let mut ea = Vec::new();
        let mut eb = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                match choices[k] {
                    1 => ea.push((i, j)),
                    2 => eb.push((i, j)),
                    3 => {
                        ea.push((i, j));
                        eb.push((i, j));
                    }
                    _ => {}
                }
                k += 1;
            }
        }
        ColoredExclusivityGraph::new(n, ea, eb, None).expect("valid random graph")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// α ≤ (level-1+AB upper bound of ϑ_c) ≤ ϑ, up to solver tolerance.
    #[test]
    fn sandwich_alpha_colored_theta(
        g in (3usize..=5).prop_flat_map(colored_graph),
        seedw in proptest::collection::vec(0.01f64..1.0, 5),
    ) {
        let n = g.n();
        let w = WeightVector(seedw[..n].to_vec());
        let a = alpha(&g, &w).unwrap();
        let colored = theta_colored_upper(&g, &w, NpaLevel::OnePlusAb, 1e-8).unwrap();
        let th = theta(&shadow(&g), &w, 1e-8).unwrap();
        prop_assert!(a <= colored + 1e-6, "alpha {a} > colored {colored}");
        prop_assert!(colored <= th + 1e-6, "colored {colored} > theta {th}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(104))]

    /// Removing one colored edge instance never shrinks the upper bound.
    #[test]
    fn edge_removal_is_monotone(
        g in (3usize..=5).prop_flat_map(colored_graph),
        seedw in proptest::collection::vec(0.01f64..1.0, 5),
        pick in 0usize..64,
    ) {
        let n = g.n();
        let w = WeightVector(seedw[..n].to_vec());
        let edges_a: Vec<(usize, usize)> = g.edges_a().iter().copied().collect();
        let edges_b: Vec<(usize, usize)> = g.edges_b().iter().copied().collect();
        let total = edges_a.len() + edges_b.len();
        prop_assume!(total > 0);
        let k = pick % total;
        let (mut ea, mut eb) = (edges_a.clone(), edges_b.clone());
        if k < ea.len() {
            ea.remove(k);
        } else {
            let k = k - ea.len();
            eb.remove(k);
        }
        let relaxed = ColoredExclusivityGraph::new(n, ea, eb, None).unwrap();
        let before = theta_colored_upper(&g, &w, NpaLevel::OnePlusAb, 1e-8).unwrap();
        let after = theta_colored_upper(&relaxed, &w, NpaLevel::OnePlusAb, 1e-8).unwrap();
        prop_assert!(after >= before - 1e-6, "removal shrank {before} to {after}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// α and ϑ scale linearly with the weights.
    #[test]
    fn alpha_and_theta_are_homogeneous(
        g in (3usize..=6).prop_flat_map(colored_graph),
        seedw in proptest::collection::vec(0.01f64..1.0, 6),
        scale in 0.1f64..4.0,
    ) {
        let n = g.n();
        let w = WeightVector(seedw[..n].to_vec());
        let scaled = WeightVector(w.0.iter().map(|x| x * scale).collect());
        let a = alpha(&g, &w).unwrap();
        let a_scaled = alpha(&g, &scaled).unwrap();
        prop_assert!((a_scaled - scale * a).abs() < 1e-9 * (1.0 + scale));
        let sh = shadow(&g);
        let th = theta(&sh, &w, 1e-9).unwrap();
        let th_scaled = theta(&sh, &scaled, 1e-9).unwrap();
        prop_assert!(
            (th_scaled - scale * th).abs() < 2e-6 * (1.0 + scale),
            "theta {th} scaled {th_scaled} factor {scale}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Every explicit lower bound stays below the (cheap) level-1 upper
    /// bound for every family member and path point.
    #[test]
    fn lower_bounds_stay_below_upper_bounds(
        member in 0usize..15,
        eps in 0.0f64..=1.0,
    ) {
        let fam = enumerate_shadow_family(&chsh_colored()).unwrap();
        let g = &fam.members[member];
        let w = weight_at(&WeightPath::fig4(), eps).unwrap();
        let upper = theta_colored_upper(g, &w, NpaLevel::One, 1e-8).unwrap();
        if let Some(lower) = best_lower_bound(g, &w.0, eps, &[], 0).unwrap() {
            prop_assert!(
                lower.value <= upper + 1e-6,
                "member {member} eps {eps}: lower {} > upper {upper}",
                lower.value
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Interpolated realizations produce behaviors that respect every
    /// shadow-edge exclusivity: P_i + P_j ≤ 1.
    #[test]
    fn realized_behaviors_respect_exclusivity(eps in 0.0f64..=1.0) {
        let g = chsh_colored();
        let r = chsh_interpolation(eps, 0.63, 0.63).unwrap();
        let p = behavior_from_realization(&r, &g).unwrap();
        for &(i, j) in g.shadow_edges().iter() {
            prop_assert!(
                p[i] + p[j] <= 1.0 + 1e-9,
                "edge ({i},{j}): {} + {}",
                p[i],
                p[j]
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// The closed-form pair expectation matches the explicit matrix
    /// computation ⟨ψ| P⊗Q |ψ⟩ on the Schmidt state.
    #[test]
    fn pair_expectation_matches_matrix_form(
        a in 0.05f64..0.999,
        phi_a in -10.0f64..10.0,
        phi_b in -10.0f64..10.0,
    ) {
        let ra = BlochVector::from_angle(phi_a);
        let rb = BlochVector::from_angle(phi_b);
        let closed = pair_expectation(a, ra, rb);

        let b = (1.0 - a * a).sqrt();
        let psi = DVector::from_column_slice(&[a, 0.0, 0.0, b]);
        let pa = bloch_projector(ra).unwrap();
        let pb = bloch_projector(rb).unwrap();
        let mut kron = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        kron[(i * 2 + k, j * 2 + l)] = pa[(i, j)] * pb[(k, l)];
                    }
                }
            }
        }
        let matrix = (psi.transpose() * kron * psi)[(0, 0)];
        prop_assert!((closed - matrix).abs() < 1e-12, "{closed} vs {matrix}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Dilation preserves outcome statistics and purification recovers
    /// the state, both to 1e-10.
    #[test]
    fn dilation_and_purification_identities(
        dim in 2usize..=5,
        raw in proptest::collection::vec(-1.0f64..1.0, 50),
        cap in 0.05f64..0.95,
    ) {
        let g = DMatrix::from_fn(dim, dim, |i, j| raw[i * dim + j]);
        let gram = &g * g.transpose() + DMatrix::identity(dim, dim) * 1e-6;
        let top = gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &l| m.max(l));
        let pi0 = gram / (top / cap);
        let pi1 = DMatrix::identity(dim, dim) - &pi0;
        let h = DMatrix::from_fn(dim, dim, |i, j| raw[25 + ((i * dim + j) % 25)] + 0.01);
        let mix = &h * h.transpose() + DMatrix::identity(dim, dim) * 1e-3;
        let rho = &mix / mix.trace();

        let dilation = naimark_dilate(&pi0, &pi1, &rho).unwrap();
        prop_assert!(dilation.unitary_residual <= 1e-10);
        prop_assert!(dilation.projector_residuals[0] <= 1e-10);
        prop_assert!(dilation.projector_residuals[1] <= 1e-10);
        prop_assert!(dilation.trace_mismatch[0].abs() <= 1e-10);
        prop_assert!(dilation.trace_mismatch[1].abs() <= 1e-10);

        let psi = purify(&rho).unwrap();
        let back = partial_trace_reference(&psi, dim);
        let dev = (&back - &rho).iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        prop_assert!(dev <= 1e-10, "purification deviation {dev}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(104))]

    /// Seesaw iterates never decrease the objective.
    #[test]
    fn seesaw_history_is_monotone(
        member in 0usize..15,
        seedw in proptest::collection::vec(0.01f64..1.0, 8),
        seed in 0u64..1_000,
    ) {
        let fam = enumerate_shadow_family(&chsh_colored()).unwrap();
        let g = &fam.members[member];
        let opts = SeesawOptions {
            dims: (2, 2),
            restarts: 1,
            iters: 12,
            seed,
            tol: 0.0,
            init: None,
        };
        let out = seesaw(g, &seedw, &opts).unwrap();
        for win in out.history.windows(2) {
            prop_assert!(win[1] >= win[0] - 1e-9, "history dropped: {win:?}");
        }
        out.realization.validate(g).unwrap();
        let direct = weighted_value(&out.realization, g, &seedw).unwrap();
        prop_assert!((direct - out.value).abs() < 1e-9);
    }
}
