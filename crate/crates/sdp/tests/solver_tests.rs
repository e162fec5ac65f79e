//! End-to-end solver checks against closed-form optima and certificates.

use nalgebra::DMatrix;
use sdp::{
    dump_problem, feasibility, solve, Constraint, SdpError, SdpProblem, SdpStatus, SparseSym,
};

fn eye_constraint(n: usize, rhs: f64) -> Constraint {
    Constraint {
        matrix: SparseSym::from_entries((0..n).map(|i| (0, i, i, 1.0))),
        rhs,
    }
}

/// max X_01 + X_10 s.t. tr X = 1 on a 2x2 block: optimum 1 at X = ones/2.
#[test]
fn two_by_two_boundary_optimum() {
    let p = SdpProblem {
        block_sizes: vec![2],
        objective: SparseSym::from_entries([(0, 0, 1, 1.0)]),
        constraints: vec![eye_constraint(2, 1.0)],
    };
    let sol = solve(&p, 1e-9, 100).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-7, "objective {}", sol.objective);
    assert!((sol.x[0][(0, 1)] - 0.5).abs() < 1e-6);
    // Dual optimum: y = 1 (Z = y I - C = [[1,-1],[-1,1]] >= 0, b'y = 1).
    assert!((sol.y[0] - 1.0).abs() < 1e-6);
}

/// Lovasz theta of the 5-cycle via the lifted representation: the optimum of
/// max sum_i M_ii over PSD (n+1)x(n+1) with M_00 = 1, M_0i = M_ii, and
/// M_ij = 0 on edges is sqrt(5).
#[test]
fn five_cycle_theta_is_sqrt5() {
    let n = 5;
    let mut constraints = vec![Constraint {
        matrix: SparseSym::from_entries([(0, 0, 0, 1.0)]),
        rhs: 1.0,
    }];
    for i in 1..=n {
        // M_0i - M_ii = 0  (entry (0,i) counts twice in the inner product)
        constraints.push(Constraint {
            matrix: SparseSym::from_entries([(0, 0, i, 0.5), (0, i, i, -1.0)]),
            rhs: 0.0,
        });
    }
    for k in 0..n {
        let (i, j) = (k + 1, (k + 1) % n + 1);
        constraints.push(Constraint {
            matrix: SparseSym::from_entries([(0, i.min(j), i.max(j), 0.5)]),
            rhs: 0.0,
        });
    }
    let p = SdpProblem {
        block_sizes: vec![n + 1],
        objective: SparseSym::from_entries((1..=n).map(|i| (0, i, i, 1.0))),
        constraints,
    };
    let sol = solve(&p, 1e-9, 100).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    let theta = 5.0f64.sqrt();
    assert!(
        (sol.objective - theta).abs() < 1e-6,
        "theta(C5) = {} vs sqrt(5) = {theta}",
        sol.objective
    );
    assert!((sol.dual_objective - theta).abs() < 1e-6);
}

/// Eigenvalue oracle: max <C, X> s.t. tr X = 1 equals lambda_max(C).
#[test]
fn lambda_max_oracle_on_random_instances() {
    let mut state = 0x243f6a8885a308d3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for n in [2usize, 3, 5, 9, 16] {
        let mut c = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = 2.0 * next();
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        let lam_max = c
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                entries.push((0, i, j, c[(i, j)]));
            }
        }
        let p = SdpProblem {
            block_sizes: vec![n],
            objective: SparseSym::from_entries(entries),
            constraints: vec![eye_constraint(n, 1.0)],
        };
        let sol = solve(&p, 1e-9, 100).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "n={n}");
        assert!(
            (sol.objective - lam_max).abs() < 1e-6 * (1.0 + lam_max.abs()),
            "n={n}: {} vs {lam_max}",
            sol.objective
        );
    }
}

/// A linear program as 1x1 blocks: max x0 + 2*x1 with x0 + x1 + x2 = 1 and
/// x1 + x3 = 0.6; optimum 0.6*2 + 0.4 = 1.6 at x = (0.4, 0.6, 0, 0).
#[test]
fn linear_program_via_unit_blocks() {
    let p = SdpProblem {
        block_sizes: vec![1; 4],
        objective: SparseSym::from_entries([(0, 0, 0, 1.0), (1, 0, 0, 2.0)]),
        constraints: vec![
            Constraint {
                matrix: SparseSym::from_entries([(0, 0, 0, 1.0), (1, 0, 0, 1.0), (2, 0, 0, 1.0)]),
                rhs: 1.0,
            },
            Constraint {
                matrix: SparseSym::from_entries([(1, 0, 0, 1.0), (3, 0, 0, 1.0)]),
                rhs: 0.6,
            },
        ],
    };
    let sol = solve(&p, 1e-9, 100).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective - 1.6).abs() < 1e-7, "lp optimum {}", sol.objective);
    assert!((sol.x[0][(0, 0)] - 0.4).abs() < 1e-6);
    assert!((sol.x[1][(0, 0)] - 0.6).abs() < 1e-6);
}

/// tr X = -1 on a PSD block is infeasible; presolve proves it and the Farkas
/// ray checks out against the data.
#[test]
fn trace_negative_is_infeasible_with_certificate() {
    let p = SdpProblem {
        block_sizes: vec![3],
        objective: SparseSym::new(),
        constraints: vec![eye_constraint(3, -1.0)],
    };
    let sol = solve(&p, 1e-9, 100).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
    let ray = sol.farkas.expect("certificate");
    // sum_k y_k A_k = y_0 I >= 0 and b'y < 0.
    assert!(ray[0] > 0.0);
    assert!(ray[0] * -1.0 < 0.0);
}

/// A strictly infeasible instance that presolve cannot see: pin
/// X_00 = 1, X_11 = 0.5, X_01 = 1; the 2x2 determinant is negative.  The
/// interior-point method must diverge dually and produce a verified ray.
#[test]
fn ipm_detects_strict_infeasibility() {
    let p = SdpProblem {
        block_sizes: vec![2],
        objective: SparseSym::new(),
        constraints: vec![
            Constraint {
                matrix: SparseSym::from_entries([(0, 0, 0, 1.0)]),
                rhs: 1.0,
            },
            Constraint {
                matrix: SparseSym::from_entries([(0, 1, 1, 1.0)]),
                rhs: 0.5,
            },
            Constraint {
                matrix: SparseSym::from_entries([(0, 0, 1, 0.5)]),
                rhs: 1.0,
            },
        ],
    };
    let report = feasibility(&p, 1e-9).unwrap();
    assert!(!report.feasible);
    let ray = report.farkas.expect("certificate");
    // Verify the ray by hand: W = sum y_k A_k must be PSD and b'y < 0.
    let w = DMatrix::<f64>::from_row_slice(
        2,
        2,
        &[ray[0], 0.5 * ray[2], 0.5 * ray[2], ray[1]],
    );
    let lam_min = w
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(lam_min > -1e-6, "ray not PSD: lambda_min {lam_min}");
    let bty = ray[0] * 1.0 + ray[1] * 0.5 + ray[2] * 1.0;
    assert!(bty < -1e-8, "b'y = {bty}");
}

/// Feasible query: tr X = 1 on a 2x2 block has margin 1/2 (X = I/2).
#[test]
fn feasibility_reports_interior_margin() {
    let p = SdpProblem {
        block_sizes: vec![2],
        objective: SparseSym::new(),
        constraints: vec![eye_constraint(2, 1.0)],
    };
    let report = feasibility(&p, 1e-9).unwrap();
    assert!(report.feasible);
    assert!(
        (report.margin - 0.5).abs() < 1e-6,
        "margin {} vs 0.5",
        report.margin
    );
    let x = report.x.expect("feasible point");
    assert!((x[0].trace() - 1.0).abs() < 1e-6);
    let lam_min = x[0]
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(lam_min > 0.4);
}

/// Feasibility honors affine contradictions that only the IPM can see
/// (scaled duplicates are not textual duplicates).
#[test]
fn feasibility_flags_scaled_contradiction() {
    let p = SdpProblem {
        block_sizes: vec![2],
        objective: SparseSym::new(),
        constraints: vec![
            Constraint {
                matrix: SparseSym::from_entries([(0, 0, 1, 0.5)]),
                rhs: 1.0,
            },
            Constraint {
                matrix: SparseSym::from_entries([(0, 0, 1, 1.0)]),
                rhs: 3.0,
            },
        ],
    };
    let report = feasibility(&p, 1e-9).unwrap();
    assert!(!report.feasible);
    let ray = report.farkas.expect("certificate");
    // The combination must cancel the off-diagonal pattern exactly and give
    // b'y < 0: y = s*(2, -1) for s > 0.
    assert!((0.5 * ray[0] + 1.0 * ray[1]).abs() < 1e-6);
    assert!(ray[0] * 1.0 + ray[1] * 3.0 < -1e-8);
}

/// Duplicate constraints collapse in presolve but multipliers scatter back
/// to the original indexing.
#[test]
fn duplicates_are_transparent_to_callers() {
    let dup = eye_constraint(2, 1.0);
    let p = SdpProblem {
        block_sizes: vec![2],
        objective: SparseSym::from_entries([(0, 0, 1, 1.0)]),
        constraints: vec![dup.clone(), dup.clone(), dup],
    };
    let sol = solve(&p, 1e-9, 100).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert_eq!(sol.y.len(), 3);
    assert!((sol.objective - 1.0).abs() < 1e-7);
    assert_eq!(sol.y[1], 0.0);
    assert_eq!(sol.y[2], 0.0);
}

/// Bit-identical reruns: the solver is deterministic.
#[test]
fn solves_are_bit_identical() {
    let p = SdpProblem {
        block_sizes: vec![4],
        objective: SparseSym::from_entries([
            (0, 0, 1, 1.0),
            (0, 1, 2, -0.5),
            (0, 2, 3, 0.25),
            (0, 0, 0, 0.1),
        ]),
        constraints: vec![
            eye_constraint(4, 1.0),
            Constraint {
                matrix: SparseSym::from_entries([(0, 0, 3, 1.0)]),
                rhs: 0.05,
            },
        ],
    };
    let a = solve(&p, 1e-9, 100).unwrap();
    let b = solve(&p, 1e-9, 100).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.iterations, b.iterations);
    for (xa, xb) in a.x.iter().zip(&b.x) {
        for (va, vb) in xa.iter().zip(xb.iter()) {
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }
}

/// Weak duality along the trace: once both residuals are small the primal
/// objective cannot exceed the dual one by more than a tolerance amount.
#[test]
fn weak_duality_holds_on_near_feasible_iterates() {
    let p = SdpProblem {
        block_sizes: vec![6],
        objective: SparseSym::from_entries([
            (0, 0, 1, 1.0),
            (0, 2, 3, 1.0),
            (0, 4, 5, 1.0),
            (0, 0, 5, 0.3),
        ]),
        constraints: vec![eye_constraint(6, 1.0)],
    };
    let sol = solve(&p, 1e-10, 200).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    let scale = 1.0 + sol.objective.abs();
    for stat in &sol.trace {
        if stat.rel_primal <= 1e-6 && stat.rel_dual <= 1e-6 {
            assert!(
                stat.pobj <= stat.dobj + 1e-5 * scale,
                "weak duality violated: pobj {} dobj {}",
                stat.pobj,
                stat.dobj
            );
        }
    }
}

/// An iteration cap returns MaxIter with the best iterate, not garbage.
#[test]
fn iteration_cap_returns_max_iter_status() {
    let p = SdpProblem {
        block_sizes: vec![3],
        objective: SparseSym::from_entries([(0, 0, 1, 1.0), (0, 1, 2, 1.0)]),
        constraints: vec![eye_constraint(3, 1.0)],
    };
    let sol = solve(&p, 1e-12, 2).unwrap();
    assert_eq!(sol.status, SdpStatus::MaxIter);
    assert!(sol.objective.is_finite());
    assert!(sol.rel_gap.is_finite());
}

/// The dump is deterministic and carries every nonzero.
#[test]
fn dump_is_stable() {
    let p = SdpProblem {
        block_sizes: vec![2, 1],
        objective: SparseSym::from_entries([(0, 0, 1, -2.0)]),
        constraints: vec![Constraint {
            matrix: SparseSym::from_entries([(1, 0, 0, 1.0)]),
            rhs: 0.25,
        }],
    };
    let d1 = dump_problem(&p);
    let d2 = dump_problem(&p);
    assert_eq!(d1, d2);
    assert!(d1.contains("blocks 2 1"));
    assert!(d1.contains("0,0,1,-2e0"));
    assert!(d1.contains("constraint 0 rhs 2.5e-1"));
}

/// Invalid input is an error, not a panic.
#[test]
fn invalid_problems_error_out() {
    let p = SdpProblem {
        block_sizes: vec![2],
        objective: SparseSym::from_entries([(0, 1, 2, 1.0)]), // out of range
        constraints: vec![],
    };
    match solve(&p, 1e-9, 10) {
        Err(SdpError::Invalid(_)) => {}
        other => panic!("expected Invalid, got {other:?}"),
    }
}
