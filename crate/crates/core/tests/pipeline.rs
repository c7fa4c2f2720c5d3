//! Cross-module integration: assembled systems against their quadratic-form
//! identity, dense oracles, preconditioner round trips, and full solves of
//! small manufactured problems.

use std::sync::Arc;

use stokes_lsq::bench::{case_terms, compute_errors, manufactured_case, run_case, CaseId};
use stokes_lsq::catalog::{interior_terms, terms_structurally_equal, TermKind};
use stokes_lsq::geometry::{build_decomposition, DomainSpec};
use stokes_lsq::solver::{
    assemble_system, build_preconditioner, condition_estimate, dense_solve, pcg_solve, SolverConfig,
};
use stokes_lsq::spectral::interpolate;

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

#[test]
fn functional_matches_quadratic_form() {
    // R(x) = x'Ax - 2 b'x + c to relative 1e-9 on random vectors. Ex-1 has
    // no gauge penalty; Ex-6 carries a pressure-mean penalty with a nonzero
    // target, which once leaked its target into the matvec.
    for (id, w) in [(CaseId::Ex1, 3), (CaseId::Ex6, 2)] {
        let case = manufactured_case(id);
        let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
        let terms = case_terms(&case, &decomp).unwrap();
        let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
        let n = sys.n_dofs();
        for seed in 0..20 {
            let x = pseudo_random(n, seed);
            let ax = sys.matvec(&x);
            let xax: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let bx: f64 = x.iter().zip(sys.rhs()).map(|(a, b)| a * b).sum();
            let quad = xax - 2.0 * bx + sys.constant();
            let direct = sys.functional_at(&x);
            let scale = direct.abs().max(quad.abs()).max(1.0);
            assert!(
                (quad - direct).abs() <= 1e-9 * scale,
                "{id:?} seed {seed}: quadratic {quad} vs functional {direct}"
            );
        }
    }
}

#[test]
fn system_symmetric_and_psd() {
    for (id, w) in [(CaseId::Ex1, 3), (CaseId::Ex6, 2), (CaseId::Ex2, 3)] {
        let case = manufactured_case(id);
        let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
        let terms = case_terms(&case, &decomp).unwrap();
        let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
        let n = sys.n_dofs();
        for seed in 0..20 {
            let x = pseudo_random(n, 2 * seed);
            let y = pseudo_random(n, 2 * seed + 1);
            let ax = sys.matvec(&x);
            let ay = sys.matvec(&y);
            let xay: f64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
            let yax: f64 = y.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                (xay - yax).abs() <= 1e-10 * nx * ny,
                "{id:?} asymmetry {}",
                (xay - yax).abs() / (nx * ny)
            );
            let xax: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            assert!(xax >= -1e-12 * nx * nx, "{id:?} negative x'Ax = {xax}");
        }
    }
}

#[test]
fn dense_assembly_matches_matvec_columns() {
    // Column-by-column dense assembly via functional polarization equals
    // the matvec image of unit vectors.
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let terms = case_terms(&case, &decomp).unwrap();
    let w = 2;
    let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
    let n = sys.n_dofs();
    let a = sys.dense_matrix();
    // Polarization oracle on a subset of entries: A_ij =
    // (R0(ei + ej) - R0(ei) - R0(ej)) / 2 with R0 the zero-data functional
    // = x'Ax here (data enters only b and c, subtract them).
    let r0 = |x: &[f64]| {
        let ax = sys.matvec(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>()
    };
    let func0 = |x: &[f64]| {
        // functional minus its data-linear and constant parts
        let bx: f64 = x.iter().zip(sys.rhs()).map(|(a, b)| a * b).sum();
        sys.functional_at(x) + 2.0 * bx - sys.constant()
    };
    let mut ei = vec![0.0; n];
    let mut ej = vec![0.0; n];
    for &(i, j) in &[
        (0usize, 0usize),
        (1, 5),
        (3, 17),
        (n - 1, n - 1),
        (2, n - 3),
    ] {
        ei[i] = 1.0;
        ej[j] = 1.0;
        let mut sum = ei.clone();
        for k in 0..n {
            sum[k] += ej[k];
        }
        let aij = 0.5 * (func0(&sum) - func0(&ei) - func0(&ej));
        assert!(
            (aij - a[(i, j)]).abs() <= 1e-9 * (1.0 + a[(i, j)].abs()),
            "A[{i},{j}] polarization {aij} vs dense {}",
            a[(i, j)]
        );
        let r0ij = 0.5 * (r0(&sum) - r0(&ei) - r0(&ej));
        assert!((r0ij - a[(i, j)]).abs() <= 1e-12 * (1.0 + a[(i, j)].abs()));
        ei[i] = 0.0;
        ej[j] = 0.0;
    }
}

#[test]
fn preconditioner_round_trip_and_block_count() {
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let terms = case_terms(&case, &decomp).unwrap();
    let w = 4;
    let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
    let precon = build_preconditioner(sys.layout(), w + 2).unwrap();
    assert_eq!(precon.block_count(), 3); // 2 velocity + 1 pressure block
    let z = pseudo_random(sys.n_dofs(), 7);
    let pz = precon.apply_gram(&z);
    let back = precon.apply(&pz);
    let num: f64 = back
        .iter()
        .zip(&z)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(num / den <= 1e-10, "round trip error {}", num / den);
    // P^{-1} is positive definite on random vectors.
    let zi = precon.apply(&z);
    let dot: f64 = z.iter().zip(&zi).map(|(a, b)| a * b).sum();
    assert!(dot > 0.0);
}

#[test]
fn pressure_gram_w1_closed_forms() {
    // H1 Gram quadratic form on Q at W = 1 against hand integration: the
    // span of {1, xi, eta, xi eta}. ||1||_1^2 = 4; ||xi||_1^2 = 4/3 + 4;
    // ||xi eta||_1^2 = 4/9 + 4/3 + 4/3.
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let terms = case_terms(&case, &decomp).unwrap();
    let sys = assemble_system(decomp.clone(), 1, terms.all_terms(), terms.penalties, 3).unwrap();
    let precon = build_preconditioner(sys.layout(), 3).unwrap();
    // Reference element is [0,1]^2 here, but the preconditioner form lives
    // on Q = (-1,1)^2 regardless; express monomials in the orthonormal
    // Legendre basis on Q: 1 = sqrt2 phi0, xi = sqrt(2/3) phi1.
    let s0 = (2.0f64).sqrt();
    let s1 = (2.0f64 / 3.0).sqrt();
    let layout = sys.layout();
    let n = layout.total_dofs();
    let prange = layout.range(0, 2);
    let mut z = vec![0.0; n];
    // f = 1: coefficients (c00) = s0*s0 in the tensor basis.
    z[prange.start] = s0 * s0;
    let val: f64 = {
        let gz = precon.apply_gram(&z);
        z.iter().zip(&gz).map(|(a, b)| a * b).sum()
    };
    assert!((val - 4.0).abs() < 1e-12, "||1||^2_H1 = {val}");
    // f = xi: c10 = s1 * s0 (mode (1,0)).
    let mut z = vec![0.0; n];
    z[prange.start + 1] = s1 * s0;
    let gz = precon.apply_gram(&z);
    let val: f64 = z.iter().zip(&gz).map(|(a, b)| a * b).sum();
    assert!(
        (val - (4.0 / 3.0 + 4.0)).abs() < 1e-12,
        "||xi||^2_H1 = {val}"
    );
    // f = xi * eta: c11 = s1 * s1.
    let mut z = vec![0.0; n];
    z[prange.start + 3] = s1 * s1;
    let gz = precon.apply_gram(&z);
    let val: f64 = z.iter().zip(&gz).map(|(a, b)| a * b).sum();
    assert!(
        (val - (4.0 / 9.0 + 8.0 / 3.0)).abs() < 1e-12,
        "||xi eta||^2_H1 = {val}"
    );
}

#[test]
fn ex1_small_solve_reaches_truth() {
    // The Ex-1 exact solution is a degree-4 tensor polynomial, so at W = 4
    // the discrete minimizer is the exact solution; a tight solve must
    // reproduce it.
    let case = manufactured_case(CaseId::Ex1);
    let report = run_case(
        &case,
        4,
        Some(SolverConfig {
            rel_tolerance: 1e-13,
            max_iterations: 10_000,
            report_cadence: 0,
        }),
    )
    .unwrap();
    assert!(report.converged);
    assert!(
        report.err_u_h1 < 1e-8,
        "velocity error {} at W=4",
        report.err_u_h1
    );
    assert!(
        report.err_p_l2 < 1e-7,
        "pressure error {} at W=4",
        report.err_p_l2
    );
    assert!(report.err_c_l2 < 1e-8);
}

#[test]
fn pcg_matches_dense_solve_on_ex1() {
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let terms = case_terms(&case, &decomp).unwrap();
    let w = 3;
    let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
    let precon = build_preconditioner(sys.layout(), w + 2).unwrap();
    let out = pcg_solve(
        |x| sys.matvec(x),
        |r| precon.apply(r),
        sys.rhs(),
        &SolverConfig {
            rel_tolerance: 1e-14,
            max_iterations: 20_000,
            report_cadence: 0,
        },
    )
    .unwrap();
    assert!(out.converged);
    let a = sys.dense_matrix();
    let xd = dense_solve(&a, sys.rhs()).expect("dense solve");
    let num: f64 = out
        .x
        .iter()
        .zip(&xd)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(num / den <= 1e-8, "pcg vs dense {}", num / den);
    // Lanczos condition estimate exists and is sane.
    let (lmin, lmax) = condition_estimate(&out).unwrap();
    assert!(lmin > 0.0 && lmax >= lmin);
}

#[test]
fn interior_terms_shared_across_families() {
    // Same mesh and data, two families: interior term lists are
    // structurally identical.
    let case_a = manufactured_case(CaseId::Ex1); // B14
    let decomp = build_decomposition(&case_a.domain).unwrap();
    let data = stokes_lsq::bench::derive_data(&case_a);
    let a = interior_terms(&decomp, &data.f, &data.chi);
    let b = interior_terms(&decomp, &data.f, &data.chi);
    let probes = [[0.3, 0.4, 0.0], [0.9, 0.1, 0.0], [0.5, 0.55, 0.0]];
    assert!(terms_structurally_equal(&a, &b, &probes));
    assert_eq!(a.len(), 2); // single element: momentum + continuity
    assert!(a.iter().any(|t| t.kind == TermKind::Momentum));
    assert!(a.iter().any(|t| t.kind == TermKind::Continuity));
}

#[test]
fn interpolant_of_truth_has_tiny_functional() {
    // Interpolate the Ex-1 exact solution at W = 5 and check the functional
    // value collapses (zero residual at truth).
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let terms = case_terms(&case, &decomp).unwrap();
    let w = 5;
    let sys =
        assemble_system(decomp.clone(), w, terms.all_terms(), terms.penalties, w + 2).unwrap();
    let layout = sys.layout();
    let mut x = vec![0.0; layout.total_dofs()];
    for e in &decomp.elements {
        for f in 0..=2usize {
            let field = case.exact.field(f).clone();
            let c = interpolate(|p| field(&[0, 0, 0], p), e, 2, w, w + 2).unwrap();
            x[layout.range(e.id, f)].copy_from_slice(&c);
        }
    }
    let r = sys.functional_at(&x);
    assert!(r <= 1e-18, "functional at truth interpolant: {r}");
    // And the errors of the interpolant itself are tiny.
    let (eu, ep, ec, _, _) = compute_errors(&x, layout, &decomp, &case.exact, w + 10);
    assert!(eu < 1e-12 && ep < 1e-12 && ec < 1e-12);
}

#[test]
fn functional_matches_refined_quadrature_oracle() {
    // R of a random field computed with the working rule (W+2 points)
    // against the same residuals integrated with a much finer rule; all
    // integrands are polynomial for Ex-1, so they agree to rounding.
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let w = 4;
    let terms = case_terms(&case, &decomp).unwrap();
    let sys = assemble_system(
        decomp.clone(),
        w,
        terms.all_terms(),
        terms.penalties.clone(),
        w + 2,
    )
    .unwrap();
    let terms_fine = case_terms(&case, &decomp).unwrap();
    let sys_fine = assemble_system(
        decomp,
        w,
        terms_fine.all_terms(),
        terms_fine.penalties,
        3 * (w + 2),
    )
    .unwrap();
    for seed in 0..10 {
        let x = pseudo_random(sys.n_dofs(), 100 + seed);
        let a = sys.functional_at(&x);
        let b = sys_fine.functional_at(&x);
        assert!(
            (a - b).abs() <= 1e-10 * a.abs().max(b.abs()),
            "seed {seed}: {a} vs {b}"
        );
    }
    // Zero field: R(0) equals the data constant (sum of squared data norms).
    let zeros = vec![0.0; sys.n_dofs()];
    let r0 = sys.functional_at(&zeros);
    assert!((r0 - sys.constant()).abs() <= 1e-12 * sys.constant().abs());
    assert!(r0 > 0.0);
}

#[test]
fn minimizer_optimality() {
    // At the PCG solution, the directional derivative of R along random
    // directions is negligible against the gradient scale.
    let case = manufactured_case(CaseId::Ex3);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let terms = case_terms(&case, &decomp).unwrap();
    let w = 3;
    let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
    let precon = build_preconditioner(sys.layout(), w + 2).unwrap();
    let out = pcg_solve(
        |x| sys.matvec(x),
        |r| precon.apply(r),
        sys.rhs(),
        &SolverConfig {
            rel_tolerance: 1e-13,
            max_iterations: 20_000,
            report_cadence: 0,
        },
    )
    .unwrap();
    assert!(out.converged);
    // grad R(x*) = 2 (A x* - b); scale against 2(||A x*|| + ||b||).
    let ax = sys.matvec(&out.x);
    let scale: f64 = {
        let na: f64 = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = sys.rhs().iter().map(|v| v * v).sum::<f64>().sqrt();
        2.0 * (na + nb)
    };
    for seed in 0..20u64 {
        let d = pseudo_random(sys.n_dofs(), 500 + seed);
        let nd: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let grad_d: f64 = ax
            .iter()
            .zip(sys.rhs())
            .zip(&d)
            .map(|((a, b), di)| 2.0 * (a - b) * di)
            .sum();
        assert!(
            grad_d.abs() <= 1e-6 * scale * nd,
            "directional derivative {grad_d} vs scale {scale}"
        );
    }
}

#[test]
fn boundary_residuals_vanish_at_truth_interpolant() {
    // Every boundary residual term evaluates below 1e-12 when the field
    // interpolates the exact polynomial solution.
    use stokes_lsq::eval::{apply_operator, EvalCtx};
    use stokes_lsq::norms::FaceKernelTable;
    use stokes_lsq::spectral::{gauss_rule, Basis1D, FieldLayout};

    let case = manufactured_case(CaseId::Ex1);
    let decomp = build_decomposition(&case.domain).unwrap();
    let w = 5;
    let layout = FieldLayout {
        dim: 2,
        degree: w,
        n_elements: 1,
    };
    let rule = gauss_rule(w + 2).unwrap();
    let kernel = FaceKernelTable::new(&rule, 0.5).unwrap();
    let basis = Basis1D::new(w, rule);
    let ctx = EvalCtx {
        decomp: &decomp,
        layout,
        basis: &basis,
        kernel: &kernel,
    };
    let mut x = vec![0.0; layout.total_dofs()];
    for e in &decomp.elements {
        for f in 0..3usize {
            let field = case.exact.field(f).clone();
            let c = interpolate(|p| field(&[0, 0, 0], p), e, 2, w, w + 2).unwrap();
            x[layout.range(e.id, f)].copy_from_slice(&c);
        }
    }
    let terms = stokes_lsq::catalog::boundary_terms(&case.bc_specs[0], &decomp).unwrap();
    for term in &terms {
        let linear = apply_operator(term, &x, &ctx);
        let points = ctx.term_points(term);
        let levels = ctx.term_levels(term);
        for (ci, comp) in term.components.iter().enumerate() {
            for (li, level) in levels.iter().enumerate() {
                let tgt = ctx.target_values(term, &comp.target, level, &points);
                for (v, t) in linear[ci][li].iter().zip(&tgt) {
                    assert!(
                        (v - t).abs() <= 1e-12,
                        "{:?} component {ci} level {li}: residual {}",
                        term.kind,
                        (v - t).abs()
                    );
                }
            }
        }
    }
}

#[test]
fn single_l2_term_gives_identity_gram() {
    // One term ||u_0 - d||^2_{L2} on the reference element: with the
    // orthonormal basis A restricted to the u_0 block is the identity and
    // b holds the projection coefficients of d.
    use stokes_lsq::catalog::{ResidualComponent, ResidualTerm, Target, TermKind, TermLocus};
    use stokes_lsq::data::{one, poly1, separable2, ClosureData};
    use stokes_lsq::norms::NormOrder;
    use stokes_lsq::operators::part;

    let domain = DomainSpec::single_block(2, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]);
    let decomp = Arc::new(build_decomposition(&domain).unwrap());
    let d_field = separable2(vec![(1.0, poly1(&[0.0, 1.0]), one())]); // d = x1
    let term = ResidualTerm {
        locus: TermLocus::Element(0),
        kind: TermKind::Momentum,
        norm: NormOrder::L2Elem,
        components: vec![ResidualComponent {
            parts: vec![part(0, [0, 0, 0], 1.0)],
            target: Target::Data(Arc::new(ClosureData(d_field))),
        }],
    };
    let w = 3;
    let sys = assemble_system(decomp, w, vec![term], vec![], w + 2).unwrap();
    let a = sys.dense_matrix();
    let modes = (w + 1) * (w + 1);
    for i in 0..sys.n_dofs() {
        for j in 0..sys.n_dofs() {
            let expect = if i == j && i < modes { 1.0 } else { 0.0 };
            assert!(
                (a[(i, j)] - expect).abs() <= 1e-12,
                "A[{i},{j}] = {}",
                a[(i, j)]
            );
        }
    }
    // b = projection of d onto the basis: d = x1 has a single mode
    // (1,0) with coefficient sqrt(2/3) * sqrt(2) in the orthonormal basis.
    let c10 = (2.0f64 / 3.0).sqrt() * (2.0f64).sqrt();
    let b = sys.rhs();
    assert!((b[1] - c10).abs() < 1e-12, "b[1] = {}", b[1]);
    let sum_sq: f64 = b.iter().map(|v| v * v).sum();
    assert!((sum_sq - c10 * c10).abs() < 1e-12);
}

#[test]
fn velocity_mean_penalty_keeps_quadratic_identity() {
    // The optional rigid-motion-style penalties enter A as rank-one terms:
    // the quadratic identity and symmetry must survive them.
    use stokes_lsq::catalog::GaugeOptions;

    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let data = stokes_lsq::bench::derive_data(&case);
    let gauge = GaugeOptions {
        pressure_mean_target: 0.0,
        force_pressure_penalty: true,
        velocity_means: vec![(0, 0.25), (1, -0.5)],
    };
    let terms = stokes_lsq::catalog::assemble_problem_terms(
        &decomp,
        &data.f,
        &data.chi,
        &case.bc_specs,
        &gauge,
    )
    .unwrap();
    assert_eq!(terms.penalties.len(), 3);
    let w = 2;
    let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
    for seed in 0..10 {
        let x = pseudo_random(sys.n_dofs(), 300 + seed);
        let ax = sys.matvec(&x);
        let xax: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let bx: f64 = x.iter().zip(sys.rhs()).map(|(a, b)| a * b).sum();
        let quad = xax - 2.0 * bx + sys.constant();
        let direct = sys.functional_at(&x);
        assert!(
            (quad - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "quadratic {quad} vs functional {direct}"
        );
        assert!(xax >= 0.0);
    }
}

#[test]
fn error_norms_match_independent_fine_grid() {
    // compute_errors (tensor evaluation at a W+10 Gauss grid) against an
    // independent path: pointwise evaluation at a denser rule.
    use stokes_lsq::spectral::{evaluate_coeffs, gauss_rule};

    // W = 3 with the schedule tolerance leaves a solver-floor error around
    // 2e-3: a genuine smooth polynomial error field both rules resolve
    // exactly. (At tighter tolerances the error sits at rounding level,
    // where two quadratures legitimately differ in relative terms.)
    let case = manufactured_case(CaseId::Ex3);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let w = 3;
    let report_x = {
        let terms = case_terms(&case, &decomp).unwrap();
        let sys = assemble_system(
            decomp.clone(),
            w,
            terms.all_terms(),
            terms.penalties,
            w + 2,
        )
        .unwrap();
        let precon = build_preconditioner(sys.layout(), w + 2).unwrap();
        let out = pcg_solve(
            |x| sys.matvec(x),
            |r| precon.apply(r),
            sys.rhs(),
            &SolverConfig {
                rel_tolerance: 1e-4,
                max_iterations: 20_000,
                report_cadence: 0,
            },
        )
        .unwrap();
        (sys.layout(), out.x)
    };
    let (layout, x) = report_x;
    let (err_u, _, _, _, _) = compute_errors(&x, layout, &decomp, &case.exact, w + 10);
    // Independent: 21-point Gauss rule, per-point evaluation.
    let rule = gauss_rule(w + 17).unwrap();
    let n = rule.len();
    let mut acc = 0.0;
    for e in &decomp.elements {
        let jac = e.volume_jacobian(2);
        let mut pts_ref = Vec::new();
        let mut wts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                pts_ref.push([rule.nodes[i], rule.nodes[j], 0.0]);
                wts.push(rule.weights[i] * rule.weights[j] * jac);
            }
        }
        for comp in 0..2usize {
            for d in [[0u8, 0, 0], [1, 0, 0], [0, 1, 0]] {
                let vals =
                    evaluate_coeffs(&x[layout.range(e.id, comp)], w, e, 2, &d, &pts_ref).unwrap();
                for (q, v) in vals.iter().enumerate() {
                    let xp = e.to_physical(2, &pts_ref[q]);
                    let ex = (case.exact.velocity[comp])(&d, &xp);
                    acc += wts[q] * (v - ex) * (v - ex);
                }
            }
        }
    }
    let oracle = acc.sqrt();
    assert!(
        (err_u - oracle).abs() <= 1e-8 * oracle,
        "bench err_u {err_u} vs oracle {oracle}"
    );
}
