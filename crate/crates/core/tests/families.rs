//! Every boundary-condition family solved end to end on the unit square
//! with one manufactured polynomial solution: the residual vanishes at the
//! truth interpolant, the operator is SPD, and PCG agrees with a dense
//! direct solve.

use std::sync::Arc;

use stokes_lsq::bench::{derive_data, exact_pressure_integral, manufactured_case, CaseId};
use stokes_lsq::catalog::{
    assemble_problem_terms, BoundaryConditionSpec, DataSource, Family, FamilyParams, GaugeOptions,
    ALL_FAMILIES,
};
use stokes_lsq::geometry::build_decomposition;
use stokes_lsq::solver::{
    assemble_system, build_preconditioner, dense_solve, pcg_solve, SolverConfig,
};
use stokes_lsq::spectral::interpolate;

/// Group tag assignment per family on the unit square's four sides.
fn group_tags(family: Family) -> Vec<Vec<String>> {
    let t = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match family.n_groups() {
        1 => vec![t(&["xmin", "xmax", "ymin", "ymax"])],
        2 => vec![t(&["xmin", "ymax"]), t(&["ymin", "xmax"])],
        3 => vec![t(&["ymin", "ymax"]), t(&["xmin"]), t(&["xmax"])],
        4 => vec![t(&["xmin"]), t(&["ymin"]), t(&["ymax"]), t(&["xmax"])],
        _ => unreachable!(),
    }
}

fn params_for(family: Family) -> FamilyParams {
    match family {
        Family::B2 | Family::B3 => FamilyParams {
            b: Some(1.0),
            ..Default::default()
        },
        Family::B18 => FamilyParams {
            alpha: Some(0.5),
            ..Default::default()
        },
        Family::B10 | Family::B16 => FamilyParams {
            nu: Some(1.0),
            ..Default::default()
        },
        _ => FamilyParams::default(),
    }
}

#[test]
fn all_families_solve_on_unit_square() {
    let case = manufactured_case(CaseId::Ex1);
    let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
    let data = derive_data(&case);
    let gauge = GaugeOptions {
        pressure_mean_target: exact_pressure_integral(&case, &decomp),
        ..Default::default()
    };
    for family in ALL_FAMILIES {
        let spec = BoundaryConditionSpec {
            family,
            group_tags: group_tags(family),
            data: DataSource::Exact(case.exact.clone()),
            params: params_for(family),
        };
        // Residual at the truth interpolant (W = 5 holds the degree-4
        // solution exactly).
        let w = 5;
        let terms = assemble_problem_terms(
            &decomp,
            &data.f,
            &data.chi,
            std::slice::from_ref(&spec),
            &gauge,
        )
        .unwrap();
        let sys =
            assemble_system(decomp.clone(), w, terms.all_terms(), terms.penalties, w + 2).unwrap();
        let layout = sys.layout();
        let mut x = vec![0.0; layout.total_dofs()];
        for e in &decomp.elements {
            for f in 0..3usize {
                let field = case.exact.field(f).clone();
                let c = interpolate(|p| field(&[0, 0, 0], p), e, 2, w, w + 2).unwrap();
                x[layout.range(e.id, f)].copy_from_slice(&c);
            }
        }
        let r = sys.functional_at(&x);
        assert!(r <= 1e-18, "{family:?}: functional at truth {r:.3e}");

        // Small solve against the dense oracle.
        let w = 2;
        let terms = assemble_problem_terms(
            &decomp,
            &data.f,
            &data.chi,
            std::slice::from_ref(&spec),
            &gauge,
        )
        .unwrap();
        let sys =
            assemble_system(decomp.clone(), w, terms.all_terms(), terms.penalties, w + 2).unwrap();
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
        assert!(out.converged, "{family:?}: PCG did not converge");
        let a = sys.dense_matrix();
        let xd = dense_solve(&a, sys.rhs()).expect("dense solve");
        let num: f64 = out
            .x
            .iter()
            .zip(&xd)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let den: f64 = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            num / den <= 1e-8,
            "{family:?}: PCG vs dense {:.3e}",
            num / den
        );
    }
}
