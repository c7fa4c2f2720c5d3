//! Dense verification of the preconditioned conditioning (ignored by
//! default; slow at larger W). Confirms the Lanczos-based estimates used by
//! the acceptance suite: run with
//! `cargo test --release --test diagnose -- --ignored --nocapture`.

use nalgebra::DMatrix;
use std::sync::Arc;
use stokes_lsq::bench::{case_terms, manufactured_case, CaseId};
use stokes_lsq::geometry::build_decomposition;
use stokes_lsq::solver::{assemble_system, build_preconditioner};

#[test]
#[ignore]
fn dense_condition_ex1() {
    for w in [2usize, 3, 4, 5] {
        let case = manufactured_case(CaseId::Ex1);
        let decomp = Arc::new(build_decomposition(&case.domain).unwrap());
        let terms = case_terms(&case, &decomp).unwrap();
        let sys = assemble_system(decomp, w, terms.all_terms(), terms.penalties, w + 2).unwrap();
        let precon = build_preconditioner(sys.layout(), w + 2).unwrap();
        let n = sys.n_dofs();
        let a = sys.dense_matrix();
        let mut pa = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
            let z = precon.apply(&col);
            for i in 0..n {
                pa[(i, j)] = z[i];
            }
        }
        let eig = pa.complex_eigenvalues();
        let mut evs: Vec<f64> = eig.iter().map(|c| c.re).collect();
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "Ex1 W={w}: dense lambda_min {:.4e} lambda_max {:.4e} cond {:.1}",
            evs[0],
            evs[n - 1],
            evs[n - 1] / evs[0]
        );
    }
}
