//! Experiment execution: runs built-in cases or custom problems over a W
//! list and writes the CSV table, plot data, and optional residual
//! histories.

use crate::bench::{compute_errors, default_tolerance, manufactured_case, ErrorReport};
use crate::catalog::{assemble_problem_terms, CatalogError};
use crate::config::{CustomProblem, ExperimentConfig, ResolvedProblem};
use crate::geometry::build_decomposition;
use crate::solver::{
    assemble_system, build_preconditioner, pcg_solve, PcgOutcome, SolverConfig, SolverError,
};
use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("io error writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// One CSV row; error fields are None when no exact solution is available.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub case: String,
    pub w: usize,
    pub err_u_h1: Option<f64>,
    pub err_p_l2: Option<f64>,
    pub err_c_l2: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
}

pub struct RunOutput {
    pub rows: Vec<RunRow>,
    pub csv: String,
    pub plot: Option<String>,
    pub residual_files: Vec<(String, String)>,
    pub all_converged: bool,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

/// CSV text for a row list (header + one line per run).
pub fn rows_to_csv(rows: &[RunRow]) -> String {
    let mut out = String::from("case,W,err_u_H1,err_p_L2,err_c_L2,iterations,wall_time\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.3}",
            r.case,
            r.w,
            fmt_opt(r.err_u_h1),
            fmt_opt(r.err_p_l2),
            fmt_opt(r.err_c_l2),
            r.iterations,
            r.wall_time_s
        );
    }
    out
}

fn rows_to_plot(rows: &[RunRow]) -> Option<String> {
    if rows.iter().any(|r| r.err_u_h1.is_none()) {
        return None;
    }
    let mut out = String::from("# W log10_err_u_H1 log10_err_p_L2 log10_err_c_L2\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{} {:.6} {:.6} {:.6}",
            r.w,
            r.err_u_h1.unwrap().max(1e-300).log10(),
            r.err_p_l2.unwrap().max(1e-300).log10(),
            r.err_c_l2.unwrap().max(1e-300).log10(),
        );
    }
    Some(out)
}

fn residual_csv(outcome: &PcgOutcome, cadence: usize) -> String {
    let mut out = String::from("iteration,residual\n");
    for (i, r) in outcome.residual_history.iter().enumerate() {
        if i % cadence == 0 || i + 1 == outcome.residual_history.len() {
            let _ = writeln!(out, "{i},{r:.6e}");
        }
    }
    out
}

fn report_to_row(name: &str, r: &ErrorReport) -> RunRow {
    RunRow {
        case: name.to_string(),
        w: r.w,
        err_u_h1: Some(r.err_u_h1),
        err_p_l2: Some(r.err_p_l2),
        err_c_l2: Some(r.err_c_l2),
        iterations: r.iterations,
        converged: r.converged,
        wall_time_s: r.wall_time_s,
    }
}

fn solver_config(cfg: &ExperimentConfig, w: usize) -> SolverConfig {
    SolverConfig {
        rel_tolerance: cfg.tol.unwrap_or_else(|| default_tolerance(w)),
        max_iterations: cfg.max_iterations.unwrap_or(50_000),
        report_cadence: cfg.report_cadence,
    }
}

fn run_custom(
    problem: &CustomProblem,
    w: usize,
    cfg: &SolverConfig,
) -> Result<(RunRow, PcgOutcome), RunError> {
    let start = Instant::now();
    let decomp = Arc::new(build_decomposition(&problem.domain).map_err(CatalogError::Geometry)?);
    let terms = assemble_problem_terms(
        &decomp,
        &problem.f,
        &problem.chi,
        &problem.bcs,
        &problem.gauge,
    )?;
    let system = assemble_system(decomp.clone(), w, terms.all_terms(), terms.penalties, w + 2)?;
    let precon = build_preconditioner(system.layout(), w + 2)?;
    let outcome = pcg_solve(|x| system.matvec(x), |r| precon.apply(r), system.rhs(), cfg)?;
    let (eu, ep, ec) = match &problem.exact {
        Some(exact) => {
            let (eu, ep, ec, _, _) =
                compute_errors(&outcome.x, system.layout(), &decomp, exact, w + 10);
            (Some(eu), Some(ep), Some(ec))
        }
        None => (None, None, None),
    };
    Ok((
        RunRow {
            case: problem.name.clone(),
            w,
            err_u_h1: eu,
            err_p_l2: ep,
            err_c_l2: ec,
            iterations: outcome.iterations,
            converged: outcome.converged,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        outcome,
    ))
}

/// Run every W of the experiment and collect artifacts (in memory; writing
/// to disk is the caller's concern so tests stay filesystem-free).
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let mut rows = Vec::new();
    let mut residual_files = Vec::new();
    let name = cfg.problem_name();
    for &w in &cfg.ws {
        let scfg = solver_config(cfg, w);
        match &cfg.problem {
            ResolvedProblem::Builtin(id) => {
                let case = manufactured_case(*id);
                let (report, outcome) = crate::bench::run_case_full(&case, w, Some(scfg))?;
                if cfg.report_cadence > 0 {
                    residual_files.push((
                        format!("{name}_w{w}_residuals.csv"),
                        residual_csv(&outcome, cfg.report_cadence),
                    ));
                }
                rows.push(report_to_row(&name, &report));
            }
            ResolvedProblem::Custom(problem) => {
                let (row, outcome) = run_custom(problem, w, &scfg)?;
                if cfg.report_cadence > 0 {
                    residual_files.push((
                        format!("{name}_w{w}_residuals.csv"),
                        residual_csv(&outcome, cfg.report_cadence),
                    ));
                }
                rows.push(row);
            }
        }
    }
    let all_converged = rows.iter().all(|r| r.converged);
    Ok(RunOutput {
        csv: rows_to_csv(&rows),
        plot: rows_to_plot(&rows),
        residual_files,
        rows,
        all_converged,
    })
}

/// Write artifacts under `dir`; returns the CSV path.
pub fn write_artifacts(out: &RunOutput, name: &str, dir: &PathBuf) -> Result<PathBuf, RunError> {
    let io_err = |path: &PathBuf, source: io::Error| RunError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let csv_path = dir.join(format!("{name}.csv"));
    std::fs::write(&csv_path, &out.csv).map_err(|e| io_err(&csv_path, e))?;
    if let Some(plot) = &out.plot {
        let plot_path = dir.join(format!("{name}_plot.dat"));
        std::fs::write(&plot_path, plot).map_err(|e| io_err(&plot_path, e))?;
    }
    for (fname, content) in &out.residual_files {
        let p = dir.join(fname);
        std::fs::write(&p, content).map_err(|e| io_err(&p, e))?;
    }
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn builtin_run_produces_rows() {
        let cfg = parse_config(
            r#"
            [problem]
            case = "ex1"
            [solve]
            W = [2, 3]
        "#,
        )
        .unwrap();
        let out = execute(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.all_converged);
        assert!(out.csv.starts_with("case,W,err_u_H1"));
        assert_eq!(out.csv.lines().count(), 3);
        assert!(out.plot.is_some());
    }

    #[test]
    fn custom_run_without_exact_has_empty_error_columns() {
        let cfg = parse_config(
            r#"
            [domain]
            dim = 2
            blocks = [[0.0, 0.0, 1.0, 1.0]]
            [[bc]]
            family = "B5"
            tags = [["xmin", "xmax", "ymin", "ymax"]]
            data = [{ g = ["0", "0"], p_tilde = "x1" }]
            [data]
            f1 = "1"
            [solve]
            W = [2]
        "#,
        )
        .unwrap();
        let out = execute(&cfg).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.rows[0].err_u_h1.is_none());
        assert!(out.plot.is_none());
        let line = out.csv.lines().nth(1).unwrap();
        assert!(line.starts_with("custom,2,,,,"));
    }

    #[test]
    fn csv_deterministic_modulo_wall_time() {
        let text = r#"
            [problem]
            case = "ex3"
            [solve]
            W = [2, 3]
        "#;
        let strip_wall = |csv: &str| -> String {
            csv.lines()
                .map(|l| {
                    l.rsplit_once(',')
                        .map(|(a, _)| a.to_string())
                        .unwrap_or_default()
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        let a = execute(&parse_config(text).unwrap()).unwrap();
        let b = execute(&parse_config(text).unwrap()).unwrap();
        assert_eq!(strip_wall(&a.csv), strip_wall(&b.csv));
    }
    #[test]
    fn residual_history_artifacts() {
        let cfg = parse_config(
            r#"
            [problem]
            case = "ex1"
            [solve]
            W = [3]
            report_cadence = 5
        "#,
        )
        .unwrap();
        let out = execute(&cfg).unwrap();
        assert_eq!(out.residual_files.len(), 1);
        let (name, content) = &out.residual_files[0];
        assert_eq!(name, "ex1_w3_residuals.csv");
        assert!(content.starts_with("iteration,residual"));
        // Rows at the cadence plus the final residual.
        let rows: Vec<&str> = content.lines().skip(1).collect();
        assert!(rows.len() >= 2);
        assert!(rows[0].starts_with("0,"));
    }
}
