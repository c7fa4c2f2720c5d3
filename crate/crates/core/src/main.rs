//! Command-line front end: run benchmark cases or config-file experiments
//! and emit CSV tables plus plot data.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stokes_lsq::bench::{manufactured_case, ALL_CASES};
use stokes_lsq::config::{parse_config, parse_w_range, ExperimentConfig, ResolvedProblem};
use stokes_lsq::runner::{execute, write_artifacts};

const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stokes-lsq",
    about = "Least-squares spectral element solver for Stokes flow with non-standard boundary conditions",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a built-in benchmark case or a config-file experiment.
    Run(RunArgs),
    /// List the built-in benchmark cases.
    Cases,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in case name (ex1..ex8).
    #[arg(long, conflicts_with = "config")]
    case: Option<String>,
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Polynomial orders: a single W, an inclusive range a..b, or a,b,c.
    #[arg(long = "W", value_name = "W|A..B|A,B,C")]
    w: Option<String>,
    /// PCG relative tolerance (default: a per-order schedule).
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory for CSV and plot data.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count. Accepted for compatibility; evaluation is
    /// sequential with a fixed reduction order, so results are identical
    /// for any value.
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&args.case, &args.config) {
        (Some(case), None) => {
            let text = format!("[problem]\ncase = \"{case}\"\n");
            parse_config(&text).map_err(|e| e.to_string())?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        _ => return Err("exactly one of --case or --config is required".to_string()),
    };
    if let Some(w) = &args.w {
        let ws = parse_w_range(w).ok_or_else(|| format!("cannot parse --W {w:?}"))?;
        if ws.is_empty() || ws.iter().any(|&w| w < 2) {
            return Err("--W values must be >= 2".to_string());
        }
        cfg.ws = ws;
    }
    if let Some(t) = args.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(format!("--tol must lie in (0, 1), got {t}"));
        }
        cfg.tol = Some(t);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err("--threads must be >= 1".to_string());
        }
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let name = cfg.problem_name();
    let relative = match &cfg.problem {
        ResolvedProblem::Builtin(id) => manufactured_case(*id).relative_errors,
        ResolvedProblem::Custom(_) => false,
    };
    println!(
        "running {name} at W = {:?}{}",
        cfg.ws,
        if relative { " (relative errors)" } else { "" }
    );
    let out = match execute(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(EXIT_NONCONVERGED);
        }
    };
    println!(
        "{:>4} {:>13} {:>13} {:>13} {:>7} {:>9}",
        "W", "err_u_H1", "err_p_L2", "err_c_L2", "itr", "time"
    );
    for r in &out.rows {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>4} {:>13} {:>13} {:>13} {:>7} {:>8.2}s{}",
            r.w,
            fmt(r.err_u_h1),
            fmt(r.err_p_l2),
            fmt(r.err_c_l2),
            r.iterations,
            r.wall_time_s,
            if r.converged { "" } else { "  NOT CONVERGED" }
        );
    }
    match write_artifacts(&out, &name, &cfg.out_dir) {
        Ok(csv_path) => println!("wrote {}", csv_path.display()),
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    }
    if !out.all_converged {
        eprintln!("solver did not converge for at least one W");
        return ExitCode::from(EXIT_NONCONVERGED);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run(args) => run(args),
        Cmd::Cases => {
            for id in ALL_CASES {
                let case = manufactured_case(id);
                println!("{:<5} {}D  {}", id.name(), case.dim, case.description);
            }
            ExitCode::SUCCESS
        }
    }
}
