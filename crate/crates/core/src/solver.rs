//! Normal equations of the quadratic functional, the block preconditioner
//! built from the H2/H1 quadratic form on the reference element, and the
//! preconditioned conjugate gradient solver.
//!
//! The operator A is never assembled: A x = sum over terms of
//! (operator adjoint) . (norm weight) . (operator) x, plus rank-one gauge
//! penalties. The preconditioner has one H2 Gram block per velocity
//! component and one H1 Gram block for the pressure, per element; the form
//! lives on the reference element, so one factorization of each serves
//! every element.

use crate::catalog::{CatalogError, Penalty, ResidualTerm};
use crate::eval::{functional_value, EvalCtx, LevelDelta};
use crate::geometry::Decomposition;
use crate::norms::{elem_levels, FaceKernelTable, NormOrder};
use crate::spectral::{gauss_rule, Basis1D, FieldLayout, SpectralError};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("residual term list is empty")]
    EmptyTerms,
    #[error("preconditioner Gram block is not positive definite (basis/quadrature bug)")]
    SingularBlock,
    #[error("NaN encountered in PCG at iteration {0}")]
    NanBreakdown(usize),
    #[error("operator not positive definite at PCG iteration {0} (p'Ap = {1:.3e})")]
    Indefinite(usize, f64),
    #[error("condition estimate needs more iterations (got {0})")]
    TooFewIterations(usize),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative preconditioned-residual reduction target.
    pub rel_tolerance: f64,
    pub max_iterations: usize,
    /// Residual-history reporting stride for the CLI (0 = never).
    pub report_cadence: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-12,
            max_iterations: 50_000,
            report_cadence: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(SolverError::Config(format!(
                "rel_tolerance must lie in (0, 1), got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

struct PreparedTerm {
    term: ResidualTerm,
    levels: Vec<LevelDelta>,
    /// targets[component][level][node]
    targets: Vec<Vec<Vec<f64>>>,
}

/// Matrix-free symmetric positive semi-definite system A x = b whose
/// solution minimizes the least-squares functional.
pub struct LeastSquaresSystem {
    decomp: Arc<Decomposition>,
    layout: FieldLayout,
    basis: Basis1D,
    kernel: FaceKernelTable,
    terms: Vec<PreparedTerm>,
    penalties: Vec<Penalty>,
    rhs: Vec<f64>,
    constant: f64,
}

/// Assemble the normal-equation operator; `n_quad` is the Gauss point count
/// per direction (W + 2 covers every polynomial integrand of the
/// functional).
pub fn assemble_system(
    decomp: Arc<Decomposition>,
    degree: usize,
    terms: Vec<ResidualTerm>,
    penalties: Vec<Penalty>,
    n_quad: usize,
) -> Result<LeastSquaresSystem, SolverError> {
    if terms.is_empty() {
        return Err(SolverError::EmptyTerms);
    }
    let layout = FieldLayout {
        dim: decomp.dim,
        degree,
        n_elements: decomp.n_elements(),
    };
    let rule = gauss_rule(n_quad)?;
    let kernel = FaceKernelTable::new(&rule, 0.5).map_err(CatalogError::Norm)?;
    let basis = Basis1D::new(degree, rule);
    let mut sys = LeastSquaresSystem {
        decomp,
        layout,
        basis,
        kernel,
        terms: Vec::new(),
        penalties,
        rhs: vec![0.0; layout.total_dofs()],
        constant: 0.0,
    };
    // Freeze target samples.
    let mut prepared = Vec::with_capacity(terms.len());
    {
        let ctx = sys.ctx();
        for term in &terms {
            let levels = ctx.term_levels(term);
            let points = ctx.term_points(term);
            let targets = term
                .components
                .iter()
                .map(|c| {
                    levels
                        .iter()
                        .map(|lv| ctx.target_values(term, &c.target, lv, &points))
                        .collect()
                })
                .collect();
            prepared.push(PreparedTerm {
                term: term.clone(),
                levels,
                targets,
            });
        }
    }
    sys.terms = prepared;
    // b = sum B^T G d (+ target * penalty direction); c = sum d^T G d.
    let mut rhs = vec![0.0; sys.layout.total_dofs()];
    let mut constant = 0.0;
    {
        let ctx = sys.ctx();
        for pt in &sys.terms {
            for (ci, comp) in pt.term.components.iter().enumerate() {
                let weighted = ctx.apply_norm_weight(&pt.term, &pt.targets[ci]);
                for (lv, g) in pt.levels.iter().zip(weighted.iter()) {
                    ctx.component_adjoint(&pt.term.locus, &comp.parts, lv, g, &mut rhs);
                }
                constant += pt.targets[ci]
                    .iter()
                    .zip(&weighted)
                    .map(|(d, g)| d.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
                    .sum::<f64>();
            }
        }
        for p in &sys.penalties {
            let target = match p {
                Penalty::PressureMean { target } | Penalty::VelocityMean { target, .. } => *target,
            };
            ctx.penalty_adjoint(p, target, &mut rhs);
            constant += target * target;
        }
    }
    sys.rhs = rhs;
    sys.constant = constant;
    Ok(sys)
}

impl LeastSquaresSystem {
    fn ctx(&self) -> EvalCtx<'_> {
        EvalCtx {
            decomp: &self.decomp,
            layout: self.layout,
            basis: &self.basis,
            kernel: &self.kernel,
        }
    }

    pub fn layout(&self) -> FieldLayout {
        self.layout
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.total_dofs()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// The data constant c in R(x) = x'Ax - 2 b'x + c.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomp
    }

    /// A x, applied term by term in a fixed order (deterministic).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let ctx = self.ctx();
        let mut out = vec![0.0; x.len()];
        for pt in &self.terms {
            for comp in &pt.term.components {
                let data: Vec<Vec<f64>> = pt
                    .levels
                    .iter()
                    .map(|lv| ctx.component_values(&pt.term.locus, &comp.parts, lv, x))
                    .collect();
                let weighted = ctx.apply_norm_weight(&pt.term, &data);
                for (lv, g) in pt.levels.iter().zip(weighted.iter()) {
                    ctx.component_adjoint(&pt.term.locus, &comp.parts, lv, g, &mut out);
                }
            }
        }
        for p in &self.penalties {
            let m = ctx.penalty_moment(p, x);
            ctx.penalty_adjoint(p, m, &mut out);
        }
        out
    }

    /// R(x) evaluated through the residuals (independent of matvec algebra).
    pub fn functional_at(&self, x: &[f64]) -> f64 {
        let terms: Vec<ResidualTerm> = self.terms.iter().map(|p| p.term.clone()).collect();
        functional_value(x, &terms, &self.penalties, &self.ctx())
    }

    /// Dense A for small problems (oracle and direct-solve checks).
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.n_dofs();
        let mut a = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.matvec(&e);
            for i in 0..n {
                a[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        a
    }
}

/// Per-element factorized Gram blocks of the quadratic form
/// U = sum_l ||u_l||_{2,Q}^2 + ||p_l||_{1,Q}^2: an H2 block per velocity
/// component and an H1 block for the pressure (3 blocks per element in 2D,
/// 4 in 3D). The form lives on Q, so all elements share two factorizations.
pub struct BlockPreconditioner {
    layout: FieldLayout,
    h2_gram: DMatrix<f64>,
    h1_gram: DMatrix<f64>,
    h2: Cholesky<f64, Dyn>,
    h1: Cholesky<f64, Dyn>,
}

pub fn build_preconditioner(
    layout: FieldLayout,
    n_quad: usize,
) -> Result<BlockPreconditioner, SolverError> {
    let rule = gauss_rule(n_quad)?;
    let basis = Basis1D::new(layout.degree, rule);
    let modes = layout.modes();
    // 1D Grams of d-th derivatives on (-1,1).
    let mut g1 = Vec::new();
    for d in 0..=2 {
        let mut g = DMatrix::zeros(modes, modes);
        for m in 0..modes {
            for n in 0..modes {
                let mut acc = 0.0;
                for q in 0..basis.n_nodes() {
                    acc +=
                        basis.rule.weights[q] * basis.eval[d].get(q, m) * basis.eval[d].get(q, n);
                }
                g[(m, n)] = acc;
            }
        }
        g1.push(g);
    }
    let gram = |order: NormOrder| -> DMatrix<f64> {
        let total = layout.tensor_len();
        let mut g = DMatrix::zeros(total, total);
        let levels = elem_levels(order, layout.dim);
        let modes_pow = |k: usize| modes.pow(k as u32);
        for row in 0..total {
            for col in 0..total {
                let mut acc = 0.0;
                for alpha in &levels {
                    let mut prod = 1.0;
                    for ax in 0..layout.dim {
                        let m = row / modes_pow(ax) % modes;
                        let n = col / modes_pow(ax) % modes;
                        prod *= g1[alpha[ax] as usize][(m, n)];
                    }
                    acc += prod;
                }
                g[(row, col)] = acc;
            }
        }
        g
    };
    let h2_gram = gram(NormOrder::H2Elem);
    let h1_gram = gram(NormOrder::H1Elem);
    let h2 = Cholesky::new(h2_gram.clone()).ok_or(SolverError::SingularBlock)?;
    let h1 = Cholesky::new(h1_gram.clone()).ok_or(SolverError::SingularBlock)?;
    Ok(BlockPreconditioner {
        layout,
        h2_gram,
        h1_gram,
        h2,
        h1,
    })
}

impl BlockPreconditioner {
    /// z = P^{-1} r, block by block.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        let tlen = self.layout.tensor_len();
        for e in 0..self.layout.n_elements {
            for f in 0..self.layout.n_fields() {
                let range = self.layout.range(e, f);
                let block = DVector::from_column_slice(&r[range.clone()]);
                let solved = if f == self.layout.pressure_field() {
                    self.h1.solve(&block)
                } else {
                    self.h2.solve(&block)
                };
                z[range].copy_from_slice(solved.as_slice());
                debug_assert_eq!(solved.len(), tlen);
            }
        }
        z
    }

    /// P r (the quadratic form itself), for round-trip checks.
    pub fn apply_gram(&self, r: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; r.len()];
        for e in 0..self.layout.n_elements {
            for f in 0..self.layout.n_fields() {
                let range = self.layout.range(e, f);
                let block = DVector::from_column_slice(&r[range.clone()]);
                let g = if f == self.layout.pressure_field() {
                    &self.h1_gram
                } else {
                    &self.h2_gram
                };
                let prod = g * block;
                y[range].copy_from_slice(prod.as_slice());
            }
        }
        y
    }

    /// 3 blocks per element in 2D, 4 in 3D.
    pub fn block_count(&self) -> usize {
        self.layout.n_elements * self.layout.n_fields()
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned residual norms sqrt(r' P^{-1} r), including the
    /// initial one.
    pub residual_history: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn pcg_solve<A, P>(
    matvec: A,
    precon: P,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<PcgOutcome, SolverError>
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precon(&r);
    let mut rz = dot(&r, &z);
    if !rz.is_finite() {
        return Err(SolverError::NanBreakdown(0));
    }
    let norm0 = rz.max(0.0).sqrt();
    let mut history = vec![norm0];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    if norm0 == 0.0 {
        return Ok(PcgOutcome {
            x,
            iterations: 0,
            converged: true,
            residual_history: history,
            alphas,
            betas,
        });
    }
    let mut p = z.clone();
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..cfg.max_iterations {
        let q = matvec(&p);
        let pq = dot(&p, &q);
        if !pq.is_finite() {
            return Err(SolverError::NanBreakdown(k));
        }
        if pq <= 0.0 {
            // A numerically indefinite direction: acceptable only if the
            // residual is already at rounding level.
            let cur = *history.last().unwrap();
            if cur <= 1e-8 * norm0 {
                converged = true;
                break;
            }
            return Err(SolverError::Indefinite(k, pq));
        }
        let alpha = rz / pq;
        alphas.push(alpha);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        z = precon(&r);
        let rz_new = dot(&r, &z);
        if !rz_new.is_finite() {
            return Err(SolverError::NanBreakdown(k));
        }
        let norm = rz_new.max(0.0).sqrt();
        history.push(norm);
        iterations = k + 1;
        if norm <= cfg.rel_tolerance * norm0 {
            converged = true;
            break;
        }
        let beta = rz_new / rz;
        betas.push(beta);
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Ok(PcgOutcome {
        x,
        iterations,
        converged,
        residual_history: history,
        alphas,
        betas,
    })
}

/// Eigenvalue count of the Lanczos tridiagonal below `x` (Sturm sequence).
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut t = d[0] - x;
    if t < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if t == 0.0 { 1e-300 } else { t };
        t = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if t < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_eig(d: &[f64], e: &[f64], want_below: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid) >= want_below {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Extreme Ritz values of the preconditioned operator from the CG
/// coefficients (Lanczos tridiagonal), estimating (lambda_min, lambda_max).
pub fn condition_estimate(outcome: &PcgOutcome) -> Result<(f64, f64), SolverError> {
    let k = outcome.alphas.len();
    if k == 0 || (!outcome.converged && k < 10) {
        return Err(SolverError::TooFewIterations(k));
    }
    let mut d = vec![0.0; k];
    let mut e = vec![0.0; k.saturating_sub(1)];
    d[0] = 1.0 / outcome.alphas[0];
    for i in 1..k {
        d[i] = 1.0 / outcome.alphas[i] + outcome.betas[i - 1] / outcome.alphas[i - 1];
        e[i - 1] = outcome.betas[i - 1].max(0.0).sqrt() / outcome.alphas[i - 1];
    }
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let mut r = 0.0;
        if i > 0 {
            r += e[i - 1].abs();
        }
        if i < k - 1 {
            r += e[i].abs();
        }
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let lmin = bisect_eig(&d, &e, 1, lo, hi);
    let lmax = bisect_eig(&d, &e, k, lo, hi);
    Ok((lmin, lmax))
}

/// Dense direct solve of A x = b (test oracle for small systems).
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let bv = DVector::from_column_slice(b);
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Some(chol.solve(&bv).as_slice().to_vec());
    }
    a.clone().lu().solve(&bv).map(|v| v.as_slice().to_vec())
}
