//! Tensor-product polynomial basis of degree W per variable, Gauss-Legendre
//! quadrature, differentiation, evaluation, and trace extraction onto faces.
//!
//! The basis spans the same space as the monomials xi^i eta^j but uses
//! L2-orthonormal Legendre modes for conditioning; the least-squares
//! functional and its minimizer do not depend on that choice.

use crate::geometry::{face_axis, face_is_upper, Element};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("quadrature rule needs at least one point")]
    EmptyRule,
    #[error("derivative order {0} exceeds the supported maximum of 2")]
    DerivativeOrder(usize),
    #[error("invalid face index {0}")]
    InvalidFace(usize),
    #[error("coefficient tensor has length {got}, expected {expected}")]
    CoefficientShape { got: usize, expected: usize },
}

/// Highest per-axis derivative order tabulated by the basis.
pub const MAX_DERIV: usize = 2;

/// Gauss-Legendre rule on (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Legendre P_n and P_n' at x (unnormalized).
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights; exact for polynomials of degree 2n-1.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule, SpectralError> {
    if n == 0 {
        return Err(SpectralError::EmptyRule);
    }
    if n == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Row-major dense matrix; small and allocation-only, used for basis tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Orthonormal Legendre values/derivatives (orders 0..=2) at a set of points.
/// Row q, column m holds phi_m^(d)(x_q).
pub fn legendre_table(degree: usize, points: &[f64]) -> [Mat; 3] {
    let modes = degree + 1;
    let mut out = [
        Mat::zeros(points.len(), modes),
        Mat::zeros(points.len(), modes),
        Mat::zeros(points.len(), modes),
    ];
    for (q, &x) in points.iter().enumerate() {
        let (p, dp, ddp) = legendre_derivs(degree, x);
        for m in 0..modes {
            let s = ((2 * m + 1) as f64 / 2.0).sqrt();
            out[0].set(q, m, s * p[m]);
            out[1].set(q, m, s * dp[m]);
            out[2].set(q, m, s * ddp[m]);
        }
    }
    out
}

/// Unnormalized Legendre P_m, P_m', P_m'' for m = 0..=degree at x.
fn legendre_derivs(degree: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = degree + 1;
    let mut p = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut ddp = vec![0.0; n];
    p[0] = 1.0;
    if n > 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for j in 1..degree {
        let jf = j as f64;
        p[j + 1] = ((2.0 * jf + 1.0) * x * p[j] - jf * p[j - 1]) / (jf + 1.0);
        dp[j + 1] = (jf + 1.0) * p[j] + x * dp[j];
        ddp[j + 1] = (jf + 2.0) * dp[j] + x * ddp[j];
    }
    (p, dp, ddp)
}

/// Basis tables for one polynomial degree and one quadrature rule: modal
/// Legendre values and derivatives at the rule's nodes and at the endpoints.
#[derive(Debug, Clone)]
pub struct Basis1D {
    pub degree: usize,
    pub rule: QuadratureRule,
    /// eval[d]: (n_nodes x n_modes) d-th derivative values at the nodes.
    pub eval: [Mat; 3],
    /// endpoint[side][d][m]: d-th derivative of mode m at xi = -1 (side 0)
    /// or xi = +1 (side 1).
    pub endpoint: [[Vec<f64>; 3]; 2],
}

impl Basis1D {
    pub fn new(degree: usize, rule: QuadratureRule) -> Self {
        let eval = legendre_table(degree, &rule.nodes);
        let tab_lo = legendre_table(degree, &[-1.0]);
        let tab_hi = legendre_table(degree, &[1.0]);
        let take = |t: &[Mat; 3]| -> [Vec<f64>; 3] {
            [t[0].data.clone(), t[1].data.clone(), t[2].data.clone()]
        };
        Self {
            degree,
            rule,
            eval,
            endpoint: [take(&tab_lo), take(&tab_hi)],
        }
    }

    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.rule.len()
    }
}

/// y[.., o, ..] = sum_i get(o, i) x[.., i, ..] along `ax`; axis 0 is the
/// fastest-varying index.
fn contract<F: Fn(usize, usize) -> f64>(
    x: &[f64],
    shape: &[usize],
    ax: usize,
    out_dim: usize,
    get: F,
) -> (Vec<f64>, Vec<usize>) {
    let in_dim = shape[ax];
    let inner: usize = shape[..ax].iter().product();
    let outer: usize = shape[ax + 1..].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[ax] = out_dim;
    let mut y = vec![0.0; inner * out_dim * outer];
    for ou in 0..outer {
        for o in 0..out_dim {
            let ybase = inner * (o + out_dim * ou);
            for i in 0..in_dim {
                let c = get(o, i);
                if c == 0.0 {
                    continue;
                }
                let xbase = inner * (i + in_dim * ou);
                for k in 0..inner {
                    y[ybase + k] += c * x[xbase + k];
                }
            }
        }
    }
    (y, out_shape)
}

fn scale_factor(e: &Element, dim: usize, alpha: &[u8; 3]) -> f64 {
    let mut s = 1.0;
    for a in 0..dim {
        s *= e.deriv_scale(a).powi(alpha[a] as i32);
    }
    s
}

/// Values of the physical derivative D^alpha of a coefficient tensor at the
/// tensor grid of the basis rule (n_nodes per axis).
pub fn eval_volume(
    coeffs: &[f64],
    e: &Element,
    dim: usize,
    alpha: &[u8; 3],
    basis: &Basis1D,
) -> Vec<f64> {
    let modes = basis.modes();
    let mut x = coeffs.to_vec();
    let mut shape = vec![modes; dim];
    for ax in 0..dim {
        let m = &basis.eval[alpha[ax] as usize];
        let (y, s) = contract(&x, &shape, ax, m.rows, |o, i| m.get(o, i));
        x = y;
        shape = s;
    }
    let scale = scale_factor(e, dim, alpha);
    for v in &mut x {
        *v *= scale;
    }
    x
}

/// Adjoint of [`eval_volume`]: accumulate the coefficient-space image of a
/// node cotangent into `out` (+=).
pub fn eval_volume_adjoint(
    cot: &[f64],
    e: &Element,
    dim: usize,
    alpha: &[u8; 3],
    basis: &Basis1D,
    weight: f64,
    out: &mut [f64],
) {
    let nq = basis.n_nodes();
    let mut x = cot.to_vec();
    let mut shape = vec![nq; dim];
    for ax in 0..dim {
        let m = &basis.eval[alpha[ax] as usize];
        let (y, s) = contract(&x, &shape, ax, m.cols, |o, i| m.get(i, o));
        x = y;
        shape = s;
    }
    let scale = weight * scale_factor(e, dim, alpha);
    for (o, v) in out.iter_mut().zip(x.iter()) {
        *o += scale * v;
    }
}

/// Trace of the physical derivative D^alpha onto a face: values at the
/// face's tangential tensor grid (ascending tangent axes).
pub fn eval_face(
    coeffs: &[f64],
    e: &Element,
    dim: usize,
    face: usize,
    alpha: &[u8; 3],
    basis: &Basis1D,
) -> Vec<f64> {
    let modes = basis.modes();
    let axis = face_axis(face);
    let side = usize::from(face_is_upper(face));
    let mut x = coeffs.to_vec();
    let mut shape = vec![modes; dim];
    // Process the normal axis last so tangential axes keep ascending order
    // with axis 0 fastest; contracting the normal axis to a single entry
    // first would shift strides, so go in ascending order but give the
    // normal axis out_dim = 1 and squeeze at the end.
    for ax in 0..dim {
        if ax == axis {
            let v = &basis.endpoint[side][alpha[ax] as usize];
            let (y, s) = contract(&x, &shape, ax, 1, |_, i| v[i]);
            x = y;
            shape = s;
        } else {
            let m = &basis.eval[alpha[ax] as usize];
            let (y, s) = contract(&x, &shape, ax, m.rows, |o, i| m.get(o, i));
            x = y;
            shape = s;
        }
    }
    let scale = scale_factor(e, dim, alpha);
    for v in &mut x {
        *v *= scale;
    }
    x
}

/// Adjoint of [`eval_face`] (+= into `out`).
pub fn eval_face_adjoint(
    cot: &[f64],
    e: &Element,
    dim: usize,
    face: usize,
    alpha: &[u8; 3],
    basis: &Basis1D,
    weight: f64,
    out: &mut [f64],
) {
    let nq = basis.n_nodes();
    let axis = face_axis(face);
    let side = usize::from(face_is_upper(face));
    let mut shape: Vec<usize> = (0..dim).map(|a| if a == axis { 1 } else { nq }).collect();
    let mut x = cot.to_vec();
    for ax in 0..dim {
        if ax == axis {
            let v = &basis.endpoint[side][alpha[ax] as usize];
            let (y, s) = contract(&x, &shape, ax, basis.modes(), |o, _| v[o]);
            x = y;
            shape = s;
        } else {
            let m = &basis.eval[alpha[ax] as usize];
            let (y, s) = contract(&x, &shape, ax, m.cols, |o, i| m.get(i, o));
            x = y;
            shape = s;
        }
    }
    let scale = weight * scale_factor(e, dim, alpha);
    for (o, v) in out.iter_mut().zip(x.iter()) {
        *o += scale * v;
    }
}

/// Degrees of freedom layout: per element, `dim` velocity coefficient
/// tensors followed by one pressure tensor, each (W+1)^dim long.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldLayout {
    pub dim: usize,
    pub degree: usize,
    pub n_elements: usize,
}

impl FieldLayout {
    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    pub fn tensor_len(&self) -> usize {
        self.modes().pow(self.dim as u32)
    }

    /// Velocity components plus pressure.
    pub fn n_fields(&self) -> usize {
        self.dim + 1
    }

    pub fn pressure_field(&self) -> usize {
        self.dim
    }

    pub fn elem_stride(&self) -> usize {
        self.n_fields() * self.tensor_len()
    }

    pub fn total_dofs(&self) -> usize {
        self.n_elements * self.elem_stride()
    }

    pub fn range(&self, element: usize, field: usize) -> std::ops::Range<usize> {
        let start = element * self.elem_stride() + field * self.tensor_len();
        start..start + self.tensor_len()
    }
}

/// Per-element coefficient tensors for the velocity components and pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesField {
    pub layout: FieldLayout,
    pub data: Vec<f64>,
}

impl StokesField {
    pub fn zeros(layout: FieldLayout) -> Self {
        Self {
            layout,
            data: vec![0.0; layout.total_dofs()],
        }
    }

    pub fn coeffs(&self, element: usize, field: usize) -> &[f64] {
        &self.data[self.layout.range(element, field)]
    }

    pub fn coeffs_mut(&mut self, element: usize, field: usize) -> &mut [f64] {
        let r = self.layout.range(element, field);
        &mut self.data[r]
    }
}

/// Evaluate the physical derivative D^alpha of one field at arbitrary
/// reference points of an element.
pub fn evaluate(
    field: &StokesField,
    e: &Element,
    fieldno: usize,
    alpha: &[u8; 3],
    points_ref: &[[f64; 3]],
) -> Result<Vec<f64>, SpectralError> {
    evaluate_coeffs(
        field.coeffs(e.id, fieldno),
        field.layout.degree,
        e,
        field.layout.dim,
        alpha,
        points_ref,
    )
}

/// Same as [`evaluate`] but on a raw coefficient tensor.
pub fn evaluate_coeffs(
    coeffs: &[f64],
    degree: usize,
    e: &Element,
    dim: usize,
    alpha: &[u8; 3],
    points_ref: &[[f64; 3]],
) -> Result<Vec<f64>, SpectralError> {
    for a in 0..dim {
        if alpha[a] as usize > MAX_DERIV {
            return Err(SpectralError::DerivativeOrder(alpha[a] as usize));
        }
    }
    let modes = degree + 1;
    let expected = modes.pow(dim as u32);
    if coeffs.len() != expected {
        return Err(SpectralError::CoefficientShape {
            got: coeffs.len(),
            expected,
        });
    }
    let scale = scale_factor(e, dim, alpha);
    let mut out = Vec::with_capacity(points_ref.len());
    for pt in points_ref {
        let mut x = coeffs.to_vec();
        let mut shape = vec![modes; dim];
        for ax in 0..dim {
            let tab = legendre_table(degree, &pt[ax..ax + 1]);
            let t = &tab[alpha[ax] as usize];
            let (y, s) = contract(&x, &shape, ax, 1, |_, i| t.get(0, i));
            x = y;
            shape = s;
        }
        out.push(scale * x[0]);
    }
    Ok(out)
}

/// Trace of D^alpha of one field onto a local face, sampled at the face
/// tensor grid of `basis`.
pub fn trace(
    field: &StokesField,
    e: &Element,
    fieldno: usize,
    face: usize,
    alpha: &[u8; 3],
    basis: &Basis1D,
) -> Result<Vec<f64>, SpectralError> {
    let dim = field.layout.dim;
    if face >= 2 * dim {
        return Err(SpectralError::InvalidFace(face));
    }
    for a in 0..dim {
        if alpha[a] as usize > MAX_DERIV {
            return Err(SpectralError::DerivativeOrder(alpha[a] as usize));
        }
    }
    Ok(eval_face(
        field.coeffs(e.id, fieldno),
        e,
        dim,
        face,
        alpha,
        basis,
    ))
}

/// Discrete L2 projection of a function onto the degree-W tensor basis of
/// one element, using an `n_quad`-point Gauss grid per axis. Exact for
/// polynomials of per-axis degree <= W when n_quad >= W + 1.
pub fn interpolate<F: Fn(&[f64; 3]) -> f64>(
    f: F,
    e: &Element,
    dim: usize,
    degree: usize,
    n_quad: usize,
) -> Result<Vec<f64>, SpectralError> {
    let rule = gauss_rule(n_quad)?;
    let tab = legendre_table(degree, &rule.nodes);
    // Sample f at the tensor grid (physical points).
    let nq = rule.len();
    let total = nq.pow(dim as u32);
    let mut values = vec![0.0; total];
    let mut idx = [0usize; 3];
    for (flat, v) in values.iter_mut().enumerate() {
        let mut rem = flat;
        for a in 0..dim {
            idx[a] = rem % nq;
            rem /= nq;
        }
        let mut x = [0.0; 3];
        for a in 0..dim {
            x[a] = e.center(a) + e.half_width(a) * rule.nodes[idx[a]];
        }
        *v = f(&x);
    }
    // Project axis by axis: c_m = sum_q w_q phi_m(x_q) f_q.
    let mut x = values;
    let mut shape = vec![nq; dim];
    for ax in 0..dim {
        let (y, s) = contract(&x, &shape, ax, degree + 1, |m, q| {
            rule.weights[q] * tab[0].get(q, m)
        });
        x = y;
        shape = s;
    }
    Ok(x)
}
