//! Discrete squared norms used by the least-squares functional: element
//! L2/H1/H2 norms and face L2, H^{1/2}, H^{3/2} norms, the latter two with
//! the Sobolev-Slobodeckij double-integral seminorm at mu = 1/2.
//!
//! For mu = 1/2 the kernel integrand is rewritten as a squared divided
//! difference (u(xi) - u(xi'))^2 / (xi - xi')^2, a polynomial for polynomial
//! traces, so tensor Gauss quadrature is exact; the pair diagonal uses the
//! tangential derivative. Face L2/H1 parts carry the physical face Jacobian;
//! the 1D divided-difference seminorm is scale invariant, and on 3D faces
//! only the transverse direction carries its Jacobian.

use crate::spectral::{Mat, QuadratureRule};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NormError {
    #[error("fractional norms are implemented for mu = 1/2 only, got {0}")]
    UnsupportedMu(f64),
    #[error("norm {0:?} is not an element norm")]
    NotElemNorm(NormOrder),
    #[error("norm {0:?} is not a face norm")]
    NotFaceNorm(NormOrder),
    #[error("expected {expected} derivative levels, got {got}")]
    MissingLevels { expected: usize, got: usize },
    #[error("level {level} has {got} samples, expected {expected}")]
    LevelLength {
        level: usize,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormOrder {
    L2Elem,
    H1Elem,
    H2Elem,
    L2Face,
    HHalfFace,
    HThreeHalfFace,
}

impl NormOrder {
    pub fn is_face(self) -> bool {
        matches!(
            self,
            NormOrder::L2Face | NormOrder::HHalfFace | NormOrder::HThreeHalfFace
        )
    }
}

/// Physical derivative multi-indices entering an element norm, value first.
pub fn elem_levels(order: NormOrder, dim: usize) -> Vec<[u8; 3]> {
    let mut levels = vec![[0u8, 0, 0]];
    let add_first = |levels: &mut Vec<[u8; 3]>| {
        for a in 0..dim {
            let mut d = [0u8; 3];
            d[a] = 1;
            levels.push(d);
        }
    };
    match order {
        NormOrder::L2Elem => {}
        NormOrder::H1Elem => add_first(&mut levels),
        NormOrder::H2Elem => {
            add_first(&mut levels);
            for a in 0..dim {
                for b in a..dim {
                    let mut d = [0u8; 3];
                    d[a] += 1;
                    d[b] += 1;
                    levels.push(d);
                }
            }
        }
        _ => unreachable!("face norm passed to elem_levels"),
    }
    levels
}

/// Tangential derivative multi-indices entering a face norm, value first.
pub fn face_levels(order: NormOrder, n_tangents: usize) -> Vec<[u8; 2]> {
    match (order, n_tangents) {
        (NormOrder::L2Face, _) => vec![[0, 0]],
        (NormOrder::HHalfFace, 1) => vec![[0, 0], [1, 0]],
        (NormOrder::HHalfFace, 2) => vec![[0, 0], [1, 0], [0, 1]],
        (NormOrder::HThreeHalfFace, 1) => vec![[0, 0], [1, 0], [2, 0]],
        (NormOrder::HThreeHalfFace, 2) => {
            vec![[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
        }
        _ => unreachable!("element norm passed to face_levels"),
    }
}

/// Paired-node quadrature data for the mu = 1/2 kernel on one 1D rule:
/// `kernel` is the PSD matrix with v^T K v = sum_{i != j} w_i w_j
/// ((v_i - v_j)/(xi_i - xi_j))^2 and `w_sq` the diagonal weights w_i^2
/// multiplying the squared reference derivative.
#[derive(Debug, Clone)]
pub struct FaceKernelTable {
    pub mu: f64,
    pub n: usize,
    pub kernel: Mat,
    pub w_sq: Vec<f64>,
}

impl FaceKernelTable {
    pub fn new(rule: &QuadratureRule, mu: f64) -> Result<Self, NormError> {
        if mu != 0.5 {
            return Err(NormError::UnsupportedMu(mu));
        }
        let n = rule.len();
        let mut kernel = Mat::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = rule.nodes[i] - rule.nodes[j];
                let k = 2.0 * rule.weights[i] * rule.weights[j] / (d * d);
                kernel.set(i, j, -k);
                diag += k;
            }
            kernel.set(i, i, diag);
        }
        let w_sq = rule.weights.iter().map(|w| w * w).collect();
        Ok(Self {
            mu,
            n,
            kernel,
            w_sq,
        })
    }
}

/// Geometry and quadrature context for element norms.
#[derive(Debug, Clone)]
pub struct ElemNormCtx {
    pub dim: usize,
    pub vol_jac: f64,
    /// Tensor quadrature weights (axis 0 fastest), without the Jacobian.
    pub w_tensor: Vec<f64>,
}

impl ElemNormCtx {
    pub fn new(dim: usize, rule: &QuadratureRule, vol_jac: f64) -> Self {
        let n = rule.len();
        let total = n.pow(dim as u32);
        let mut w = vec![1.0; total];
        for (flat, wv) in w.iter_mut().enumerate() {
            let mut rem = flat;
            for _ in 0..dim {
                *wv *= rule.weights[rem % n];
                rem /= n;
            }
        }
        Self {
            dim,
            vol_jac,
            w_tensor: w,
        }
    }
}

/// Geometry and quadrature context for face norms.
#[derive(Debug, Clone)]
pub struct FaceNormCtx<'k> {
    pub n_tangents: usize,
    pub face_jac: f64,
    /// Element half-widths along the face tangent axes.
    pub half_widths: [f64; 2],
    pub w1: Vec<f64>,
    pub kernel: &'k FaceKernelTable,
}

impl<'k> FaceNormCtx<'k> {
    pub fn new(
        n_tangents: usize,
        face_jac: f64,
        half_widths: [f64; 2],
        rule: &QuadratureRule,
        kernel: &'k FaceKernelTable,
    ) -> Self {
        Self {
            n_tangents,
            face_jac,
            half_widths,
            w1: rule.weights.clone(),
            kernel,
        }
    }

    fn nodes_per_level(&self) -> usize {
        self.kernel.n.pow(self.n_tangents as u32)
    }

    fn w_face(&self, flat: usize) -> f64 {
        let n = self.kernel.n;
        if self.n_tangents == 1 {
            self.w1[flat]
        } else {
            self.w1[flat % n] * self.w1[flat / n]
        }
    }
}

fn check_levels(expected: usize, data: &[Vec<f64>], per_level: usize) -> Result<(), NormError> {
    if data.len() != expected {
        return Err(NormError::MissingLevels {
            expected,
            got: data.len(),
        });
    }
    for (level, d) in data.iter().enumerate() {
        if d.len() != per_level {
            return Err(NormError::LevelLength {
                level,
                got: d.len(),
                expected: per_level,
            });
        }
    }
    Ok(())
}

/// out_delta = G_delta data_delta for an element norm (all levels share the
/// diagonal quadrature weight).
pub fn elem_apply_weight(
    order: NormOrder,
    ctx: &ElemNormCtx,
    data: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, NormError> {
    if order.is_face() {
        return Err(NormError::NotElemNorm(order));
    }
    let levels = elem_levels(order, ctx.dim).len();
    check_levels(levels, data, ctx.w_tensor.len())?;
    let out = data
        .iter()
        .map(|d| {
            d.iter()
                .zip(&ctx.w_tensor)
                .map(|(v, w)| v * w * ctx.vol_jac)
                .collect()
        })
        .collect();
    Ok(out)
}

/// Accumulate the mu = 1/2 kernel weight along one tangential axis of a face
/// grid: `v` holds the function values, `g` its physical derivative along
/// that axis. Writes K v into `out_v` and the diagonal derivative weight
/// into `out_g`.
fn half_kernel_apply(
    ctx: &FaceNormCtx,
    axis: usize,
    v: &[f64],
    g: &[f64],
    out_v: &mut [f64],
    out_g: &mut [f64],
) {
    let n = ctx.kernel.n;
    let k = &ctx.kernel;
    let h_half = ctx.half_widths[axis];
    let dscale = h_half * h_half;
    if ctx.n_tangents == 1 {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += k.kernel.get(i, j) * v[j];
            }
            out_v[i] += acc;
            out_g[i] += k.w_sq[i] * dscale * g[i];
        }
        return;
    }
    // Two tangents: axis 0 is the fast index of the n x n grid.
    let t_other = 1 - axis;
    let t_jac = ctx.half_widths[t_other];
    for m in 0..n {
        let tw = ctx.w1[m] * t_jac;
        for i in 0..n {
            let (idx, stride) = if axis == 0 {
                (i + n * m, 1)
            } else {
                (m + n * i, n)
            };
            let base = if axis == 0 { n * m } else { m };
            let mut acc = 0.0;
            for j in 0..n {
                acc += k.kernel.get(i, j) * v[base + stride * j];
            }
            out_v[idx] += tw * acc;
            out_g[idx] += tw * k.w_sq[i] * dscale * g[idx];
        }
    }
}

/// out_delta = G_delta data_delta for a face norm.
pub fn face_apply_weight(
    order: NormOrder,
    ctx: &FaceNormCtx,
    data: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, NormError> {
    if !order.is_face() {
        return Err(NormError::NotFaceNorm(order));
    }
    let levels = face_levels(order, ctx.n_tangents);
    let per_level = ctx.nodes_per_level();
    check_levels(levels.len(), data, per_level)?;
    let mut out = vec![vec![0.0; per_level]; data.len()];

    // L2 part of the value level; H1 face part adds the first tangential
    // derivatives for the 3/2 norm.
    let l2_levels: usize = match order {
        NormOrder::L2Face | NormOrder::HHalfFace => 1,
        NormOrder::HThreeHalfFace => 1 + ctx.n_tangents,
        _ => unreachable!(),
    };
    for lv in 0..l2_levels {
        for i in 0..per_level {
            out[lv][i] += ctx.face_jac * ctx.w_face(i) * data[lv][i];
        }
    }

    match (order, ctx.n_tangents) {
        (NormOrder::L2Face, _) => {}
        (NormOrder::HHalfFace, 1) => {
            let (v_out, g_out) = split_two(&mut out, 0, 1);
            half_kernel_apply(ctx, 0, &data[0], &data[1], v_out, g_out);
        }
        (NormOrder::HHalfFace, 2) => {
            {
                let (v_out, g_out) = split_two(&mut out, 0, 1);
                half_kernel_apply(ctx, 0, &data[0], &data[1], v_out, g_out);
            }
            {
                let (v_out, g_out) = split_two(&mut out, 0, 2);
                half_kernel_apply(ctx, 1, &data[0], &data[2], v_out, g_out);
            }
        }
        (NormOrder::HThreeHalfFace, 1) => {
            let (v_out, g_out) = split_two(&mut out, 1, 2);
            half_kernel_apply(ctx, 0, &data[1], &data[2], v_out, g_out);
        }
        (NormOrder::HThreeHalfFace, 2) => {
            // Seminorms of both tangential derivatives, each with both
            // kernel directions; levels: 1 = d/ds0, 2 = d/ds1, 3 = d2/ds0^2,
            // 4 = d2/ds0 ds1, 5 = d2/ds1^2.
            {
                let (v_out, g_out) = split_two(&mut out, 1, 3);
                half_kernel_apply(ctx, 0, &data[1], &data[3], v_out, g_out);
            }
            {
                let (v_out, g_out) = split_two(&mut out, 1, 4);
                half_kernel_apply(ctx, 1, &data[1], &data[4], v_out, g_out);
            }
            {
                let (v_out, g_out) = split_two(&mut out, 2, 4);
                half_kernel_apply(ctx, 0, &data[2], &data[4], v_out, g_out);
            }
            {
                let (v_out, g_out) = split_two(&mut out, 2, 5);
                half_kernel_apply(ctx, 1, &data[2], &data[5], v_out, g_out);
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

fn split_two(out: &mut [Vec<f64>], a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    assert!(a != b);
    if a < b {
        let (lo, hi) = out.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = out.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

fn dot_levels(data: &[Vec<f64>], weighted: &[Vec<f64>]) -> f64 {
    data.iter()
        .zip(weighted)
        .map(|(d, g)| d.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Quadrature approximation of sum_{|alpha| <= m} ||D^alpha u||^2 over one
/// element; `data` holds the levels from [`elem_levels`].
pub fn elem_norm_sq(
    order: NormOrder,
    ctx: &ElemNormCtx,
    data: &[Vec<f64>],
) -> Result<f64, NormError> {
    let g = elem_apply_weight(order, ctx, data)?;
    Ok(dot_levels(data, &g))
}

/// Face L2 norm squared with the face Jacobian.
pub fn face_l2_sq(values: &[f64], ctx: &FaceNormCtx) -> Result<f64, NormError> {
    let data = [values.to_vec()];
    face_norm_sq(NormOrder::L2Face, ctx, &data)
}

/// ||u||^2_{1/2}: face L2 plus the divided-difference seminorm. `data` holds
/// [values, d/ds_0 (, d/ds_1)].
pub fn face_fractional_half_sq(ctx: &FaceNormCtx, data: &[Vec<f64>]) -> Result<f64, NormError> {
    face_norm_sq(NormOrder::HHalfFace, ctx, data)
}

/// ||u||^2_{3/2} = ||u||^2_{1,face} + sum_t |du/ds_t|^2_{1/2, seminorm}.
/// `data` holds the levels from [`face_levels`].
pub fn face_fractional_threehalf_sq(
    ctx: &FaceNormCtx,
    data: &[Vec<f64>],
) -> Result<f64, NormError> {
    face_norm_sq(NormOrder::HThreeHalfFace, ctx, data)
}

pub fn face_norm_sq(
    order: NormOrder,
    ctx: &FaceNormCtx,
    data: &[Vec<f64>],
) -> Result<f64, NormError> {
    let g = face_apply_weight(order, ctx, data)?;
    Ok(dot_levels(data, &g))
}
