//! Evaluation of residual terms on coefficient vectors: forward application
//! (operator values at quadrature points), the adjoint (for the matrix-free
//! normal equations), norm weighting, and the functional value.

use crate::catalog::{Penalty, ResidualTerm, Target, TermLocus};
use crate::geometry::{Decomposition, Element, FaceFrame, Orientation};
use crate::norms::{
    elem_apply_weight, elem_levels, face_apply_weight, face_levels, ElemNormCtx, FaceKernelTable,
    FaceNormCtx,
};
use crate::operators::{PartList, Side};
use crate::spectral::{
    eval_face, eval_face_adjoint, eval_volume, eval_volume_adjoint, Basis1D, FieldLayout,
};

/// Shared tables for evaluating terms at one quadrature resolution.
pub struct EvalCtx<'a> {
    pub decomp: &'a Decomposition,
    pub layout: FieldLayout,
    pub basis: &'a Basis1D,
    pub kernel: &'a FaceKernelTable,
}

/// Derivative level of a norm: physical multi-index on elements, tangential
/// multi-index on faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelDelta {
    Volume([u8; 3]),
    Face([u8; 2]),
}

impl<'a> EvalCtx<'a> {
    pub fn elem(&self, id: usize) -> &Element {
        &self.decomp.elements[id]
    }

    /// (element, face) a part of this locus evaluates on.
    fn side_location(&self, locus: &TermLocus, side: Side) -> (usize, Option<usize>) {
        match locus {
            TermLocus::Element(e) => (*e, None),
            TermLocus::Boundary(s) => {
                let seg = &self.decomp.boundary[*s];
                (seg.element, Some(seg.face))
            }
            TermLocus::Interface(i) => {
                let iface = &self.decomp.interfaces[*i];
                match side {
                    Side::A => (iface.element_a, Some(iface.face_a)),
                    Side::B => (iface.element_b, Some(iface.face_b)),
                }
            }
        }
    }

    /// The canonical face frame of a face locus (side A's for interfaces).
    pub fn locus_frame(&self, locus: &TermLocus) -> Option<FaceFrame> {
        let (e, face) = self.side_location(locus, Side::A);
        face.map(|f| self.decomp.face_frame(e, f).expect("valid face"))
    }

    pub fn nodes_per_level(&self, locus: &TermLocus) -> usize {
        let nq = self.basis.n_nodes();
        match locus {
            TermLocus::Element(_) => nq.pow(self.decomp.dim as u32),
            _ => nq.pow((self.decomp.dim - 1) as u32),
        }
    }

    fn level_phys(&self, level: &LevelDelta, frame: Option<&FaceFrame>) -> [u8; 3] {
        match level {
            LevelDelta::Volume(d) => *d,
            LevelDelta::Face(dt) => {
                let frame = frame.expect("face level on a face locus");
                let mut d = [0u8; 3];
                for (t, &count) in dt.iter().enumerate().take(frame.n_tangents) {
                    d[frame.tangent_axes[t]] = count;
                }
                d
            }
        }
    }

    /// Values of the linear part of one component at the locus quadrature
    /// grid, differentiated by the extra level `delta`.
    pub fn component_values(
        &self,
        locus: &TermLocus,
        parts: &PartList,
        level: &LevelDelta,
        x: &[f64],
    ) -> Vec<f64> {
        let frame = self.locus_frame(locus);
        let delta = self.level_phys(level, frame.as_ref());
        let mut acc = vec![0.0; self.nodes_per_level(locus)];
        for part in parts {
            let (eid, face) = self.side_location(locus, part.side);
            let e = self.elem(eid);
            let coeffs = &x[self.layout.range(eid, part.field)];
            let alpha = add_deriv(&part.deriv, &delta);
            let vals = match face {
                None => eval_volume(coeffs, e, self.decomp.dim, &alpha, self.basis),
                Some(f) => {
                    let mut v = eval_face(coeffs, e, self.decomp.dim, f, &alpha, self.basis);
                    if part.side == Side::B {
                        if let TermLocus::Interface(i) = locus {
                            let o = &self.decomp.interfaces[*i].orientation;
                            if !o.is_identity() {
                                let dt = match level {
                                    LevelDelta::Face(dt) => *dt,
                                    _ => [0, 0],
                                };
                                v = orient_face_values(
                                    &v,
                                    self.basis.n_nodes(),
                                    self.decomp.dim - 1,
                                    o,
                                    &dt,
                                    false,
                                );
                            }
                        }
                    }
                    v
                }
            };
            for (a, v) in acc.iter_mut().zip(vals.iter()) {
                *a += part.coeff * v;
            }
        }
        acc
    }

    /// Adjoint of [`Self::component_values`]: accumulate the coefficient
    /// image of a node cotangent into `out`.
    pub fn component_adjoint(
        &self,
        locus: &TermLocus,
        parts: &PartList,
        level: &LevelDelta,
        cot: &[f64],
        out: &mut [f64],
    ) {
        let frame = self.locus_frame(locus);
        let delta = self.level_phys(level, frame.as_ref());
        for part in parts {
            let (eid, face) = self.side_location(locus, part.side);
            let e = self.elem(eid);
            let alpha = add_deriv(&part.deriv, &delta);
            let range = self.layout.range(eid, part.field);
            match face {
                None => eval_volume_adjoint(
                    cot,
                    e,
                    self.decomp.dim,
                    &alpha,
                    self.basis,
                    part.coeff,
                    &mut out[range],
                ),
                Some(f) => {
                    let mut c = cot.to_vec();
                    if part.side == Side::B {
                        if let TermLocus::Interface(i) = locus {
                            let o = &self.decomp.interfaces[*i].orientation;
                            if !o.is_identity() {
                                let dt = match level {
                                    LevelDelta::Face(dt) => *dt,
                                    _ => [0, 0],
                                };
                                c = orient_face_values(
                                    &c,
                                    self.basis.n_nodes(),
                                    self.decomp.dim - 1,
                                    o,
                                    &dt,
                                    true,
                                );
                            }
                        }
                    }
                    eval_face_adjoint(
                        &c,
                        e,
                        self.decomp.dim,
                        f,
                        &alpha,
                        self.basis,
                        part.coeff,
                        &mut out[range],
                    );
                }
            }
        }
    }

    /// Derivative levels a term's norm requires.
    pub fn term_levels(&self, term: &ResidualTerm) -> Vec<LevelDelta> {
        match term.locus {
            TermLocus::Element(_) => elem_levels(term.norm, self.decomp.dim)
                .into_iter()
                .map(LevelDelta::Volume)
                .collect(),
            _ => face_levels(term.norm, self.decomp.dim - 1)
                .into_iter()
                .map(LevelDelta::Face)
                .collect(),
        }
    }

    /// Physical quadrature points of a term's locus.
    pub fn term_points(&self, term: &ResidualTerm) -> Vec<[f64; 3]> {
        let dim = self.decomp.dim;
        let nodes = &self.basis.rule.nodes;
        let nq = nodes.len();
        match term.locus {
            TermLocus::Element(e) => {
                let elem = self.elem(e);
                let total = nq.pow(dim as u32);
                (0..total)
                    .map(|flat| {
                        let mut rem = flat;
                        let mut xi = [0.0; 3];
                        for a in 0..dim {
                            xi[a] = nodes[rem % nq];
                            rem /= nq;
                        }
                        elem.to_physical(dim, &xi)
                    })
                    .collect()
            }
            _ => {
                let (eid, face) = self.side_location(&term.locus, Side::A);
                let face = face.expect("face locus");
                let elem = self.elem(eid);
                let frame = self.decomp.face_frame(eid, face).expect("valid face");
                let total = nq.pow((dim - 1) as u32);
                (0..total)
                    .map(|flat| {
                        let mut rem = flat;
                        let mut x = [0.0; 3];
                        let axis = crate::geometry::face_axis(face);
                        x[axis] = frame.plane;
                        for t in 0..frame.n_tangents {
                            let a = frame.tangent_axes[t];
                            x[a] = elem.center(a) + elem.half_width(a) * nodes[rem % nq];
                            rem /= nq;
                        }
                        x
                    })
                    .collect()
            }
        }
    }

    /// Evaluate a component's target at the locus points for one level.
    pub fn target_values(
        &self,
        term: &ResidualTerm,
        target: &Target,
        level: &LevelDelta,
        points: &[[f64; 3]],
    ) -> Vec<f64> {
        if matches!(target, Target::Zero) {
            return vec![0.0; points.len()];
        }
        let frame = self.locus_frame(&term.locus);
        let delta = self.level_phys(level, frame.as_ref());
        points
            .iter()
            .map(|x| target.eval_deriv(&delta, x))
            .collect()
    }

    /// Norm-weight application for one term: out_level = G_level data_level.
    pub fn apply_norm_weight(&self, term: &ResidualTerm, data: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match term.locus {
            TermLocus::Element(e) => {
                let elem = self.elem(e);
                let ctx = ElemNormCtx::new(
                    self.decomp.dim,
                    &self.basis.rule,
                    elem.volume_jacobian(self.decomp.dim),
                );
                elem_apply_weight(term.norm, &ctx, data).expect("level data matches norm")
            }
            _ => {
                let frame = self.locus_frame(&term.locus).expect("face locus");
                let ctx = FaceNormCtx::new(
                    frame.n_tangents,
                    frame.jacobian,
                    frame.tangent_half_widths,
                    &self.basis.rule,
                    self.kernel,
                );
                face_apply_weight(term.norm, &ctx, data).expect("level data matches norm")
            }
        }
    }

    /// The linear moment m(x) of a penalty: the integral of one field over
    /// Omega (the penalty's target is not subtracted here, so this is
    /// linear in x and usable inside the matvec).
    pub fn penalty_moment(&self, penalty: &Penalty, x: &[f64]) -> f64 {
        let field = match penalty {
            Penalty::PressureMean { .. } => self.decomp.dim,
            Penalty::VelocityMean { component, .. } => *component,
        };
        let dim = self.decomp.dim;
        let w = ElemNormCtx::new(dim, &self.basis.rule, 1.0).w_tensor;
        let mut m = 0.0;
        for e in 0..self.decomp.n_elements() {
            let elem = self.elem(e);
            let vals = eval_volume(
                &x[self.layout.range(e, field)],
                elem,
                dim,
                &[0, 0, 0],
                self.basis,
            );
            let jac = elem.volume_jacobian(dim);
            m += jac * vals.iter().zip(&w).map(|(v, wq)| v * wq).sum::<f64>();
        }
        m
    }

    /// out += scale * gradient of the penalty moment m(x).
    pub fn penalty_adjoint(&self, penalty: &Penalty, scale: f64, out: &mut [f64]) {
        let field = match penalty {
            Penalty::PressureMean { .. } => self.decomp.dim,
            Penalty::VelocityMean { component, .. } => *component,
        };
        let dim = self.decomp.dim;
        let w = ElemNormCtx::new(dim, &self.basis.rule, 1.0).w_tensor;
        for e in 0..self.decomp.n_elements() {
            let elem = self.elem(e);
            let jac = elem.volume_jacobian(dim);
            let range = self.layout.range(e, field);
            eval_volume_adjoint(
                &w,
                elem,
                dim,
                &[0, 0, 0],
                self.basis,
                scale * jac,
                &mut out[range],
            );
        }
    }
}

fn add_deriv(a: &[u8; 3], b: &[u8; 3]) -> [u8; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Linear-part values of every component of a term at every norm level:
/// `[component][level][node]`. Tangential-derivative levels are included
/// whenever the norm needs them (1/2 and 3/2 norms).
pub fn apply_operator(term: &ResidualTerm, x: &[f64], ctx: &EvalCtx) -> Vec<Vec<Vec<f64>>> {
    let levels = ctx.term_levels(term);
    term.components
        .iter()
        .map(|c| {
            levels
                .iter()
                .map(|lv| ctx.component_values(&term.locus, &c.parts, lv, x))
                .collect()
        })
        .collect()
}

/// R^{L,W}(x): sum of the norm-squared residuals plus penalty terms.
pub fn functional_value(
    x: &[f64],
    terms: &[ResidualTerm],
    penalties: &[Penalty],
    ctx: &EvalCtx,
) -> f64 {
    let mut total = 0.0;
    for term in terms {
        let levels = ctx.term_levels(term);
        let points = ctx.term_points(term);
        for comp in &term.components {
            let data: Vec<Vec<f64>> = levels
                .iter()
                .map(|lv| {
                    let mut vals = ctx.component_values(&term.locus, &comp.parts, lv, x);
                    let tgt = ctx.target_values(term, &comp.target, lv, &points);
                    for (v, t) in vals.iter_mut().zip(tgt.iter()) {
                        *v -= t;
                    }
                    vals
                })
                .collect();
            let weighted = ctx.apply_norm_weight(term, &data);
            total += data
                .iter()
                .zip(&weighted)
                .map(|(d, g)| d.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
                .sum::<f64>();
        }
    }
    for p in penalties {
        let target = match p {
            Penalty::PressureMean { target } | Penalty::VelocityMean { target, .. } => *target,
        };
        let m = ctx.penalty_moment(p, x) - target;
        total += m * m;
    }
    total
}

/// Map face-grid samples between the two parameterizations of a shared
/// face. `inverse` applies the transpose (adjoint) map. Gauss grids are
/// symmetric, so an axis flip is the reversal of that index, and odd
/// tangential derivative orders pick up a sign per flipped axis.
pub fn orient_face_values(
    vals: &[f64],
    n: usize,
    n_tangents: usize,
    o: &Orientation,
    delta_t: &[u8; 2],
    inverse: bool,
) -> Vec<f64> {
    let mut out = vec![0.0; vals.len()];
    let mut sign = 1.0;
    for m in 0..n_tangents {
        let k = if o.swap { 1 - m } else { m };
        if o.flip[k] && delta_t[m] % 2 == 1 {
            sign = -sign;
        }
    }
    if n_tangents == 1 {
        for i in 0..n {
            let j = if o.flip[0] { n - 1 - i } else { i };
            if inverse {
                out[j] = sign * vals[i];
            } else {
                out[i] = sign * vals[j];
            }
        }
    } else {
        for i1 in 0..n {
            for i0 in 0..n {
                // Canonical index (i0, i1) maps to source axes (k0, k1).
                let (s0, s1) = if o.swap { (i1, i0) } else { (i0, i1) };
                let j0 = if o.flip[0] { n - 1 - s0 } else { s0 };
                let j1 = if o.flip[1] { n - 1 - s1 } else { s1 };
                let canon = i0 + n * i1;
                let src = j0 + n * j1;
                if inverse {
                    out[src] = sign * vals[canon];
                } else {
                    out[canon] = sign * vals[src];
                }
            }
        }
    }
    out
}
