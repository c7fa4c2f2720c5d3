//! Constant-coefficient trace/differential operators on (u, p): the Stokes
//! residual operators L(u,p) = -Δu + ∇p and D u = -∇·u, normal/tangential
//! velocity and stress splits, curls, and the slip combinations used by the
//! boundary-condition catalog.
//!
//! Every operator is a list of residual components; each component is a
//! linear combination of derivative samples of the unknown fields with
//! constant coefficients (normals of axis-aligned faces are constant, so
//! this covers the whole catalog). In 2D, ∇×u is the scalar
//! ∂u2/∂x1 - ∂u1/∂x2 and the cross-product conditions reduce to it.

use crate::geometry::FaceFrame;

/// Which element of an interface a part evaluates on; boundary and volume
/// operators only use side A.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// coeff * D^deriv(field), with field 0..dim-1 the velocity components and
/// field == dim the pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPart {
    pub side: Side,
    pub field: usize,
    pub deriv: [u8; 3],
    pub coeff: f64,
}

pub type PartList = Vec<OperatorPart>;

pub fn part(field: usize, deriv: [u8; 3], coeff: f64) -> OperatorPart {
    OperatorPart {
        side: Side::A,
        field,
        deriv,
        coeff,
    }
}

fn unit(axis: usize) -> [u8; 3] {
    let mut d = [0u8; 3];
    d[axis] = 1;
    d
}

/// Merge duplicate (side, field, deriv) entries and drop zero coefficients.
pub fn simplify(parts: PartList) -> PartList {
    let mut out: PartList = Vec::new();
    for p in parts {
        if p.coeff == 0.0 {
            continue;
        }
        if let Some(q) = out
            .iter_mut()
            .find(|q| q.side == p.side && q.field == p.field && q.deriv == p.deriv)
        {
            q.coeff += p.coeff;
        } else {
            out.push(p);
        }
    }
    out.retain(|p| p.coeff != 0.0);
    out
}

pub fn scale(parts: &PartList, c: f64) -> PartList {
    parts
        .iter()
        .map(|p| OperatorPart {
            coeff: c * p.coeff,
            ..p.clone()
        })
        .collect()
}

pub fn add(a: PartList, b: PartList) -> PartList {
    let mut out = a;
    out.extend(b);
    simplify(out)
}

/// Momentum residual L(u,p) = -Δu + ∇p, one component per velocity index.
pub fn momentum(dim: usize) -> Vec<PartList> {
    (0..dim)
        .map(|i| {
            let mut parts = Vec::new();
            for a in 0..dim {
                let mut d = [0u8; 3];
                d[a] = 2;
                parts.push(part(i, d, -1.0));
            }
            parts.push(part(dim, unit(i), 1.0));
            parts
        })
        .collect()
}

/// Continuity residual D u = -∇·u.
pub fn divergence(dim: usize) -> Vec<PartList> {
    vec![(0..dim).map(|a| part(a, unit(a), -1.0)).collect()]
}

/// The velocity vector itself (Dirichlet traces).
pub fn velocity(dim: usize) -> Vec<PartList> {
    (0..dim).map(|i| vec![part(i, [0; 3], 1.0)]).collect()
}

pub fn pressure(dim: usize) -> Vec<PartList> {
    vec![vec![part(dim, [0; 3], 1.0)]]
}

/// u · n.
pub fn normal_velocity(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    vec![simplify(
        (0..dim).map(|i| part(i, [0; 3], frame.normal[i])).collect(),
    )]
}

/// Tangential components u · t_j, one per tangent axis.
pub fn tangential_velocity(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    (0..frame.n_tangents)
        .map(|j| {
            simplify(
                (0..dim)
                    .map(|i| part(i, [0; 3], frame.tangents[j][i]))
                    .collect(),
            )
        })
        .collect()
}

/// u × n: scalar u1 n2 - u2 n1 in 2D, the full vector in 3D.
pub fn cross_velocity(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    cross_with_n(&velocity(dim), dim, frame)
}

/// v × n applied symbolically to a 3-component (or 2D scalar-producing)
/// operator list.
pub fn cross_with_n(v: &[PartList], dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    let n = frame.normal;
    if dim == 2 {
        vec![simplify(add(scale(&v[0], n[1]), scale(&v[1], -n[0])))]
    } else {
        (0..3)
            .map(|i| {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                simplify(add(scale(&v[j], n[k]), scale(&v[k], -n[j])))
            })
            .collect()
    }
}

/// Rows of the strain traction e(u) n with e_ij = ∂u_i/∂x_j + ∂u_j/∂x_i
/// (no 1/2, matching σ = (-p δ_ij + e_ij u) n).
fn strain_traction(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    let n = frame.normal;
    (0..dim)
        .map(|i| {
            let mut parts = Vec::new();
            for j in 0..dim {
                parts.push(part(i, unit(j), n[j]));
                parts.push(part(j, unit(i), n[j]));
            }
            simplify(parts)
        })
        .collect()
}

/// Stress vector σ(u,p) = (-p I + e(u)) n, one component per space index.
pub fn stress_vector(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    let n = frame.normal;
    strain_traction(dim, frame)
        .into_iter()
        .enumerate()
        .map(|(i, parts)| simplify(add(parts, vec![part(dim, [0; 3], -n[i])])))
        .collect()
}

/// σ_n = σ · n = -p + nᵀ e(u) n.
pub fn sigma_n(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    let n = frame.normal;
    let sigma = stress_vector(dim, frame);
    let mut parts = Vec::new();
    for (i, s) in sigma.iter().enumerate() {
        parts.extend(scale(s, n[i]));
    }
    vec![simplify(parts)]
}

/// Tangential stress components t_jᵀ e(u) n (the -p n term projects to 0).
pub fn sigma_tau(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    let tr = strain_traction(dim, frame);
    (0..frame.n_tangents)
        .map(|j| {
            let mut parts = Vec::new();
            for (i, s) in tr.iter().enumerate() {
                parts.extend(scale(s, frame.tangents[j][i]));
            }
            simplify(parts)
        })
        .collect()
}

/// Tangential components of (∇u) n - p n + b u (the B2 slip operator; the
/// -p n term has zero tangential projection and drops out).
pub fn grad_slip_tangential(dim: usize, frame: &FaceFrame, b: f64) -> Vec<PartList> {
    let n = frame.normal;
    (0..frame.n_tangents)
        .map(|j| {
            let t = frame.tangents[j];
            let mut parts = Vec::new();
            for i in 0..dim {
                for k in 0..dim {
                    parts.push(part(i, unit(k), t[i] * n[k]));
                }
                parts.push(part(i, [0; 3], b * t[i]));
            }
            simplify(parts)
        })
        .collect()
}

/// Tangential components of e(u) n + c u (B3 with c = b, B7/B18 traction
/// with c = 0 / α, B16 with the roles of ν swapped onto the velocity term).
pub fn strain_slip_tangential(dim: usize, frame: &FaceFrame, c: f64) -> Vec<PartList> {
    let tr = strain_traction(dim, frame);
    (0..frame.n_tangents)
        .map(|j| {
            let t = frame.tangents[j];
            let mut parts = Vec::new();
            for (i, s) in tr.iter().enumerate() {
                parts.extend(scale(s, t[i]));
            }
            for i in 0..dim {
                parts.push(part(i, [0; 3], c * t[i]));
            }
            simplify(parts)
        })
        .collect()
}

/// ∇×u: the scalar ∂u2/∂x1 - ∂u1/∂x2 in 2D, the full vector in 3D.
pub fn curl(dim: usize) -> Vec<PartList> {
    if dim == 2 {
        vec![vec![part(1, unit(0), 1.0), part(0, unit(1), -1.0)]]
    } else {
        (0..3)
            .map(|i| {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                vec![part(k, unit(j), 1.0), part(j, unit(k), -1.0)]
            })
            .collect()
    }
}

/// (∇×u) × n: the scalar curl in 2D (its tangential scalar form), the full
/// cross product in 3D.
pub fn curl_cross_n(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    if dim == 2 {
        curl(2)
    } else {
        cross_with_n(&curl(3), 3, frame)
    }
}

/// Tangential curl components: the scalar curl in 2D, (∇×u)·t_j in 3D.
/// Also serves n×((∇×u)×n), which equals the tangential part of the curl.
pub fn curl_tangential(dim: usize, frame: &FaceFrame) -> Vec<PartList> {
    if dim == 2 {
        curl(2)
    } else {
        let c = curl(3);
        (0..frame.n_tangents)
            .map(|j| {
                let t = frame.tangents[j];
                let mut parts = Vec::new();
                for (i, ci) in c.iter().enumerate() {
                    parts.extend(scale(ci, t[i]));
                }
                simplify(parts)
            })
            .collect()
    }
}

/// ((ν ∇u - p I) n) · n = ν nᵀ(∇u)n - p (the B10 normal stress).
pub fn normal_stress_grad(dim: usize, frame: &FaceFrame, nu: f64) -> Vec<PartList> {
    let n = frame.normal;
    let mut parts = vec![part(dim, [0; 3], -1.0)];
    for i in 0..dim {
        for k in 0..dim {
            parts.push(part(i, unit(k), nu * n[i] * n[k]));
        }
    }
    vec![simplify(parts)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_decomposition, DomainSpec};

    fn bottom_frame() -> FaceFrame {
        let spec = DomainSpec::single_block(2, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
        let d = build_decomposition(&spec).unwrap();
        d.face_frame(0, 2).unwrap()
    }

    #[test]
    fn momentum_shape() {
        let m = momentum(2);
        assert_eq!(m.len(), 2);
        // -d2/dx1^2 u1 - d2/dx2^2 u1 + d/dx1 p
        assert_eq!(m[0].len(), 3);
        assert!(m[0]
            .iter()
            .any(|p| p.field == 2 && p.deriv == [1, 0, 0] && p.coeff == 1.0));
    }

    #[test]
    fn sigma_tau_has_no_pressure() {
        let f = bottom_frame();
        for comps in [
            sigma_tau(2, &f),
            strain_slip_tangential(2, &f, 1.0),
            grad_slip_tangential(2, &f, 0.5),
        ] {
            for comp in comps {
                assert!(
                    comp.iter().all(|p| p.field != 2),
                    "pressure leaked into a tangential operator"
                );
            }
        }
    }

    #[test]
    fn sigma_n_on_bottom_face() {
        // n = (0,-1): sigma_n = -p + 2 du2/dx2.
        let f = bottom_frame();
        let s = sigma_n(2, &f);
        assert_eq!(s.len(), 1);
        let mut found_p = false;
        let mut found_u2 = false;
        for p in &s[0] {
            if p.field == 2 && p.deriv == [0, 0, 0] {
                assert_eq!(p.coeff, -1.0);
                found_p = true;
            }
            if p.field == 1 && p.deriv == [0, 1, 0] {
                assert_eq!(p.coeff, 2.0);
                found_u2 = true;
            }
        }
        assert!(found_p && found_u2);
        assert_eq!(s[0].len(), 2);
    }

    #[test]
    fn curl_2d_is_scalar() {
        let c = curl(2);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 2);
    }

    #[test]
    fn cross_velocity_2d_bottom() {
        // u x n at n = (0,-1): u1*n2 - u2*n1 = -u1.
        let f = bottom_frame();
        let c = cross_velocity(2, &f);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 1);
        assert_eq!(c[0][0].field, 0);
        assert_eq!(c[0][0].coeff, -1.0);
    }
}
