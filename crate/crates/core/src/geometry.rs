//! Domain decomposition into axis-aligned rectangular/cuboid elements.
//!
//! The mesh is a flat list of elements together with the derived interface
//! graph (faces shared by exactly two elements) and tagged boundary segments
//! (faces on the domain boundary). Elements map affinely onto the reference
//! element Q = (-1,1)^dim, so Jacobians are constant per element.

use thiserror::Error;

/// Coordinates are stored in fixed-size arrays; unused trailing entries are 0.
pub type Point = [f64; 3];

/// Tolerance for point-in-element checks in reference coordinates.
pub const REF_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be 2 or 3, got {0}")]
    InvalidDim(usize),
    #[error("block {0} has a non-positive extent along axis {1}")]
    DegenerateBlock(usize, usize),
    #[error("blocks {0} and {1} overlap")]
    OverlappingBlocks(usize, usize),
    #[error("blocks {0} and {1} share a partial (hanging) face")]
    HangingFace(usize, usize),
    #[error("boundary face {face} of element {element} matches no tag rule")]
    UntaggedBoundaryFace { element: usize, face: usize },
    #[error("point lies outside element {element} (reference excess {excess:.3e})")]
    PointOutsideElement { element: usize, excess: f64 },
    #[error("invalid face index {face} for dimension {dim}")]
    InvalidFace { face: usize, dim: usize },
    #[error("no boundary segment carries tag {0:?}")]
    UnknownTag(String),
}

/// The master element Q = (-1,1)^dim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceElement {
    pub dim: usize,
}

impl ReferenceElement {
    pub fn new(dim: usize) -> Result<Self, GeometryError> {
        if dim == 2 || dim == 3 {
            Ok(Self { dim })
        } else {
            Err(GeometryError::InvalidDim(dim))
        }
    }

    /// Extent of Q along every axis: (-1, 1).
    pub fn extent(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
}

/// One axis-aligned element `[lower, upper]` with its affine reference map.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub lower: Point,
    pub upper: Point,
}

impl Element {
    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        0.5 * self.width(axis)
    }

    pub fn center(&self, axis: usize) -> f64 {
        0.5 * (self.lower[axis] + self.upper[axis])
    }

    /// d(xi_k)/d(x_k) = 2 / h_k for the affine map onto Q.
    pub fn deriv_scale(&self, axis: usize) -> f64 {
        2.0 / self.width(axis)
    }

    pub fn volume(&self, dim: usize) -> f64 {
        (0..dim).map(|a| self.width(a)).product()
    }

    /// Volume Jacobian |det dM^-1| = prod h_k / 2.
    pub fn volume_jacobian(&self, dim: usize) -> f64 {
        (0..dim).map(|a| self.half_width(a)).product()
    }

    /// Physical coordinate of a reference point.
    pub fn to_physical(&self, dim: usize, xi: &Point) -> Point {
        let mut x = [0.0; 3];
        for a in 0..dim {
            x[a] = self.center(a) + self.half_width(a) * xi[a];
        }
        x
    }
}

/// Local face index: `2*axis + upper`, so faces 0,1 are the xi_0 = -1,+1
/// faces, faces 2,3 the xi_1 faces, and so on.
pub fn face_axis(face: usize) -> usize {
    face / 2
}

pub fn face_is_upper(face: usize) -> bool {
    face % 2 == 1
}

pub fn n_faces(dim: usize) -> usize {
    2 * dim
}

/// Alignment of the two parameterizations of a shared face. The builder
/// always produces the identity (conforming axis-aligned faces share their
/// tangential intervals exactly), but trace comparisons go through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orientation {
    /// Swap the two tangential axes (3D faces only).
    pub swap: bool,
    /// Flip the direction of each tangential axis.
    pub flip: [bool; 2],
}

impl Orientation {
    pub fn identity() -> Self {
        Self {
            swap: false,
            flip: [false, false],
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.swap && !self.flip[0] && !self.flip[1]
    }
}

/// A face shared by two elements. `face_a` is the upper face of `element_a`
/// along the shared axis and `face_b` the lower face of `element_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub element_a: usize,
    pub face_a: usize,
    pub element_b: usize,
    pub face_b: usize,
    pub orientation: Orientation,
}

/// A boundary face with its piece label and outward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySegment {
    pub element: usize,
    pub face: usize,
    pub tag: String,
    pub outward_normal: Point,
}

/// Orthonormal trace frame of a face plus the measure ratio to the
/// reference face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFrame {
    pub normal: Point,
    pub tangents: [Point; 2],
    pub tangent_axes: [usize; 2],
    pub n_tangents: usize,
    /// Physical face measure / reference face measure = prod h_t / 2.
    pub jacobian: f64,
    /// Half-width of the element along each tangential axis.
    pub tangent_half_widths: [f64; 2],
    /// Coordinate of the face plane along the normal axis.
    pub plane: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub dim: usize,
    pub elements: Vec<Element>,
    pub interfaces: Vec<Interface>,
    pub boundary: Vec<BoundarySegment>,
}

impl Decomposition {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn face_frame(&self, element: usize, face: usize) -> Result<FaceFrame, GeometryError> {
        let dim = self.dim;
        if face >= n_faces(dim) {
            return Err(GeometryError::InvalidFace { face, dim });
        }
        let e = &self.elements[element];
        let axis = face_axis(face);
        let sign = if face_is_upper(face) { 1.0 } else { -1.0 };
        let mut normal = [0.0; 3];
        normal[axis] = sign;
        let mut tangents = [[0.0; 3]; 2];
        let mut tangent_axes = [0usize; 2];
        let mut half_widths = [0.0; 2];
        let mut jac = 1.0;
        let mut k = 0;
        for a in 0..dim {
            if a == axis {
                continue;
            }
            tangents[k][a] = 1.0;
            tangent_axes[k] = a;
            half_widths[k] = e.half_width(a);
            jac *= e.half_width(a);
            k += 1;
        }
        Ok(FaceFrame {
            normal,
            tangents,
            tangent_axes,
            n_tangents: dim - 1,
            jacobian: jac,
            tangent_half_widths: half_widths,
            plane: if face_is_upper(face) {
                e.upper[axis]
            } else {
                e.lower[axis]
            },
        })
    }

    pub fn segments_with_tag(&self, tag: &str) -> Vec<usize> {
        self.boundary
            .iter()
            .enumerate()
            .filter(|(_, s)| s.tag == tag)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn domain_volume(&self) -> f64 {
        self.elements.iter().map(|e| e.volume(self.dim)).sum()
    }
}

/// One axis-aligned block of the structured domain description.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub lower: Point,
    pub upper: Point,
}

/// Assigns a tag to boundary faces. All `Some` fields must match; rules are
/// tried in order and the first match wins. A rule with all fields `None`
/// is a catch-all.
#[derive(Debug, Clone, PartialEq)]
pub struct TagRule {
    pub tag: String,
    pub axis: Option<usize>,
    pub upper: Option<bool>,
    pub plane: Option<f64>,
}

impl TagRule {
    pub fn catch_all(tag: &str) -> Self {
        Self {
            tag: tag.to_string(),
            axis: None,
            upper: None,
            plane: None,
        }
    }

    fn matches(&self, axis: usize, upper: bool, plane: f64) -> bool {
        if let Some(a) = self.axis {
            if a != axis {
                return false;
            }
        }
        if let Some(u) = self.upper {
            if u != upper {
                return false;
            }
        }
        if let Some(p) = self.plane {
            if (p - plane).abs() > REF_TOL {
                return false;
            }
        }
        true
    }
}

/// Structured description of the domain: blocks plus boundary tag rules.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    pub blocks: Vec<Block>,
    pub tag_rules: Vec<TagRule>,
}

impl DomainSpec {
    /// Single block with per-side tags "xmin".."zmax".
    pub fn single_block(dim: usize, lower: Point, upper: Point) -> Self {
        Self {
            dim,
            blocks: vec![Block { lower, upper }],
            tag_rules: side_tag_rules(dim),
        }
    }
}

/// One tag rule per bounding side, named xmin/xmax/ymin/ymax/zmin/zmax.
pub fn side_tag_rules(dim: usize) -> Vec<TagRule> {
    let names = [["xmin", "xmax"], ["ymin", "ymax"], ["zmin", "zmax"]];
    let mut rules = Vec::new();
    for axis in 0..dim {
        for (u, name) in names[axis].iter().enumerate() {
            rules.push(TagRule {
                tag: name.to_string(),
                axis: Some(axis),
                upper: Some(u == 1),
                plane: None,
            });
        }
    }
    rules
}

fn intervals_identical(a: &Block, b: &Block, axis: usize) -> bool {
    a.lower[axis] == b.lower[axis] && a.upper[axis] == b.upper[axis]
}

fn intervals_overlap(a: &Block, b: &Block, axis: usize) -> bool {
    a.lower[axis].max(b.lower[axis]) < a.upper[axis].min(b.upper[axis])
}

/// Build the decomposition from a structured block list. Interfaces are
/// discovered by exact corner matching; partial face overlaps are rejected.
pub fn build_decomposition(spec: &DomainSpec) -> Result<Decomposition, GeometryError> {
    let dim = ReferenceElement::new(spec.dim)?.dim;
    for (i, b) in spec.blocks.iter().enumerate() {
        for a in 0..dim {
            if !(b.upper[a] > b.lower[a]) {
                return Err(GeometryError::DegenerateBlock(i, a));
            }
        }
    }
    // Pairwise overlap and interface discovery.
    let mut interfaces = Vec::new();
    let n = spec.blocks.len();
    let mut face_used = vec![vec![false; n_faces(dim)]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let a = &spec.blocks[i];
            let b = &spec.blocks[j];
            if (0..dim).all(|ax| intervals_overlap(a, b, ax)) {
                return Err(GeometryError::OverlappingBlocks(i, j));
            }
            for ax in 0..dim {
                let tangential_overlap = (0..dim)
                    .filter(|t| *t != ax)
                    .all(|t| intervals_overlap(a, b, t));
                let tangential_identical = (0..dim)
                    .filter(|t| *t != ax)
                    .all(|t| intervals_identical(a, b, t));
                // a above b or b above a along ax, touching exactly.
                let (lo_blk, hi_blk, touching) = if a.upper[ax] == b.lower[ax] {
                    (i, j, true)
                } else if b.upper[ax] == a.lower[ax] {
                    (j, i, true)
                } else {
                    (0, 0, false)
                };
                if !touching || !tangential_overlap {
                    continue;
                }
                if !tangential_identical {
                    return Err(GeometryError::HangingFace(i, j));
                }
                interfaces.push(Interface {
                    element_a: lo_blk,
                    face_a: 2 * ax + 1,
                    element_b: hi_blk,
                    face_b: 2 * ax,
                    orientation: Orientation::identity(),
                });
                face_used[lo_blk][2 * ax + 1] = true;
                face_used[hi_blk][2 * ax] = true;
            }
        }
    }
    let elements: Vec<Element> = spec
        .blocks
        .iter()
        .enumerate()
        .map(|(id, b)| Element {
            id,
            lower: b.lower,
            upper: b.upper,
        })
        .collect();
    // Remaining faces are boundary; tag them.
    let mut boundary = Vec::new();
    for (e, elem) in elements.iter().enumerate() {
        for face in 0..n_faces(dim) {
            if face_used[e][face] {
                continue;
            }
            let axis = face_axis(face);
            let upper = face_is_upper(face);
            let plane = if upper {
                elem.upper[axis]
            } else {
                elem.lower[axis]
            };
            let rule = spec
                .tag_rules
                .iter()
                .find(|r| r.matches(axis, upper, plane))
                .ok_or(GeometryError::UntaggedBoundaryFace { element: e, face })?;
            let mut normal = [0.0; 3];
            normal[axis] = if upper { 1.0 } else { -1.0 };
            boundary.push(BoundarySegment {
                element: e,
                face,
                tag: rule.tag.clone(),
                outward_normal: normal,
            });
        }
    }
    Ok(Decomposition {
        dim,
        elements,
        interfaces,
        boundary,
    })
}

/// Map a physical point into reference coordinates of element `e`.
pub fn reference_map(e: &Element, dim: usize, x: &Point) -> Result<Point, GeometryError> {
    let mut xi = [0.0; 3];
    let mut excess: f64 = 0.0;
    for a in 0..dim {
        xi[a] = 2.0 * (x[a] - e.lower[a]) / e.width(a) - 1.0;
        excess = excess.max(xi[a].abs() - 1.0);
    }
    if excess > REF_TOL {
        return Err(GeometryError::PointOutsideElement {
            element: e.id,
            excess,
        });
    }
    Ok(xi)
}

/// Inverse of [`reference_map`]: reference point to physical coordinates.
pub fn inverse_map(e: &Element, dim: usize, xi: &Point) -> Point {
    e.to_physical(dim, xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(lo: [f64; 2], hi: [f64; 2]) -> Block {
        Block {
            lower: [lo[0], lo[1], 0.0],
            upper: [hi[0], hi[1], 0.0],
        }
    }

    #[test]
    fn single_unit_square() {
        let spec = DomainSpec::single_block(2, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
        let d = build_decomposition(&spec).unwrap();
        assert_eq!(d.elements.len(), 1);
        assert_eq!(d.interfaces.len(), 0);
        assert_eq!(d.boundary.len(), 4);
    }

    #[test]
    fn four_element_square() {
        // [-1,1]^2 split into 4 unit squares.
        let mut blocks = Vec::new();
        for &x in &[-1.0, 0.0] {
            for &y in &[-1.0, 0.0] {
                blocks.push(block([x, y], [x + 1.0, y + 1.0]));
            }
        }
        let spec = DomainSpec {
            dim: 2,
            blocks,
            tag_rules: side_tag_rules(2),
        };
        let d = build_decomposition(&spec).unwrap();
        assert_eq!(d.elements.len(), 4);
        assert_eq!(d.interfaces.len(), 4);
        assert_eq!(d.boundary.len(), 8);
        assert!((d.domain_volume() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn l_shape_three_squares() {
        // (-1,1)^2 minus (0,1)x(-1,0): upper-left, upper-right, lower-left.
        let blocks = vec![
            block([-1.0, 0.0], [0.0, 1.0]),
            block([0.0, 0.0], [1.0, 1.0]),
            block([-1.0, -1.0], [0.0, 0.0]),
        ];
        let spec = DomainSpec {
            dim: 2,
            blocks,
            tag_rules: vec![TagRule::catch_all("wall")],
        };
        let d = build_decomposition(&spec).unwrap();
        assert_eq!(d.elements.len(), 3);
        assert_eq!(d.interfaces.len(), 2);
        assert_eq!(d.boundary.len(), 8);
        assert!((d.domain_volume() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_rejected() {
        let spec = DomainSpec {
            dim: 2,
            blocks: vec![block([0.0, 0.0], [1.0, 1.0]), block([0.5, 0.0], [1.5, 1.0])],
            tag_rules: vec![TagRule::catch_all("wall")],
        };
        assert_eq!(
            build_decomposition(&spec).unwrap_err(),
            GeometryError::OverlappingBlocks(0, 1)
        );
    }

    #[test]
    fn hanging_face_rejected() {
        let spec = DomainSpec {
            dim: 2,
            blocks: vec![block([0.0, 0.0], [1.0, 1.0]), block([1.0, 0.0], [2.0, 0.5])],
            tag_rules: vec![TagRule::catch_all("wall")],
        };
        assert_eq!(
            build_decomposition(&spec).unwrap_err(),
            GeometryError::HangingFace(0, 1)
        );
    }

    #[test]
    fn untagged_face_rejected() {
        let spec = DomainSpec {
            dim: 2,
            blocks: vec![block([0.0, 0.0], [1.0, 1.0])],
            tag_rules: vec![TagRule {
                tag: "bottom".into(),
                axis: Some(1),
                upper: Some(false),
                plane: None,
            }],
        };
        assert!(matches!(
            build_decomposition(&spec).unwrap_err(),
            GeometryError::UntaggedBoundaryFace { .. }
        ));
    }

    #[test]
    fn corner_touch_is_not_an_interface() {
        let spec = DomainSpec {
            dim: 2,
            blocks: vec![block([0.0, 0.0], [1.0, 1.0]), block([1.0, 1.0], [2.0, 2.0])],
            tag_rules: vec![TagRule::catch_all("wall")],
        };
        let d = build_decomposition(&spec).unwrap();
        assert_eq!(d.interfaces.len(), 0);
        assert_eq!(d.boundary.len(), 8);
    }

    #[test]
    fn reference_map_examples() {
        let e = Element {
            id: 0,
            lower: [0.0, 0.0, 0.0],
            upper: [1.0, 1.0, 0.0],
        };
        let xi = reference_map(&e, 2, &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(xi[0], 0.0);
        assert_eq!(xi[1], 0.0);
        let xi = reference_map(&e, 2, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(xi[0], 1.0);
        assert_eq!(xi[1], -1.0);
        let e2 = Element {
            id: 1,
            lower: [2.0, 0.0, 0.0],
            upper: [4.0, 1.0, 0.0],
        };
        let xi = reference_map(&e2, 2, &[3.0, 0.25, 0.0]).unwrap();
        assert!((xi[0] - 0.0).abs() < 1e-15);
        assert!((xi[1] + 0.5).abs() < 1e-15);
        assert!(reference_map(&e, 2, &[1.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn map_round_trip_random_points() {
        let e = Element {
            id: 0,
            lower: [0.3, -2.0, 1.0],
            upper: [0.9, 5.0, 1.5],
        };
        // Low-discrepancy-ish deterministic sample.
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let t = i as f64 / 99.0;
            let xi = [
                2.0 * t - 1.0,
                2.0 * (0.5 - (t * 7.0).fract()).abs() - 1.0_f64,
                (2.0 * t - 1.0).powi(3),
            ];
            let x = inverse_map(&e, 3, &xi);
            let back = reference_map(&e, 3, &x).unwrap();
            for a in 0..3 {
                worst = worst.max((back[a] - xi[a]).abs());
            }
        }
        assert!(worst <= 1e-12, "round trip error {worst}");
    }

    #[test]
    fn face_frames() {
        let spec = DomainSpec::single_block(2, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
        let d = build_decomposition(&spec).unwrap();
        // Bottom face of [0,1]^2: normal (0,-1), tangent (1,0), jacobian 0.5.
        let f = d.face_frame(0, 2).unwrap();
        assert_eq!(f.normal[..2], [0.0, -1.0]);
        assert_eq!(f.tangents[0][..2], [1.0, 0.0]);
        assert!((f.jacobian - 0.5).abs() < 1e-15);

        let spec = DomainSpec::single_block(2, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]);
        let d = build_decomposition(&spec).unwrap();
        let f = d.face_frame(0, 1).unwrap();
        assert_eq!(f.normal[..2], [1.0, 0.0]);
        assert_eq!(f.tangents[0][..2], [0.0, 1.0]);
        assert!((f.jacobian - 1.0).abs() < 1e-15);

        let spec = DomainSpec::single_block(3, [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let d = build_decomposition(&spec).unwrap();
        let f = d.face_frame(0, 5).unwrap();
        assert_eq!(f.normal, [0.0, 0.0, 1.0]);
        assert_eq!(f.tangents[0], [1.0, 0.0, 0.0]);
        assert_eq!(f.tangents[1], [0.0, 1.0, 0.0]);
        assert!((f.jacobian - 0.25).abs() < 1e-15);
    }

    #[test]
    fn interface_sides_are_consistent() {
        let spec = DomainSpec {
            dim: 2,
            blocks: vec![block([0.0, 0.0], [1.0, 1.0]), block([1.0, 0.0], [2.0, 1.0])],
            tag_rules: vec![TagRule::catch_all("wall")],
        };
        let d = build_decomposition(&spec).unwrap();
        assert_eq!(d.interfaces.len(), 1);
        let i = &d.interfaces[0];
        assert_eq!(i.element_a, 0);
        assert_eq!(i.face_a, 1);
        assert_eq!(i.element_b, 1);
        assert_eq!(i.face_b, 0);
        assert!(i.orientation.is_identity());
        // Both parameterizations give the same physical points.
        let fa = d.face_frame(i.element_a, i.face_a).unwrap();
        let fb = d.face_frame(i.element_b, i.face_b).unwrap();
        assert_eq!(fa.plane, fb.plane);
        assert_eq!(fa.tangent_axes, fb.tangent_axes);
        assert_eq!(fa.tangent_half_widths, fb.tangent_half_widths);
    }
    #[test]
    fn face_conformity_across_interfaces() {
        // Physical points sampled through both parameterizations of every
        // shared face coincide.
        let mut blocks = Vec::new();
        for &x in &[-1.0, 0.0] {
            for &y in &[-1.0, 0.0] {
                blocks.push(block([x, y], [x + 1.0, y + 1.0]));
            }
        }
        let spec = DomainSpec {
            dim: 2,
            blocks,
            tag_rules: side_tag_rules(2),
        };
        let d = build_decomposition(&spec).unwrap();
        let samples = [-0.9, -0.33, 0.0, 0.5, 1.0];
        for iface in &d.interfaces {
            assert!(iface.orientation.is_identity());
            let fa = d.face_frame(iface.element_a, iface.face_a).unwrap();
            let fb = d.face_frame(iface.element_b, iface.face_b).unwrap();
            let ea = &d.elements[iface.element_a];
            let eb = &d.elements[iface.element_b];
            let axis_a = face_axis(iface.face_a);
            let axis_b = face_axis(iface.face_b);
            for &s in &samples {
                let mut xa = [0.0; 3];
                xa[axis_a] = fa.plane;
                let t = fa.tangent_axes[0];
                xa[t] = ea.center(t) + ea.half_width(t) * s;
                let mut xb = [0.0; 3];
                xb[axis_b] = fb.plane;
                let tb = fb.tangent_axes[0];
                xb[tb] = eb.center(tb) + eb.half_width(tb) * s;
                for a in 0..2 {
                    assert!((xa[a] - xb[a]).abs() <= 1e-12, "{xa:?} vs {xb:?}");
                }
            }
        }
    }
}
