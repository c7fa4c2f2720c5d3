//! Residual-term catalog: the interior residuals and jump terms shared by
//! every boundary-condition family, plus one recipe per family B1..B18
//! mapping its conditions onto weighted trace residuals.
//!
//! Each term is (locus, norm, components); each component is a
//! constant-coefficient operator on the fields plus a target data function.
//! Dirichlet-type traces go into the 3/2 norm, derivative- and
//! pressure-type traces into the 1/2 norm, matching the regularity
//! estimates behind the functional.

use crate::data::{ComboData, DataFn, ExactSolution, OperatorOnExact};
use crate::geometry::{Decomposition, FaceFrame, GeometryError};
use crate::norms::{NormError, NormOrder};
use crate::operators::{self, OperatorPart, PartList, Side};
use crate::spectral::SpectralError;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

pub use crate::eval::{apply_operator, functional_value};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("{family:?} has {expected} boundary groups, got {got} tag sets")]
    GroupCount {
        family: Family,
        expected: usize,
        got: usize,
    },
    #[error("{family:?} group {group} is missing data slot {slot:?}")]
    MissingSlot {
        family: Family,
        group: usize,
        slot: String,
    },
    #[error("{family:?} group {group} has extraneous data slot {slot:?}")]
    ExtraSlot {
        family: Family,
        group: usize,
        slot: String,
    },
    #[error("data slot {slot:?} must be {expected}")]
    SlotKind {
        slot: String,
        expected: &'static str,
    },
    #[error("{family:?} requires scalar parameter {param:?}")]
    MissingParam { family: Family, param: &'static str },
    #[error("segment tag {0:?} matches no boundary segment")]
    TagNotFound(String),
    #[error(
        "boundary face {face} of element {element} (tag {tag:?}) is not covered by any condition"
    )]
    UncoveredSegment {
        element: usize,
        face: usize,
        tag: String,
    },
    #[error("boundary face {face} of element {element} (tag {tag:?}) is covered more than once")]
    DoublyCoveredSegment {
        element: usize,
        face: usize,
        tag: String,
    },
    #[error("{family:?} is not supported in {dim}D")]
    DimUnsupported { family: Family, dim: usize },
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("residual term list is empty")]
    EmptyTerms,
}

/// Where a residual term lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermLocus {
    Element(usize),
    Interface(usize),
    /// Index into `Decomposition::boundary`.
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    Momentum,
    Continuity,
    JumpVelocity,
    JumpVelocityDeriv(usize),
    JumpPressure,
    BoundaryResidual { family: Family, label: &'static str },
}

/// Target data of one residual component.
#[derive(Clone)]
pub enum Target {
    Zero,
    Data(Arc<dyn DataFn>),
}

impl Target {
    pub fn eval_deriv(&self, deriv: &[u8; 3], x: &[f64; 3]) -> f64 {
        match self {
            Target::Zero => 0.0,
            Target::Data(f) => f.eval_deriv(deriv, x),
        }
    }
}

impl std::fmt::Debug for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Zero => write!(f, "Zero"),
            Target::Data(_) => write!(f, "Data(..)"),
        }
    }
}

/// One scalar residual: a linear operator on the fields minus its target.
#[derive(Debug, Clone)]
pub struct ResidualComponent {
    pub parts: PartList,
    pub target: Target,
}

#[derive(Debug, Clone)]
pub struct ResidualTerm {
    pub locus: TermLocus,
    pub kind: TermKind,
    pub norm: NormOrder,
    pub components: Vec<ResidualComponent>,
}

/// The eighteen boundary-condition families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    B9,
    B10,
    B11,
    B12,
    B13,
    B14,
    B15,
    B16,
    B17,
    B18,
}

pub const ALL_FAMILIES: [Family; 18] = [
    Family::B1,
    Family::B2,
    Family::B3,
    Family::B4,
    Family::B5,
    Family::B6,
    Family::B7,
    Family::B8,
    Family::B9,
    Family::B10,
    Family::B11,
    Family::B12,
    Family::B13,
    Family::B14,
    Family::B15,
    Family::B16,
    Family::B17,
    Family::B18,
];

impl Family {
    pub fn parse(name: &str) -> Result<Family, CatalogError> {
        ALL_FAMILIES
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| CatalogError::UnknownFamily(name.to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::B1 => "B1",
            Family::B2 => "B2",
            Family::B3 => "B3",
            Family::B4 => "B4",
            Family::B5 => "B5",
            Family::B6 => "B6",
            Family::B7 => "B7",
            Family::B8 => "B8",
            Family::B9 => "B9",
            Family::B10 => "B10",
            Family::B11 => "B11",
            Family::B12 => "B12",
            Family::B13 => "B13",
            Family::B14 => "B14",
            Family::B15 => "B15",
            Family::B16 => "B16",
            Family::B17 => "B17",
            Family::B18 => "B18",
        }
    }

    pub fn n_groups(&self) -> usize {
        match self {
            Family::B1 | Family::B9 | Family::B14 | Family::B15 => 2,
            Family::B6 | Family::B12 => 3,
            Family::B13 => 4,
            _ => 1,
        }
    }

    pub fn group_names(&self) -> Vec<&'static str> {
        match self.n_groups() {
            1 => vec!["gamma"],
            2 => match self {
                Family::B14 | Family::B15 => vec!["gamma0", "gamma1"],
                _ => vec!["gamma1", "gamma2"],
            },
            3 => vec!["gamma1", "gamma2", "gamma3"],
            4 => vec!["gamma1", "gamma2", "gamma3", "gamma4"],
            _ => unreachable!(),
        }
    }
}

/// Scalar parameters used by the slip-type families.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FamilyParams {
    /// Slip coefficient (B2, B3).
    pub b: Option<f64>,
    /// Slip coefficient (B18).
    pub alpha: Option<f64>,
    /// Viscosity factor (B10, B16); defaults to 1.
    pub nu: Option<f64>,
}

impl FamilyParams {
    fn b(&self, family: Family) -> Result<f64, CatalogError> {
        self.b
            .ok_or(CatalogError::MissingParam { family, param: "b" })
    }

    fn alpha(&self, family: Family) -> Result<f64, CatalogError> {
        self.alpha.ok_or(CatalogError::MissingParam {
            family,
            param: "alpha",
        })
    }

    fn nu(&self) -> f64 {
        self.nu.unwrap_or(1.0)
    }
}

/// Boundary data for one group: scalar or vector-valued.
#[derive(Clone)]
pub enum SlotValue {
    Scalar(Arc<dyn DataFn>),
    Vector(Vec<Arc<dyn DataFn>>),
}

/// Where targets come from: slot data (user-provided functions) or traces of
/// a known exact solution (manufactured problems).
#[derive(Clone)]
pub enum DataSource {
    Slots(Vec<BTreeMap<String, SlotValue>>),
    Exact(Arc<ExactSolution>),
}

/// One family applied to tagged boundary pieces.
#[derive(Clone)]
pub struct BoundaryConditionSpec {
    pub family: Family,
    /// Segment tags per family group, in `Family::group_names` order.
    pub group_tags: Vec<Vec<String>>,
    pub data: DataSource,
    pub params: FamilyParams,
}

/// How one residual component's target is built from the group's slots.
#[derive(Debug, Clone, Copy, PartialEq)]
enum TargetBind {
    Zero,
    Scalar(&'static str),
    VecComp(&'static str, usize),
    VecDotN(&'static str),
    VecDotTangent(&'static str, usize),
    VecCrossN2D(&'static str),
    VecCrossNComp(&'static str, usize),
}

impl TargetBind {
    fn slot(&self) -> Option<(&'static str, &'static str)> {
        match self {
            TargetBind::Zero => None,
            TargetBind::Scalar(s) => Some((s, "scalar")),
            TargetBind::VecComp(s, _)
            | TargetBind::VecDotN(s)
            | TargetBind::VecDotTangent(s, _)
            | TargetBind::VecCrossN2D(s)
            | TargetBind::VecCrossNComp(s, _) => Some((s, "vector")),
        }
    }
}

struct ResidualSpec {
    label: &'static str,
    norm: NormOrder,
    components: Vec<PartList>,
    bindings: Vec<TargetBind>,
}

fn dirichlet_spec(dim: usize, slot: &'static str) -> ResidualSpec {
    ResidualSpec {
        label: "velocity",
        norm: NormOrder::HThreeHalfFace,
        components: operators::velocity(dim),
        bindings: (0..dim).map(|i| TargetBind::VecComp(slot, i)).collect(),
    }
}

fn dirichlet_zero_spec(dim: usize) -> ResidualSpec {
    ResidualSpec {
        label: "velocity",
        norm: NormOrder::HThreeHalfFace,
        components: operators::velocity(dim),
        bindings: vec![TargetBind::Zero; dim],
    }
}

/// Binding for a curl-type datum: scalar vorticity data in 2D, k x n of a
/// vector datum in 3D.
fn curl_bindings(dim: usize, slot: &'static str, n_comps: usize) -> Vec<TargetBind> {
    if dim == 2 {
        vec![TargetBind::Scalar(slot)]
    } else {
        (0..n_comps)
            .map(|c| TargetBind::VecCrossNComp(slot, c))
            .collect()
    }
}

fn tangential_bindings(dim: usize, slot: &'static str, n: usize) -> Vec<TargetBind> {
    if dim == 2 {
        vec![TargetBind::Scalar(slot)]
    } else {
        (0..n).map(|j| TargetBind::VecDotTangent(slot, j)).collect()
    }
}

/// The R2 residual list of one family group on one face.
fn family_group_residuals(
    family: Family,
    group: usize,
    dim: usize,
    frame: &FaceFrame,
    params: &FamilyParams,
) -> Result<Vec<ResidualSpec>, CatalogError> {
    use NormOrder::{HHalfFace as Half, HThreeHalfFace as ThreeHalf};
    let nt = frame.n_tangents;
    let specs = match (family, group) {
        (Family::B1, 0) => vec![dirichlet_spec(dim, "g")],
        (Family::B1, 1) => {
            let curl = operators::curl_cross_n(dim, frame);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "normal_velocity",
                    norm: ThreeHalf,
                    components: operators::normal_velocity(dim, frame),
                    bindings: vec![TargetBind::Scalar("g_n")],
                },
                ResidualSpec {
                    label: "curl_cross_n",
                    norm: Half,
                    components: curl,
                    bindings: curl_bindings(dim, "k", nc),
                },
            ]
        }
        (Family::B2, 0) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::Scalar("g_n")],
            },
            ResidualSpec {
                label: "grad_slip",
                norm: Half,
                components: operators::grad_slip_tangential(dim, frame, params.b(family)?),
                bindings: (0..nt)
                    .map(|j| TargetBind::VecDotTangent("h_tau", j))
                    .collect(),
            },
        ],
        (Family::B3, 0) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::Scalar("g_n")],
            },
            ResidualSpec {
                label: "strain_slip",
                norm: Half,
                components: operators::strain_slip_tangential(dim, frame, params.b(family)?),
                bindings: (0..nt)
                    .map(|j| TargetBind::VecDotTangent("h_tau", j))
                    .collect(),
            },
        ],
        (Family::B4, 0) => {
            let curl = operators::curl_cross_n(dim, frame);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "normal_velocity",
                    norm: ThreeHalf,
                    components: operators::normal_velocity(dim, frame),
                    bindings: vec![TargetBind::Scalar("g")],
                },
                ResidualSpec {
                    label: "curl_cross_n",
                    norm: Half,
                    components: curl,
                    bindings: curl_bindings(dim, "h", nc),
                },
            ]
        }
        (Family::B5, 0) => {
            let cross = operators::cross_velocity(dim, frame);
            let bindings = if dim == 2 {
                vec![TargetBind::VecCrossN2D("g")]
            } else {
                (0..cross.len())
                    .map(|c| TargetBind::VecCrossNComp("g", c))
                    .collect()
            };
            vec![
                ResidualSpec {
                    label: "cross_velocity",
                    norm: ThreeHalf,
                    components: cross,
                    bindings,
                },
                ResidualSpec {
                    label: "pressure",
                    norm: Half,
                    components: operators::pressure(dim),
                    bindings: vec![TargetBind::Scalar("p_tilde")],
                },
            ]
        }
        (Family::B6, 0) => vec![dirichlet_spec(dim, "u0")],
        (Family::B6, 1) => {
            let cross = operators::cross_velocity(dim, frame);
            let bindings = if dim == 2 {
                vec![TargetBind::VecCrossN2D("a")]
            } else {
                (0..cross.len())
                    .map(|c| TargetBind::VecCrossNComp("a", c))
                    .collect()
            };
            vec![
                ResidualSpec {
                    label: "cross_velocity",
                    norm: ThreeHalf,
                    components: cross,
                    bindings,
                },
                ResidualSpec {
                    label: "pressure",
                    norm: Half,
                    components: operators::pressure(dim),
                    bindings: vec![TargetBind::Scalar("p0")],
                },
            ]
        }
        (Family::B6, 2) => {
            let curl = operators::curl_cross_n(dim, frame);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "normal_velocity",
                    norm: ThreeHalf,
                    components: operators::normal_velocity(dim, frame),
                    bindings: vec![TargetBind::VecDotN("b")],
                },
                ResidualSpec {
                    label: "curl_cross_n",
                    norm: Half,
                    components: curl,
                    bindings: curl_bindings(dim, "h", nc),
                },
            ]
        }
        (Family::B7, 0) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::Scalar("g")],
            },
            ResidualSpec {
                label: "strain_traction_tangential",
                norm: Half,
                components: operators::strain_slip_tangential(dim, frame, 0.0),
                bindings: (0..nt).map(|j| TargetBind::VecDotTangent("h", j)).collect(),
            },
        ],
        (Family::B8, 0) => {
            let curl = operators::curl_tangential(dim, frame);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "normal_velocity",
                    norm: ThreeHalf,
                    components: operators::normal_velocity(dim, frame),
                    bindings: vec![TargetBind::Zero],
                },
                ResidualSpec {
                    label: "curl_tangential",
                    norm: Half,
                    components: curl,
                    bindings: vec![TargetBind::Zero; nc],
                },
            ]
        }
        (Family::B9, 0) => vec![dirichlet_spec(dim, "g")],
        (Family::B9, 1) => {
            let cross = operators::cross_velocity(dim, frame);
            let bindings = if dim == 2 {
                vec![TargetBind::Scalar("g_tilde")]
            } else {
                (0..cross.len())
                    .map(|c| TargetBind::VecComp("g_tilde", c))
                    .collect()
            };
            vec![
                ResidualSpec {
                    label: "pressure",
                    norm: Half,
                    components: operators::pressure(dim),
                    bindings: vec![TargetBind::Scalar("phi")],
                },
                ResidualSpec {
                    label: "cross_velocity",
                    norm: ThreeHalf,
                    components: cross,
                    bindings,
                },
            ]
        }
        (Family::B10, 0) => vec![
            ResidualSpec {
                label: "normal_stress",
                norm: Half,
                components: operators::normal_stress_grad(dim, frame, params.nu()),
                bindings: vec![TargetBind::Scalar("g")],
            },
            ResidualSpec {
                label: "tangential_velocity",
                norm: ThreeHalf,
                components: operators::tangential_velocity(dim, frame),
                bindings: vec![TargetBind::Zero; nt],
            },
        ],
        (Family::B11, 0) => {
            let curl = operators::curl(dim);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "normal_velocity",
                    norm: ThreeHalf,
                    components: operators::normal_velocity(dim, frame),
                    bindings: vec![TargetBind::Zero],
                },
                ResidualSpec {
                    label: "curl",
                    norm: Half,
                    components: curl,
                    bindings: vec![TargetBind::Zero; nc],
                },
            ]
        }
        (Family::B12, _) if dim != 2 => return Err(CatalogError::DimUnsupported { family, dim }),
        (Family::B12, 0) => vec![dirichlet_spec(dim, "u0")],
        (Family::B12, 1) => vec![
            ResidualSpec {
                label: "cross_velocity",
                norm: ThreeHalf,
                components: operators::cross_velocity(dim, frame),
                bindings: vec![TargetBind::Scalar("u02")],
            },
            ResidualSpec {
                label: "pressure",
                norm: Half,
                components: operators::pressure(dim),
                bindings: vec![TargetBind::Scalar("phi")],
            },
        ],
        (Family::B12, 2) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::Scalar("u01")],
            },
            ResidualSpec {
                label: "curl_tangential",
                norm: Half,
                components: operators::curl_tangential(dim, frame),
                bindings: vec![TargetBind::Scalar("h")],
            },
        ],
        (Family::B13, 0) => vec![dirichlet_spec(dim, "g")],
        (Family::B13, 1) => {
            let curl = operators::curl_tangential(dim, frame);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "normal_velocity",
                    norm: ThreeHalf,
                    components: operators::normal_velocity(dim, frame),
                    bindings: vec![TargetBind::Scalar("g_n")],
                },
                ResidualSpec {
                    label: "curl_tangential",
                    norm: Half,
                    components: curl,
                    bindings: tangential_bindings(dim, "w_s", nc),
                },
            ]
        }
        (Family::B13, 2) => vec![
            ResidualSpec {
                label: "pressure",
                norm: Half,
                components: operators::pressure(dim),
                bindings: vec![TargetBind::Scalar("psi")],
            },
            ResidualSpec {
                label: "tangential_velocity",
                norm: ThreeHalf,
                components: operators::tangential_velocity(dim, frame),
                bindings: tangential_bindings(dim, "g_s", nt),
            },
        ],
        (Family::B13, 3) => {
            let curl = operators::curl_tangential(dim, frame);
            let nc = curl.len();
            vec![
                ResidualSpec {
                    label: "pressure",
                    norm: Half,
                    components: operators::pressure(dim),
                    bindings: vec![TargetBind::Scalar("psi")],
                },
                ResidualSpec {
                    label: "curl_tangential",
                    norm: Half,
                    components: curl,
                    bindings: tangential_bindings(dim, "g_s", nc),
                },
            ]
        }
        (Family::B14, 0) => vec![dirichlet_zero_spec(dim)],
        (Family::B14, 1) => vec![
            ResidualSpec {
                label: "tangential_velocity",
                norm: ThreeHalf,
                components: operators::tangential_velocity(dim, frame),
                bindings: vec![TargetBind::Zero; nt],
            },
            ResidualSpec {
                label: "normal_stress",
                norm: Half,
                components: operators::sigma_n(dim, frame),
                bindings: vec![TargetBind::Scalar("omega_n")],
            },
        ],
        (Family::B15, 0) => vec![dirichlet_zero_spec(dim)],
        (Family::B15, 1) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::Zero],
            },
            ResidualSpec {
                label: "tangential_stress",
                norm: Half,
                components: operators::sigma_tau(dim, frame),
                bindings: (0..nt)
                    .map(|j| TargetBind::VecDotTangent("omega_tau", j))
                    .collect(),
            },
        ],
        (Family::B16, 0) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::VecDotN("g")],
            },
            ResidualSpec {
                label: "slip_traction",
                norm: Half,
                components: operators::strain_slip_tangential(dim, frame, params.nu()),
                bindings: (0..nt).map(|j| TargetBind::VecDotTangent("s", j)).collect(),
            },
        ],
        (Family::B17, 0) => vec![
            ResidualSpec {
                label: "tangential_velocity",
                norm: ThreeHalf,
                components: operators::tangential_velocity(dim, frame),
                bindings: tangential_bindings(dim, "g", nt),
            },
            ResidualSpec {
                label: "pressure",
                norm: Half,
                components: operators::pressure(dim),
                bindings: vec![TargetBind::Scalar("h")],
            },
        ],
        (Family::B18, 0) => vec![
            ResidualSpec {
                label: "normal_velocity",
                norm: ThreeHalf,
                components: operators::normal_velocity(dim, frame),
                bindings: vec![TargetBind::Scalar("g")],
            },
            ResidualSpec {
                label: "slip_traction",
                norm: Half,
                components: operators::strain_slip_tangential(dim, frame, params.alpha(family)?),
                bindings: (0..nt).map(|j| TargetBind::VecDotTangent("h", j)).collect(),
            },
        ],
        _ => unreachable!("group index validated before dispatch"),
    };
    Ok(specs)
}

/// Data slots (name, kind) demanded by one family group.
pub fn required_slots(
    family: Family,
    group: usize,
    dim: usize,
) -> Result<Vec<(&'static str, &'static str)>, CatalogError> {
    // Slot names do not depend on the face, so probe with a synthetic frame.
    let frame = FaceFrame {
        normal: [1.0, 0.0, 0.0],
        tangents: [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        tangent_axes: [1, 2],
        n_tangents: dim - 1,
        jacobian: 1.0,
        tangent_half_widths: [1.0, 1.0],
        plane: 0.0,
    };
    let params = FamilyParams {
        b: Some(1.0),
        alpha: Some(1.0),
        nu: Some(1.0),
    };
    let specs = family_group_residuals(family, group, dim, &frame, &params)?;
    let mut slots: Vec<(&'static str, &'static str)> = Vec::new();
    for spec in &specs {
        for b in &spec.bindings {
            if let Some(s) = b.slot() {
                if !slots.iter().any(|t| t.0 == s.0) {
                    slots.push(s);
                }
            }
        }
    }
    Ok(slots)
}

fn resolve_slot_target(
    bind: &TargetBind,
    slots: &BTreeMap<String, SlotValue>,
    frame: &FaceFrame,
    dim: usize,
    family: Family,
    group: usize,
) -> Result<Target, CatalogError> {
    let lookup = |name: &'static str| -> Result<&SlotValue, CatalogError> {
        slots.get(name).ok_or(CatalogError::MissingSlot {
            family,
            group,
            slot: name.to_string(),
        })
    };
    let scalar = |name: &'static str| -> Result<Arc<dyn DataFn>, CatalogError> {
        match lookup(name)? {
            SlotValue::Scalar(f) => Ok(f.clone()),
            SlotValue::Vector(_) => Err(CatalogError::SlotKind {
                slot: name.to_string(),
                expected: "scalar",
            }),
        }
    };
    let vector = |name: &'static str| -> Result<Vec<Arc<dyn DataFn>>, CatalogError> {
        match lookup(name)? {
            SlotValue::Vector(v) => Ok(v.clone()),
            SlotValue::Scalar(_) => Err(CatalogError::SlotKind {
                slot: name.to_string(),
                expected: "vector",
            }),
        }
    };
    let combo = |terms: Vec<(Arc<dyn DataFn>, f64)>| -> Target {
        Target::Data(Arc::new(ComboData { terms }))
    };
    Ok(match bind {
        TargetBind::Zero => Target::Zero,
        TargetBind::Scalar(name) => Target::Data(scalar(name)?),
        TargetBind::VecComp(name, i) => Target::Data(vector(name)?[*i].clone()),
        TargetBind::VecDotN(name) => {
            let v = vector(name)?;
            combo((0..dim).map(|i| (v[i].clone(), frame.normal[i])).collect())
        }
        TargetBind::VecDotTangent(name, j) => {
            let v = vector(name)?;
            combo(
                (0..dim)
                    .map(|i| (v[i].clone(), frame.tangents[*j][i]))
                    .collect(),
            )
        }
        TargetBind::VecCrossN2D(name) => {
            let v = vector(name)?;
            combo(vec![
                (v[0].clone(), frame.normal[1]),
                (v[1].clone(), -frame.normal[0]),
            ])
        }
        TargetBind::VecCrossNComp(name, c) => {
            let v = vector(name)?;
            let j = (c + 1) % 3;
            let k = (c + 2) % 3;
            combo(vec![
                (v[j].clone(), frame.normal[k]),
                (v[k].clone(), -frame.normal[j]),
            ])
        }
    })
}

/// Target that makes the residual vanish at the exact solution: the
/// component's own operator applied to (u, p).
fn exact_target(parts: &PartList, exact: &Arc<ExactSolution>) -> Target {
    if parts.is_empty() {
        return Target::Zero;
    }
    Target::Data(Arc::new(OperatorOnExact {
        exact: exact.clone(),
        parts: parts.iter().map(|p| (p.field, p.deriv, p.coeff)).collect(),
    }))
}

fn validate_spec(spec: &BoundaryConditionSpec, decomp: &Decomposition) -> Result<(), CatalogError> {
    let family = spec.family;
    if spec.group_tags.len() != family.n_groups() {
        return Err(CatalogError::GroupCount {
            family,
            expected: family.n_groups(),
            got: spec.group_tags.len(),
        });
    }
    for tags in &spec.group_tags {
        for tag in tags {
            if decomp.segments_with_tag(tag).is_empty() {
                return Err(CatalogError::TagNotFound(tag.clone()));
            }
        }
    }
    if let DataSource::Slots(groups) = &spec.data {
        for (g, slots) in groups.iter().enumerate() {
            let required = required_slots(family, g, decomp.dim)?;
            for (name, kind) in &required {
                match slots.get(*name) {
                    None => {
                        return Err(CatalogError::MissingSlot {
                            family,
                            group: g,
                            slot: name.to_string(),
                        })
                    }
                    Some(SlotValue::Scalar(_)) if *kind != "scalar" => {
                        return Err(CatalogError::SlotKind {
                            slot: name.to_string(),
                            expected: "vector",
                        })
                    }
                    Some(SlotValue::Vector(_)) if *kind != "vector" => {
                        return Err(CatalogError::SlotKind {
                            slot: name.to_string(),
                            expected: "scalar",
                        })
                    }
                    _ => {}
                }
            }
            for name in slots.keys() {
                if !required.iter().any(|(r, _)| r == name) {
                    return Err(CatalogError::ExtraSlot {
                        family,
                        group: g,
                        slot: name.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Residual terms of one family application, restricted to its tagged
/// segments.
pub fn boundary_terms(
    spec: &BoundaryConditionSpec,
    decomp: &Decomposition,
) -> Result<Vec<ResidualTerm>, CatalogError> {
    validate_spec(spec, decomp)?;
    let dim = decomp.dim;
    let mut terms = Vec::new();
    for (g, tags) in spec.group_tags.iter().enumerate() {
        for (seg_idx, seg) in decomp.boundary.iter().enumerate() {
            if !tags.iter().any(|t| *t == seg.tag) {
                continue;
            }
            let frame = decomp.face_frame(seg.element, seg.face)?;
            let specs = family_group_residuals(spec.family, g, dim, &frame, &spec.params)?;
            for rs in specs {
                let mut components = Vec::new();
                for (c, parts) in rs.components.iter().enumerate() {
                    let target = match &spec.data {
                        DataSource::Exact(exact) => exact_target(parts, exact),
                        DataSource::Slots(groups) => resolve_slot_target(
                            &rs.bindings[c],
                            &groups[g],
                            &frame,
                            dim,
                            spec.family,
                            g,
                        )?,
                    };
                    components.push(ResidualComponent {
                        parts: parts.clone(),
                        target,
                    });
                }
                terms.push(ResidualTerm {
                    locus: TermLocus::Boundary(seg_idx),
                    kind: TermKind::BoundaryResidual {
                        family: spec.family,
                        label: rs.label,
                    },
                    norm: rs.norm,
                    components,
                });
            }
        }
    }
    Ok(terms)
}

fn jump_parts(field: usize, deriv: [u8; 3]) -> PartList {
    vec![
        OperatorPart {
            side: Side::B,
            field,
            deriv,
            coeff: 1.0,
        },
        OperatorPart {
            side: Side::A,
            field,
            deriv,
            coeff: -1.0,
        },
    ]
}

/// The interior part of the functional: momentum and continuity residuals
/// per element and jump terms per interface. Identical for all families.
pub fn interior_terms(
    decomp: &Decomposition,
    f: &[Arc<dyn DataFn>],
    chi: &Arc<dyn DataFn>,
) -> Vec<ResidualTerm> {
    let dim = decomp.dim;
    let mut terms = Vec::new();
    for e in 0..decomp.n_elements() {
        let momentum = operators::momentum(dim);
        terms.push(ResidualTerm {
            locus: TermLocus::Element(e),
            kind: TermKind::Momentum,
            norm: NormOrder::L2Elem,
            components: momentum
                .into_iter()
                .enumerate()
                .map(|(i, parts)| ResidualComponent {
                    parts,
                    target: Target::Data(f[i].clone()),
                })
                .collect(),
        });
        terms.push(ResidualTerm {
            locus: TermLocus::Element(e),
            kind: TermKind::Continuity,
            norm: NormOrder::H1Elem,
            components: operators::divergence(dim)
                .into_iter()
                .map(|parts| ResidualComponent {
                    parts,
                    target: Target::Data(chi.clone()),
                })
                .collect(),
        });
    }
    for (i, _) in decomp.interfaces.iter().enumerate() {
        terms.push(ResidualTerm {
            locus: TermLocus::Interface(i),
            kind: TermKind::JumpVelocity,
            norm: NormOrder::L2Face,
            components: (0..dim)
                .map(|c| ResidualComponent {
                    parts: jump_parts(c, [0; 3]),
                    target: Target::Zero,
                })
                .collect(),
        });
        for k in 0..dim {
            let mut d = [0u8; 3];
            d[k] = 1;
            terms.push(ResidualTerm {
                locus: TermLocus::Interface(i),
                kind: TermKind::JumpVelocityDeriv(k),
                norm: NormOrder::HHalfFace,
                components: (0..dim)
                    .map(|c| ResidualComponent {
                        parts: jump_parts(c, d),
                        target: Target::Zero,
                    })
                    .collect(),
            });
        }
        terms.push(ResidualTerm {
            locus: TermLocus::Interface(i),
            kind: TermKind::JumpPressure,
            norm: NormOrder::HHalfFace,
            components: vec![ResidualComponent {
                parts: jump_parts(dim, [0; 3]),
                target: Target::Zero,
            }],
        });
    }
    terms
}

/// Rank-one quadratic penalties fixing gauge directions the residual terms
/// leave free.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    /// (integral of p over Omega - target)^2
    PressureMean { target: f64 },
    /// (integral of u_component - target)^2
    VelocityMean { component: usize, target: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct GaugeOptions {
    /// Target for the pressure-mean penalty (integral of p over Omega).
    pub pressure_mean_target: f64,
    /// Add the pressure penalty even when a boundary term constrains p.
    pub force_pressure_penalty: bool,
    /// Optional velocity-mean penalties (component, target).
    pub velocity_means: Vec<(usize, f64)>,
}

/// Interior + boundary terms + gauge penalties for a full problem.
pub struct ProblemTerms {
    pub interior: Vec<ResidualTerm>,
    pub boundary: Vec<ResidualTerm>,
    pub penalties: Vec<Penalty>,
}

impl ProblemTerms {
    pub fn all_terms(&self) -> Vec<ResidualTerm> {
        let mut t = self.interior.clone();
        t.extend(self.boundary.clone());
        t
    }
}

/// Whether any boundary residual constrains the pressure (a p-dependent
/// trace term); jumps and gradients do not fix the global constant.
pub fn pressure_constrained(boundary: &[ResidualTerm], dim: usize) -> bool {
    boundary.iter().any(|t| {
        t.components
            .iter()
            .any(|c| c.parts.iter().any(|p| p.field == dim))
    })
}

pub fn assemble_problem_terms(
    decomp: &Decomposition,
    f: &[Arc<dyn DataFn>],
    chi: &Arc<dyn DataFn>,
    specs: &[BoundaryConditionSpec],
    gauge: &GaugeOptions,
) -> Result<ProblemTerms, CatalogError> {
    let interior = interior_terms(decomp, f, chi);
    let mut boundary = Vec::new();
    let mut coverage = vec![0usize; decomp.boundary.len()];
    for spec in specs {
        validate_spec(spec, decomp)?;
        for tags in &spec.group_tags {
            for (s, seg) in decomp.boundary.iter().enumerate() {
                if tags.iter().any(|t| *t == seg.tag) {
                    coverage[s] += 1;
                }
            }
        }
        boundary.extend(boundary_terms(spec, decomp)?);
    }
    for (s, count) in coverage.iter().enumerate() {
        let seg = &decomp.boundary[s];
        if *count == 0 {
            return Err(CatalogError::UncoveredSegment {
                element: seg.element,
                face: seg.face,
                tag: seg.tag.clone(),
            });
        }
        if *count > 1 {
            return Err(CatalogError::DoublyCoveredSegment {
                element: seg.element,
                face: seg.face,
                tag: seg.tag.clone(),
            });
        }
    }
    let mut penalties = Vec::new();
    if gauge.force_pressure_penalty || !pressure_constrained(&boundary, decomp.dim) {
        penalties.push(Penalty::PressureMean {
            target: gauge.pressure_mean_target,
        });
    }
    for (component, target) in &gauge.velocity_means {
        penalties.push(Penalty::VelocityMean {
            component: *component,
            target: *target,
        });
    }
    Ok(ProblemTerms {
        interior,
        boundary,
        penalties,
    })
}

/// Structural equality of term lists: same loci, kinds, norms, operator
/// parts, and targets agreeing at the probe points (targets are opaque
/// functions, so they are compared by sampling).
pub fn terms_structurally_equal(
    a: &[ResidualTerm],
    b: &[ResidualTerm],
    probes: &[[f64; 3]],
) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.iter().zip(b).all(|(x, y)| {
        x.locus == y.locus
            && x.kind == y.kind
            && x.norm == y.norm
            && x.components.len() == y.components.len()
            && x.components.iter().zip(&y.components).all(|(cx, cy)| {
                cx.parts == cy.parts
                    && probes.iter().all(|p| {
                        let dx = cx.target.eval_deriv(&[0, 0, 0], p);
                        let dy = cy.target.eval_deriv(&[0, 0, 0], p);
                        (dx - dy).abs() <= 1e-14 * (1.0 + dx.abs().max(dy.abs()))
                    })
            })
    })
}
