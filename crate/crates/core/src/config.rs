//! Experiment configuration files: TOML schema, validation, and resolution
//! into runnable problems. Data functions are expression strings over
//! x1, x2, x3 (see [`crate::expr`]).

use crate::bench::CaseId;
use crate::catalog::{
    assemble_problem_terms, BoundaryConditionSpec, CatalogError, DataSource, Family, FamilyParams,
    GaugeOptions, SlotValue,
};
use crate::data::{zero_data, DataFn, ExactSolution};
use crate::expr::{expr_scalar_field, parse_expr, ExprData, ExprError};
use crate::geometry::{build_decomposition, Block, DomainSpec, GeometryError, TagRule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("TOML parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config field {field}: {message}")]
    Schema {
        field: &'static str,
        message: String,
    },
    #[error("data expression for {slot:?}: {source}")]
    SlotExpr { slot: String, source: ExprError },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn schema(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RawConfig {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bc: Vec<BcApplySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<SourceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactSection>,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProblemSection {
    /// Built-in case name (ex1..ex8); omit for a custom problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSection {
    pub dim: usize,
    /// One block per row: [lo_1, .., lo_dim, hi_1, .., hi_dim].
    pub blocks: Vec<Vec<f64>>,
    #[serde(default)]
    pub tags: Vec<TagSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagSection {
    pub tag: String,
    /// One of xmin, xmax, ymin, ymax, zmin, zmax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcApplySection {
    pub family: String,
    /// Segment tags per family group.
    pub tags: Vec<Vec<String>>,
    /// Data slots per group: expression string (scalar) or array of
    /// expression strings (vector). Omitted when [exact] is present.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data: Vec<BTreeMap<String, toml::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

/// Source data for custom problems without an exact solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SourceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f3: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSection {
    pub u1: String,
    pub u2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u3: Option<String>,
    pub p: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolveSection {
    /// Polynomial orders: "a..b" (inclusive) or a list of integers.
    #[serde(default, rename = "W", skip_serializing_if = "Option::is_none")]
    pub w: Option<toml::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_cadence: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_mean_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// A custom (non-builtin) problem resolved from a config file.
pub struct CustomProblem {
    pub name: String,
    pub domain: DomainSpec,
    pub bcs: Vec<BoundaryConditionSpec>,
    pub f: Vec<Arc<dyn DataFn>>,
    pub chi: Arc<dyn DataFn>,
    pub exact: Option<Arc<ExactSolution>>,
    pub gauge: GaugeOptions,
}

pub enum ResolvedProblem {
    Builtin(CaseId),
    Custom(Box<CustomProblem>),
}

/// Parsed and validated experiment configuration.
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub problem: ResolvedProblem,
    pub ws: Vec<usize>,
    pub tol: Option<f64>,
    pub max_iterations: Option<usize>,
    pub report_cadence: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn problem_name(&self) -> String {
        match &self.problem {
            ResolvedProblem::Builtin(id) => id.name().to_string(),
            ResolvedProblem::Custom(c) => c.name.clone(),
        }
    }
}

/// Parse "a..b" (inclusive) or an integer list into a W list.
pub fn parse_w_values(v: &toml::Value) -> Result<Vec<usize>, ConfigError> {
    let ws =
        match v {
            toml::Value::String(s) => parse_w_range(s)
                .ok_or_else(|| schema("solve.W", format!("cannot parse W range {s:?}")))?,
            toml::Value::Integer(i) => vec![usize::try_from(*i)
                .map_err(|_| schema("solve.W", "W must be a positive integer"))?],
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::Integer(k) if *k >= 0 => Ok(*k as usize),
                    _ => Err(schema("solve.W", "W list entries must be integers")),
                })
                .collect::<Result<Vec<_>, _>>()?,
            _ => return Err(schema("solve.W", "expected a string range or integer list")),
        };
    if ws.is_empty() {
        return Err(schema("solve.W", "W list is empty"));
    }
    for &w in &ws {
        if w < 2 {
            return Err(schema("solve.W", format!("W values must be >= 2, got {w}")));
        }
    }
    Ok(ws)
}

/// "a..b" or "a..=b" or "a,b,c" or a single integer.
pub fn parse_w_range(s: &str) -> Option<Vec<usize>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: usize = a.trim().parse().ok()?;
        let b: usize = b.trim().parse().ok()?;
        if b < a {
            return None;
        }
        return Some((a..=b).collect());
    }
    if s.contains(',') {
        return s.split(',').map(|t| t.trim().parse().ok()).collect();
    }
    s.parse().ok().map(|w| vec![w])
}

fn side_to_rule(side: &str) -> Option<(usize, bool)> {
    match side {
        "xmin" => Some((0, false)),
        "xmax" => Some((0, true)),
        "ymin" => Some((1, false)),
        "ymax" => Some((1, true)),
        "zmin" => Some((2, false)),
        "zmax" => Some((2, true)),
        _ => None,
    }
}

fn resolve_domain(section: &DomainSection) -> Result<DomainSpec, ConfigError> {
    let dim = section.dim;
    if dim != 2 && dim != 3 {
        return Err(schema(
            "domain.dim",
            format!("dim must be 2 or 3, got {dim}"),
        ));
    }
    let mut blocks = Vec::new();
    for (i, row) in section.blocks.iter().enumerate() {
        if row.len() != 2 * dim {
            return Err(schema(
                "domain.blocks",
                format!("block {i} needs {} numbers, got {}", 2 * dim, row.len()),
            ));
        }
        let mut lower = [0.0; 3];
        let mut upper = [0.0; 3];
        for a in 0..dim {
            lower[a] = row[a];
            upper[a] = row[dim + a];
        }
        blocks.push(Block { lower, upper });
    }
    let mut tag_rules = Vec::new();
    for t in &section.tags {
        let (axis, upper) = match &t.side {
            Some(s) => {
                let (axis, upper) = side_to_rule(s)
                    .ok_or_else(|| schema("domain.tags.side", format!("unknown side {s:?}")))?;
                (Some(axis), Some(upper))
            }
            None => (None, None),
        };
        tag_rules.push(TagRule {
            tag: t.tag.clone(),
            axis,
            upper,
            plane: t.plane,
        });
    }
    if tag_rules.is_empty() {
        tag_rules = crate::geometry::side_tag_rules(dim);
    }
    Ok(DomainSpec {
        dim,
        blocks,
        tag_rules,
    })
}

fn slot_value(slot: &str, v: &toml::Value) -> Result<SlotValue, ConfigError> {
    let parse_one = |text: &str| -> Result<Arc<dyn DataFn>, ConfigError> {
        ExprData::parse(text)
            .map(|d| Arc::new(d) as Arc<dyn DataFn>)
            .map_err(|source| ConfigError::SlotExpr {
                slot: slot.to_string(),
                source,
            })
    };
    match v {
        toml::Value::String(s) => Ok(SlotValue::Scalar(parse_one(s)?)),
        toml::Value::Array(items) => {
            let mut comps = Vec::new();
            for item in items {
                match item {
                    toml::Value::String(s) => comps.push(parse_one(s)?),
                    _ => {
                        return Err(schema(
                            "bc.data",
                            format!("vector slot {slot:?} entries must be strings"),
                        ))
                    }
                }
            }
            Ok(SlotValue::Vector(comps))
        }
        _ => Err(schema(
            "bc.data",
            format!("slot {slot:?} must be an expression string or array of strings"),
        )),
    }
}

fn resolve_exact(section: &ExactSection, dim: usize) -> Result<Arc<ExactSolution>, ConfigError> {
    let mut velocity = Vec::new();
    let comps: Vec<(&str, Option<&String>)> = vec![
        ("exact.u1", Some(&section.u1)),
        ("exact.u2", Some(&section.u2)),
        ("exact.u3", section.u3.as_ref()),
    ];
    for (field, text) in comps.iter().take(dim) {
        let text = text.ok_or_else(|| schema("exact.u3", "3D problems need u3"))?;
        let expr = parse_expr(text).map_err(|source| ConfigError::SlotExpr {
            slot: field.to_string(),
            source,
        })?;
        velocity.push(expr_scalar_field(expr));
    }
    if dim == 2 && section.u3.is_some() {
        return Err(schema("exact.u3", "u3 given for a 2D problem"));
    }
    let p = parse_expr(&section.p).map_err(|source| ConfigError::SlotExpr {
        slot: "exact.p".to_string(),
        source,
    })?;
    Ok(Arc::new(ExactSolution {
        dim,
        velocity,
        pressure: expr_scalar_field(p),
    }))
}

/// Parse and validate config text; all boundary-condition slots are
/// resolved and the problem is assembled once against the decomposition to
/// surface family/data mismatches here rather than at run time.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let ws = match &raw.solve.w {
        Some(v) => parse_w_values(v)?,
        None => vec![2, 3, 4, 5, 6],
    };
    if let Some(t) = raw.solve.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(schema(
                "solve.tol",
                format!("tolerance must lie in (0,1), got {t}"),
            ));
        }
    }
    let out_dir = PathBuf::from(raw.output.dir.clone().unwrap_or_else(|| ".".to_string()));
    let problem = if let Some(case_name) = &raw.problem.case {
        if raw.domain.is_some() || !raw.bc.is_empty() || raw.exact.is_some() {
            return Err(schema(
                "problem.case",
                "built-in cases do not take domain/bc/exact sections",
            ));
        }
        let id = CaseId::parse(case_name)
            .ok_or_else(|| schema("problem.case", format!("unknown case {case_name:?}")))?;
        ResolvedProblem::Builtin(id)
    } else {
        let domain_section = raw
            .domain
            .as_ref()
            .ok_or_else(|| schema("domain", "custom problems need a [domain] section"))?;
        if raw.bc.is_empty() {
            return Err(schema(
                "bc",
                "custom problems need at least one [[bc]] entry",
            ));
        }
        let domain = resolve_domain(domain_section)?;
        let dim = domain.dim;
        let decomp = build_decomposition(&domain)?;
        let exact = raw
            .exact
            .as_ref()
            .map(|e| resolve_exact(e, dim))
            .transpose()?;
        let mut bcs = Vec::new();
        for apply in &raw.bc {
            let family = Family::parse(&apply.family)?;
            let params = FamilyParams {
                b: apply.b,
                alpha: apply.alpha,
                nu: apply.nu,
            };
            let data = match &exact {
                Some(ex) => {
                    if !apply.data.is_empty() {
                        return Err(schema(
                            "bc.data",
                            "omit bc data when [exact] is present (targets are derived)",
                        ));
                    }
                    DataSource::Exact(ex.clone())
                }
                None => {
                    let mut groups = Vec::new();
                    for g in 0..family.n_groups() {
                        let mut slots = BTreeMap::new();
                        if let Some(map) = apply.data.get(g) {
                            for (name, value) in map {
                                slots.insert(name.clone(), slot_value(name, value)?);
                            }
                        }
                        groups.push(slots);
                    }
                    DataSource::Slots(groups)
                }
            };
            bcs.push(BoundaryConditionSpec {
                family,
                group_tags: apply.tags.clone(),
                data,
                params,
            });
        }
        // Source data.
        let parse_source =
            |field: &'static str, text: &Option<String>| -> Result<Arc<dyn DataFn>, ConfigError> {
                match text {
                    None => Ok(zero_data()),
                    Some(t) => ExprData::parse(t)
                        .map(|d| Arc::new(d) as Arc<dyn DataFn>)
                        .map_err(|source| ConfigError::SlotExpr {
                            slot: field.to_string(),
                            source,
                        }),
                }
            };
        let (f, chi) = match (&exact, &raw.data) {
            (Some(ex), _) => {
                let case_like = crate::operators::momentum(dim)
                    .into_iter()
                    .map(|parts| {
                        Arc::new(crate::data::OperatorOnExact {
                            exact: ex.clone(),
                            parts: parts.iter().map(|p| (p.field, p.deriv, p.coeff)).collect(),
                        }) as Arc<dyn DataFn>
                    })
                    .collect::<Vec<_>>();
                let div_parts = &crate::operators::divergence(dim)[0];
                let chi = Arc::new(crate::data::OperatorOnExact {
                    exact: ex.clone(),
                    parts: div_parts
                        .iter()
                        .map(|p| (p.field, p.deriv, p.coeff))
                        .collect(),
                }) as Arc<dyn DataFn>;
                (case_like, chi)
            }
            (None, src) => {
                let src = src.clone().unwrap_or_default();
                let mut f = vec![
                    parse_source("data.f1", &src.f1)?,
                    parse_source("data.f2", &src.f2)?,
                ];
                if dim == 3 {
                    f.push(parse_source("data.f3", &src.f3)?);
                } else if src.f3.is_some() {
                    return Err(schema("data.f3", "f3 given for a 2D problem"));
                }
                (f, parse_source("data.chi", &src.chi)?)
            }
        };
        let gauge = GaugeOptions {
            pressure_mean_target: raw.solve.pressure_mean_target.unwrap_or(0.0),
            ..Default::default()
        };
        // Validate everything once: slots, params, tags, coverage.
        assemble_problem_terms(&decomp, &f, &chi, &bcs, &gauge)?;
        let name = raw
            .problem
            .name
            .clone()
            .unwrap_or_else(|| "custom".to_string());
        ResolvedProblem::Custom(Box::new(CustomProblem {
            name,
            domain,
            bcs,
            f,
            chi,
            exact,
            gauge,
        }))
    };
    Ok(ExperimentConfig {
        problem,
        ws,
        tol: raw.solve.tol,
        max_iterations: raw.solve.max_iterations,
        report_cadence: raw.solve.report_cadence.unwrap_or(0),
        out_dir,
        raw,
    })
}

/// Serialize a raw config back to TOML (round-trip partner of
/// [`parse_config`]).
pub fn emit_config(raw: &RawConfig) -> String {
    toml::to_string_pretty(raw).expect("config serializes")
}
