//! Experiment configuration: schema validation, presets and conversion to
//! solver inputs.

use std::path::PathBuf;

use hk_core::cell::ElectrostrictionVariant;
use hk_core::constitutive::{
    ElasticTensorField, Lame, Mat2, Microstructure, OperatorSpec, StructureConstants, Vec2,
};
use hk_core::fem::SolverOptions;
use hk_core::fields::{CellGrid, Epsilon};
use hk_core::fine::{ScalarSource, VectorSource};
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_SCHEMA: &str = include_str!("../schemas/config.schema.json");

pub const PRESETS: [(&str, &str); 4] = [
    ("laminate-p2", include_str!("../presets/laminate-p2.json")),
    ("laminate-p3", include_str!("../presets/laminate-p3.json")),
    ("checkerboard-p2", include_str!("../presets/checkerboard-p2.json")),
    ("variable-exponent", include_str!("../presets/variable-exponent.json")),
];

pub fn preset(name: &str) -> Option<Value> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| serde_json::from_str(s).expect("shipped presets are valid JSON"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[allow(dead_code)]
    schema_version: u32,
    #[serde(default)]
    #[allow(dead_code)]
    preset: Option<String>,
    operator: RawOperator,
    geometry: RawGeometry,
    #[serde(default)]
    elasticity: Option<RawElasticity>,
    grids: RawGrids,
    ladder: Vec<f64>,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    sources: RawSources,
    #[serde(default)]
    xi: Option<Vec<Vec2>>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct PhasePair<T> {
    matrix: T,
    inclusion: T,
}

#[derive(Debug, Deserialize)]
struct RawOperator {
    family: String,
    p: f64,
    p_matrix: Option<f64>,
    alpha: Option<f64>,
    delta: Option<f64>,
    sigma: Option<PhasePair<f64>>,
    b: Option<PhasePair<Mat2>>,
    constants: Option<StructureConstants>,
}

#[derive(Debug, Deserialize)]
struct RawGeometry {
    kind: String,
    fraction: Option<f64>,
    offset: Option<f64>,
    side: Option<f64>,
    radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawLame {
    lambda: f64,
    mu: f64,
}

#[derive(Debug, Deserialize)]
struct RawElasticity {
    b: PhasePair<RawLame>,
    c: PhasePair<RawLame>,
}

#[derive(Debug, Deserialize)]
struct RawGrids {
    n: usize,
    m: Option<usize>,
    domain: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawTolerances {
    tol: Option<f64>,
    max_newton: Option<usize>,
    max_picard: Option<usize>,
    max_linear: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawSources {
    f: Option<ScalarSource>,
    g: Option<VectorSource>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub spec: OperatorSpec,
    /// `(B, C)` when an elasticity block is present.
    pub elastic: Option<(ElasticTensorField, ElasticTensorField)>,
    pub cell: CellGrid,
    /// Fine-mesh elements per eps-cell.
    pub m: usize,
    /// Elements per side of the homogenized domain grid.
    pub domain: usize,
    pub ladder: Vec<Epsilon>,
    pub options: SolverOptions,
    pub variant: ElectrostrictionVariant,
    pub f: ScalarSource,
    pub g: VectorSource,
    /// Loadings for the `cell` subcommand.
    pub xi: Vec<Vec2>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Hex SHA-256 of the config file bytes.
    pub sha256: String,
    /// The config after preset expansion.
    pub resolved: Value,
}

fn config_error(pointer: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

/// Overlay `top` onto `base`, recursing into objects.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Schema violations as `(pointer, message)`, in schema evaluation order.
pub fn schema_errors(doc: &Value) -> Vec<(String, String)> {
    let schema: Value = serde_json::from_str(CONFIG_SCHEMA).expect("shipped schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    validator
        .iter_errors(doc)
        .map(|e| {
            let mut pointer = e.instance_path().as_str().to_string();
            if let jsonschema::error::ValidationErrorKind::Required { property } = e.kind() {
                if let Some(p) = property.as_str() {
                    pointer.push('/');
                    pointer.push_str(&p.replace('~', "~0").replace('/', "~1"));
                }
            }
            (pointer, e.to_string())
        })
        .collect()
}

impl Config {
    /// Parse, expand the preset named in `"preset"`, validate against the
    /// schema and convert.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        let doc: Value =
            serde_json::from_slice(bytes).map_err(|e| config_error("", format!("not valid JSON: {e}")))?;
        let doc = match doc.get("preset").and_then(Value::as_str) {
            Some(name) => {
                let mut base = preset(name).ok_or_else(|| config_error("/preset", format!("unknown preset {name:?}")))?;
                merge(&mut base, doc);
                base
            }
            None => doc,
        };
        let errors = schema_errors(&doc);
        if let Some((pointer, first)) = errors.first() {
            let mut message = first.clone();
            for (p, m) in &errors[1..] {
                message.push_str(&format!("; {p}: {m}"));
            }
            return Err(config_error(pointer, message));
        }
        let raw: RawConfig = serde_json::from_value(doc.clone()).map_err(|e| config_error("", e.to_string()))?;
        Self::convert(raw, sha256, doc)
    }

    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let doc = preset(name).ok_or_else(|| config_error("/preset", format!("unknown preset {name:?}")))?;
        Self::from_bytes(doc.to_string().as_bytes())
    }

    fn convert(raw: RawConfig, sha256: String, resolved: Value) -> Result<Self, CliError> {
        let geometry = match raw.geometry.kind.as_str() {
            "homogeneous" => Microstructure::Homogeneous,
            "laminate" => {
                let fraction = raw.geometry.fraction.unwrap_or(0.5);
                Microstructure::Laminate {
                    fraction,
                    offset: raw.geometry.offset.unwrap_or(-0.5 * fraction),
                }
            }
            "square-inclusion" => Microstructure::SquareInclusion {
                side: raw.geometry.side.unwrap_or(0.5),
            },
            "disc" => Microstructure::Disc {
                radius: raw.geometry.radius.unwrap_or(0.25),
            },
            _ => Microstructure::Checkerboard,
        };
        let op = &raw.operator;
        let sigma = op.sigma.as_ref();
        let mut spec = match op.family.as_str() {
            "linear-matrix" => {
                if op.p != 2.0 {
                    return Err(config_error("/operator/p", "the linear-matrix family has p = 2"));
                }
                let b = op.b.as_ref().expect("schema requires b");
                OperatorSpec::linear(b.matrix, b.inclusion, geometry)
            }
            "power-law" => {
                let s = sigma.expect("schema requires sigma");
                OperatorSpec::power_law(op.p, s.matrix, s.inclusion, geometry)
            }
            _ => {
                let s = sigma.expect("schema requires sigma");
                let p2 = op.p_matrix.expect("schema requires p_matrix");
                if !(2.0 <= op.p && op.p <= p2) {
                    return Err(config_error(
                        "/operator/p_matrix",
                        format!("variable-exponent needs 2 <= p <= p_matrix, got p = {}, p_matrix = {p2}", op.p),
                    ));
                }
                OperatorSpec::variable_exponent(op.p, p2, s.inclusion, s.matrix, geometry)
            }
        };
        if let Some(a) = op.alpha {
            spec = spec.with_alpha(a);
        }
        if let Some(d) = op.delta {
            spec = spec.with_delta(d);
        }
        if let Some(c) = op.constants {
            spec = spec.with_constants(c);
        }
        spec.validate().map_err(|e| config_error("/operator", e.to_string()))?;

        let elastic = raw.elasticity.map(|el| {
            let field = |p: PhasePair<RawLame>| {
                ElasticTensorField::isotropic(
                    Lame {
                        lambda: p.matrix.lambda,
                        mu: p.matrix.mu,
                    },
                    Lame {
                        lambda: p.inclusion.lambda,
                        mu: p.inclusion.mu,
                    },
                    spec.geometry.clone(),
                )
            };
            (field(el.b), field(el.c))
        });
        if let Some((b, _)) = &elastic {
            b.validate_stiffness().map_err(|e| config_error("/elasticity/b", e.to_string()))?;
        }

        let cell = CellGrid::new(raw.grids.n).map_err(|e| config_error("/grids/n", e.to_string()))?;
        let m = raw.grids.m.unwrap_or(raw.grids.n);
        CellGrid::new(m).map_err(|e| config_error("/grids/m", e.to_string()))?;
        let mut ladder = Vec::with_capacity(raw.ladder.len());
        for (i, e) in raw.ladder.iter().enumerate() {
            ladder.push(Epsilon::new(*e).map_err(|err| config_error(&format!("/ladder/{i}"), err.to_string()))?);
        }
        if !ladder.windows(2).all(|w| w[1].cells() > w[0].cells()) {
            return Err(config_error("/ladder", "eps values must be strictly decreasing"));
        }
        let finest = ladder.last().expect("schema requires a non-empty ladder").cells();
        let domain = raw.grids.domain.unwrap_or(raw.grids.n * finest);
        if domain < 2 {
            return Err(config_error("/grids/domain", "need at least 2 elements per side"));
        }

        let defaults = SolverOptions::default();
        let t = raw.tolerances;
        let options = SolverOptions {
            tol: t.tol.unwrap_or(defaults.tol),
            max_newton: t.max_newton.unwrap_or(defaults.max_newton),
            max_picard: t.max_picard.unwrap_or(defaults.max_picard),
            max_linear: t.max_linear.unwrap_or(defaults.max_linear),
        };
        let variant = match raw.variant.as_deref() {
            Some("as-written") => ElectrostrictionVariant::AsWritten,
            Some("c-applied") => ElectrostrictionVariant::CApplied,
            _ => ElectrostrictionVariant::TwoScale,
        };
        Ok(Config {
            spec,
            elastic,
            cell,
            m,
            domain,
            ladder,
            options,
            variant,
            f: raw.sources.f.unwrap_or_default(),
            g: raw.sources.g.unwrap_or_default(),
            xi: raw.xi.unwrap_or_else(|| vec![[1.0, 0.0], [0.0, 1.0]]),
            seed: raw.seed,
            output: raw.output,
            sha256,
            resolved,
        })
    }
}
