//! Report envelope, provenance and file output.

use std::fs;
use std::path::{Path, PathBuf};

use hk_core::constitutive::Tensor4;
use hk_core::fields::dump::{format_value, write_field};
use hk_core::fields::{Grid, NodalField};
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;

pub const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");
pub const REPORT_VERSION: u32 = 1;

pub fn provenance(cfg: &Config) -> Value {
    let o = &cfg.options;
    json!({
        "tool": concat!("hk ", env!("CARGO_PKG_VERSION")),
        "config_sha256": cfg.sha256,
        "cell_n": cfg.cell.n(),
        "fine_m": cfg.m,
        "domain": cfg.domain,
        "fine_grids": cfg.ladder.iter().map(|e| e.cells() * cfg.m).collect::<Vec<_>>(),
        "ladder": cfg.ladder.iter().map(|e| e.value()).collect::<Vec<_>>(),
        "tolerances": {
            "tol": o.tol,
            "max_newton": o.max_newton,
            "max_picard": o.max_picard,
            "max_linear": o.max_linear,
        },
        "variant": cfg.variant.name(),
        "seed": cfg.seed,
    })
}

pub fn envelope(command: &str, cfg: &Config, results: Value) -> Value {
    json!({
        "report_version": REPORT_VERSION,
        "command": command,
        "provenance": provenance(cfg),
        "config": cfg.resolved,
        "results": results,
    })
}

/// `t[i][j][k][l]` as nested arrays.
pub fn tensor_json(t: &Tensor4) -> Value {
    let mut out = Vec::new();
    for i in 0..2 {
        let mut a = Vec::new();
        for j in 0..2 {
            let mut b = Vec::new();
            for k in 0..2 {
                b.push((0..2).map(|l| t.get(i, j, k, l)).collect::<Vec<_>>());
            }
            a.push(b);
        }
        out.push(a);
    }
    json!(out)
}

/// Violations of the shipped report schema as `(pointer, message)`.
pub fn report_errors(report: &Value) -> Vec<(String, String)> {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("shipped schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    validator
        .iter_errors(report)
        .map(|e| (e.instance_path().as_str().to_string(), e.to_string()))
        .collect()
}

/// Serialized outputs are collected first and written in one place so that
/// file writes happen sequentially and in a fixed order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: String) -> String {
        let name = name.into();
        self.files.push((name.clone(), contents));
        name
    }

    pub fn add_field<G: Grid>(&mut self, name: &str, f: &NodalField<G>) -> String {
        let mut buf = Vec::new();
        write_field(&mut buf, name, f).expect("writing to memory");
        self.add(format!("{name}.txt"), String::from_utf8(buf).expect("ascii output"))
    }

    pub fn add_json(&mut self, name: &str, v: &Value) -> String {
        let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
        s.push('\n');
        self.add(name, s)
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(CliError::io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// CSV cell with 17 significant digits.
pub fn csv_value(v: f64) -> String {
    format_value(v)
}
