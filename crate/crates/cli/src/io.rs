//! Inputs, outputs and their fingerprints.

use std::path::{Path, PathBuf};

use ldl_core::linalg::{eye, CMat};
use ldl_core::model::{demo_model, parse_model, write_model, DemoModel, Model};
use ldl_core::C64;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{DemoName, ModelSource, Rho0Preset, StateSource};
use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// What a run read, recorded in the manifest.
#[derive(Debug, Clone)]
pub struct InputRecord {
    pub role: &'static str,
    pub origin: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn to_json(&self) -> Value {
        json!({ "role": self.role, "origin": self.origin, "sha256": self.sha256 })
    }
}

#[derive(Debug, Clone)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl OutputRecord {
    pub fn to_json(&self) -> Value {
        json!({ "path": self.path.display().to_string(), "sha256": self.sha256 })
    }
}

pub fn demo_of(name: DemoName) -> DemoModel {
    match name {
        DemoName::TwoLevel => DemoModel::TwoLevel,
        DemoName::Null => DemoModel::Null,
        DemoName::RankDeficient => DemoModel::RankDeficient,
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Loads the model named by `--model`/`--demo`, falling back to `default`.
pub fn load_model(src: &ModelSource, default: Option<DemoName>) -> CliResult<(Model, InputRecord)> {
    if let Some(path) = &src.model {
        let text = read_text(path)?;
        let model = parse_model(&text).map_err(|e| match e {
            ldl_core::Error::Parse { line, message } => {
                CliError::Usage(format!("{}:{line}: {message}", path.display()))
            }
            other => other.into(),
        })?;
        let rec = InputRecord { role: "model", origin: path.display().to_string(), sha256: sha256_hex(text.as_bytes()) };
        return Ok((model, rec));
    }
    let name = src.demo.or(default).ok_or_else(|| CliError::Usage("one of --model or --demo is required".into()))?;
    let which = demo_of(name);
    let model = demo_model(which);
    let text = write_model(&model);
    Ok((model, InputRecord { role: "model", origin: format!("demo:{}", which.name()), sha256: sha256_hex(text.as_bytes()) }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    rho: Vec<[f64; 2]>,
}

pub fn preset_state(preset: Rho0Preset, d: usize) -> CMat {
    match preset {
        Rho0Preset::Ground => ldl_core::linalg::matrix_unit(d, 0, 0),
        Rho0Preset::Top => ldl_core::linalg::matrix_unit(d, d - 1, d - 1),
        Rho0Preset::Mixed => eye(d) / C64::new(d as f64, 0.0),
        Rho0Preset::Superposition => CMat::from_element(d, d, C64::new(1.0 / d as f64, 0.0)),
    }
}

pub fn load_state(src: &StateSource, d: usize) -> CliResult<(CMat, InputRecord)> {
    let Some(path) = &src.rho0 else {
        let rho = preset_state(src.rho0_preset, d);
        let origin = format!("preset:{:?}", src.rho0_preset).to_lowercase();
        let digest = sha256_hex(origin.as_bytes());
        return Ok((rho, InputRecord { role: "rho0", origin, sha256: digest }));
    };
    let text = read_text(path)?;
    let raw: RawState =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
    if raw.rho.len() != d * d {
        return Err(CliError::Usage(format!(
            "{}: rho has {} entries, the model needs {d}x{d} = {}",
            path.display(),
            raw.rho.len(),
            d * d
        )));
    }
    let rho = CMat::from_row_iterator(d, d, raw.rho.iter().map(|p| C64::new(p[0], p[1])));
    Ok((rho, InputRecord { role: "rho0", origin: path.display().to_string(), sha256: sha256_hex(text.as_bytes()) }))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<OutputRecord> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(OutputRecord { path: path.to_path_buf(), sha256: sha256_hex(text.as_bytes()) })
}

pub fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialise");
    s.push('\n');
    s
}

/// Writes JSON to `path`, or to stdout when there is none.
pub fn emit_json(path: Option<&Path>, value: &Value) -> CliResult<Vec<OutputRecord>> {
    let text = json_text(value);
    match path {
        Some(p) => Ok(vec![write_text(p, &text)?]),
        None => {
            print!("{text}");
            Ok(Vec::new())
        }
    }
}

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn csv_row(fields: impl IntoIterator<Item = String>) -> String {
    let mut s = fields.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}
