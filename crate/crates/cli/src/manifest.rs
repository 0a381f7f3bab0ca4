//! Run manifests. Everything that depends on the wall clock lives under the
//! `timing` key, so two identical runs differ only there.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::error::CliResult;
use crate::io::{json_text, write_text, InputRecord, OutputRecord};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// A command without a pass/fail criterion finished.
    Done,
    Pass,
    Fail,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Done => "OK",
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Result of one subcommand.
#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub seed: Option<u64>,
    pub summary: Value,
}

pub struct Clock {
    started: SystemTime,
    instant: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Self { started: SystemTime::now(), instant: Instant::now() }
    }

    fn timing(&self) -> Value {
        let unix_ms = self.started.duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        json!({ "started_unix_ms": unix_ms, "wall_seconds": self.instant.elapsed().as_secs_f64() })
    }
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub argv: &'a [String],
    pub threads: Option<usize>,
}

pub fn manifest_value(info: &RunInfo, outcome: Result<&Outcome, String>, clock: &Clock) -> Value {
    let versions = json!({ "ldl-cli": env!("CARGO_PKG_VERSION"), "ldl-core": ldl_core::VERSION });
    let mut m = json!({
        "manifest_version": MANIFEST_VERSION,
        "command": info.command,
        "argv": info.argv,
        "threads": info.threads,
        "versions": versions,
        "timing": clock.timing(),
    });
    let obj = m.as_object_mut().expect("manifest is an object");
    match outcome {
        Ok(o) => {
            obj.insert("verdict".into(), json!(o.verdict.label()));
            obj.insert("seed".into(), json!(o.seed));
            obj.insert("inputs".into(), Value::Array(o.inputs.iter().map(InputRecord::to_json).collect()));
            obj.insert("outputs".into(), Value::Array(o.outputs.iter().map(OutputRecord::to_json).collect()));
            obj.insert("summary".into(), o.summary.clone());
        }
        Err(message) => {
            obj.insert("verdict".into(), json!("ERROR"));
            obj.insert("error".into(), json!(message));
        }
    }
    m
}

pub fn write_manifest(path: &Path, value: &Value) -> CliResult<()> {
    write_text(path, &json_text(value)).map(|_| ())
}

/// `<out>.manifest.json` next to an output file.
pub fn beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
