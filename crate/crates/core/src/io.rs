//! File formats and run manifests.
//!
//! CSV schemas (version [`SCHEMA_VERSION`]):
//! - path: `k,x,y` with `k = -1` for the axis point
//! - driving: `t,xi`
//! - trace: `t,x,y`
//! - continuous run: `t,xi,u,X,dyJ`
//! - field: `x,y,value`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::continuous::StepRecord;
use crate::error::Result;
use crate::geom::C64;
use crate::loewner::DrivingFunction;
use crate::rng::RNG_ALGORITHM;

pub const SCHEMA_VERSION: u32 = 1;

pub fn path_csv(points: &[C64]) -> String {
    let mut s = String::from("k,x,y\n");
    for (k, p) in points.iter().enumerate() {
        let _ = writeln!(s, "{},{:.17e},{:.17e}", k as i64 - 1, p.re, p.im);
    }
    s
}

pub fn driving_csv(d: &DrivingFunction) -> String {
    let mut s = String::from("t,xi\n");
    for (t, x) in d.t.iter().zip(&d.xi) {
        let _ = writeln!(s, "{t:.17e},{x:.17e}");
    }
    s
}

/// Trace points with their capacity times (`t` aligned with `points`).
pub fn trace_csv(t: &[f64], points: &[C64]) -> String {
    let mut s = String::from("t,x,y\n");
    for (t, p) in t.iter().zip(points) {
        let _ = writeln!(s, "{t:.17e},{:.17e},{:.17e}", p.re, p.im);
    }
    s
}

pub fn steps_csv(records: &[StepRecord]) -> String {
    let mut s = String::from("t,xi,u,X,dyJ\n");
    for r in records {
        let _ = writeln!(s, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", r.t, r.xi, r.u, r.x, r.dyj);
    }
    s
}

pub fn domain_hash(domain_json: &str) -> String {
    let digest = Sha256::digest(domain_json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything needed to replay a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub replicas: usize,
    pub code_version: String,
    pub rng: String,
    pub schema_version: u32,
    pub domain_sha256: Option<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub pass: Option<bool>,
    pub summary: Value,
}

/// Output directory plus the manifest under construction.
pub struct RunDir {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    started: Instant,
}

impl RunDir {
    pub fn create(dir: impl AsRef<Path>, command: &str, config: Value, seed: Option<u64>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(RunDir {
            dir,
            manifest: RunManifest {
                command: command.to_string(),
                config,
                seed,
                replicas: 0,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                rng: RNG_ALGORITHM.to_string(),
                schema_version: SCHEMA_VERSION,
                domain_sha256: None,
                wall_time_s: 0.0,
                outputs: Vec::new(),
                pass: None,
                summary: Value::Null,
            },
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        fs::write(&p, contents)?;
        self.manifest.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, &text)
    }

    /// Write `manifest.json` last.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(self.manifest)
    }
}
