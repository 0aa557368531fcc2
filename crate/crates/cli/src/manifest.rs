//! Run manifests and the artifact writer that records a hash for every file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use dhym_core::torus::io::{sha256_hex, write_scalar};
use dhym_core::PotentialField;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SolverFailure,
    AuditFailure,
    ConfigError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::SolverFailure => 2,
            Status::AuditFailure => 3,
            Status::ConfigError => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: Status,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub dhym_core: String,
    pub dhym_cli: String,
    pub manifest_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            dhym_core: dhym_core::VERSION.into(),
            dhym_cli: env!("CARGO_PKG_VERSION").into(),
            manifest_format: MANIFEST_FORMAT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// SHA-256 of the canonical configuration.
    pub run_id: String,
    pub mode: Option<String>,
    pub status: Status,
    pub exit_code: i32,
    pub failure: Option<Failure>,
    /// The configuration as read, or `null` when it could not be parsed.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub versions: Versions,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn read(run_dir: &Path) -> anyhow::Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("no manifest at {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, run_dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(run_dir)?;
        fs::write(run_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Writes files under a run directory and remembers their hashes.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<Artifact>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.entries.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.record(rel, bytes);
        Ok(())
    }

    pub fn csv<R: Serialize>(&mut self, rel: &str, rows: &[R]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner()?;
        self.bytes(rel, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> anyhow::Result<()> {
        self.bytes(rel, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
    }

    /// `<stem>.bin` plus its sidecar, both recorded.
    pub fn field(&mut self, stem: &str, field: &PotentialField) -> anyhow::Result<()> {
        let path = self.dir.join(stem);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let sidecar = write_scalar(&path, field)?;
        self.entries.push(Artifact {
            path: format!("{stem}.bin"),
            sha256: sidecar.sha256,
        });
        let json = fs::read(path.with_extension("json"))?;
        self.record(&format!("{stem}.json"), &json);
        Ok(())
    }

    pub fn into_entries(self) -> Vec<Artifact> {
        self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::SolverFailure.exit_code(), 2);
        assert_eq!(Status::AuditFailure.exit_code(), 3);
        assert_eq!(Status::ConfigError.exit_code(), 4);
    }

    #[test]
    fn csv_artifacts_are_hashed() {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            k: f64,
        }
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        a.csv("x.csv", &[Row { t: 1.0, k: 0.5 }]).unwrap();
        let bytes = fs::read(dir.path().join("x.csv")).unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "t,k\n1.0,0.5\n");
        assert_eq!(a.into_entries()[0].sha256, sha256_hex(&bytes));
    }
}
