//! Result files: CSV, JSON, manifests and timing logs.
//!
//! CSV and JSON outputs hold only quantities that are a pure function of the
//! configuration, so reruns reproduce them byte for byte. Wall times go to a
//! separate `timings.log`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tpp_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::curves::csv_err;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Appends tab-separated `label  seconds` lines.
pub fn write_timings(path: &Path, entries: &[(String, f64)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (label, secs) in entries {
        writeln!(f, "{label}\t{secs:.3}")?;
    }
    Ok(())
}

/// What is needed to rerun an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    /// SHA-256 of the canonical configuration JSON.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    /// Extra arguments of the command, such as sample sizes or node counts.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub arguments: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, arguments: serde_json::Value) -> Self {
        let canonical = cfg.canonical_json();
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config_hash(&canonical),
            seeds: cfg.seeds.clone(),
            config: serde_json::from_str(&canonical).expect("canonical JSON parses"),
            arguments,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelName;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::table1_preset(ModelName::ExpHawkes).unwrap();
        let mut b = a.clone();
        assert_eq!(Manifest::new("x", &a, serde_json::Value::Null).config_hash, Manifest::new("x", &b, serde_json::Value::Null).config_hash);
        b.seeds = vec![5];
        assert_ne!(config_hash(&a.canonical_json()), config_hash(&b.canonical_json()));
        assert_eq!(config_hash("").len(), 64);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        #[derive(Serialize)]
        struct Row {
            a: u32,
            b: Option<f64>,
        }
        let p = dir.path().join("r.csv");
        write_csv(&p, &[Row { a: 1, b: Some(0.5) }, Row { a: 2, b: None }]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1,0.5\n2,\n");
    }
}
