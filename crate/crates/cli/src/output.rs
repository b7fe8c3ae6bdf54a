//! Artifact writer. Everything goes through one serializer in a fixed
//! order, so identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use refsde_core::path::write_path_csv;
use refsde_core::StepPath;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

pub struct Artifacts {
    dir: PathBuf,
    config_hash: String,
    written: Vec<ArtifactEntry>,
}

pub fn fmt_f64(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

impl Artifacts {
    pub fn new(dir: &Path, config_hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config_hash,
            written: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(ArtifactEntry {
            file: name.into(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn path_csv(&mut self, name: &str, path: &StepPath, meta: &[(&str, String)]) -> Result<(), CliError> {
        let mut all = vec![("config_hash", self.config_hash.clone())];
        all.extend(meta.iter().cloned());
        let mut buf = Vec::new();
        write_path_csv(path, &mut buf, &all).map_err(|e| CliError::Io(e.to_string()))?;
        self.put(name, buf)
    }

    /// CSV table with a leading `# config_hash=` line.
    pub fn table_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = format!("# config_hash={}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let err = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(header).map_err(err)?;
            for r in rows {
                w.write_record(r).map_err(err)?;
            }
            w.flush()?;
        }
        self.put(name, buf)
    }

    /// Pretty JSON object carrying a `config_hash` key.
    pub fn json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(obj)).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    /// Writes `manifest.json` and returns the artifact list.
    pub fn finish(mut self, cfg: &ExperimentConfig, summary: Value) -> Result<Vec<ArtifactEntry>, CliError> {
        let manifest = json!({
            "tool": "refsde",
            "versions": {
                "refsde-cli": env!("CARGO_PKG_VERSION"),
                "refsde-core": refsde_core::VERSION,
            },
            "kind": cfg.kind,
            "seed": cfg.seed,
            "paths": cfg.paths,
            "config": cfg,
            "artifacts": self.written,
            "summary": summary,
        });
        self.json("manifest.json", manifest)?;
        Ok(self.written)
    }
}
