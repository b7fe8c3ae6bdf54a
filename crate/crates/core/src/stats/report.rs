//! Serializable experiment reports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub n: Option<f64>,
    pub mesh: Option<f64>,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub pass: bool,
    pub samples: usize,
    /// Enough to regenerate the entry, e.g. `seed=7;paths=1000`.
    pub key: String,
}

/// One row of a convergence table indexed by `(n, mesh)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: f64,
    pub mesh: f64,
    #[serde(rename = "M")]
    pub paths: usize,
    pub statistic: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub params: SchemeParams,
    pub entries: Vec<ReportEntry>,
    pub table: Vec<ConvergenceRow>,
}

pub fn repro_key(seed: u64, paths: usize) -> String {
    format!("seed={seed};paths={paths}")
}

fn fmt(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

impl ExperimentReport {
    pub fn new(params: SchemeParams) -> Self {
        Self {
            params,
            entries: Vec::new(),
            table: Vec::new(),
        }
    }

    pub fn push_entry(&mut self, name: &str, value: f64, threshold: Option<f64>, pass: bool, samples: usize) {
        let key = repro_key(self.params.seed, samples);
        self.entries.push(ReportEntry {
            name: name.into(),
            value,
            threshold,
            pass,
            samples,
            key,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass) && self.table.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Writes the table with columns `n,mesh,M,statistic,value,threshold,pass`.
    pub fn write_table_csv<W: Write>(&self, w: W) -> Result<()> {
        let err = |e: csv::Error| Error::Csv(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "mesh", "M", "statistic", "value", "threshold", "pass"])
            .map_err(err)?;
        for r in &self.table {
            out.write_record([
                fmt(r.n),
                fmt(r.mesh),
                r.paths.to_string(),
                r.statistic.clone(),
                fmt(r.value),
                r.threshold.map(fmt).unwrap_or_default(),
                r.pass.to_string(),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}
