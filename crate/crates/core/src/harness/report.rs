use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::lqg::SeibergReport;
use crate::stats::Estimate;

/// Where a number came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    pub provenance: Provenance,
}

impl EstimateRecord {
    pub fn exact(name: impl Into<String>, value: f64, provenance: &Provenance) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: 0.0,
            replicas: 0,
            oracle: None,
            z_score: None,
            provenance: provenance.clone(),
        }
    }

    pub fn from_estimate(name: impl Into<String>, e: &Estimate, provenance: &Provenance) -> Self {
        Self {
            name: name.into(),
            value: e.value,
            std_error: e.std_error.max(0.0),
            replicas: e.replicas,
            oracle: None,
            z_score: None,
            provenance: provenance.clone(),
        }
    }

    /// Attaches an oracle; the z-score is set only when there is an error bar.
    pub fn with_oracle(mut self, oracle: f64) -> Self {
        self.oracle = Some(oracle);
        if self.std_error > 0.0 {
            self.z_score = Some((self.value - oracle) / self.std_error);
        }
        self
    }
}

/// Wall-clock data, excluded from the canonical form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub replicas: usize,
    pub params: ExperimentConfig,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seiberg_report: Option<SeibergReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    pub estimates: Vec<EstimateRecord>,
    pub details: serde_json::Value,
    pub timestamp: Timestamp,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The report JSON with the `timestamp` field removed.
pub fn canonical_json(report_json: &str) -> Result<String> {
    let mut v: serde_json::Value = serde_json::from_str(report_json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timestamp");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

/// A CSV file written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvSeries {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvSeries {
    pub fn new(file: impl Into<String>, header: &[&str]) -> Self {
        Self {
            file: file.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub extra: serde_json::Value,
    pub timestamp: Timestamp,
}
