use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

/// An assertable check with its declared tolerance and the invariant it
/// instantiates.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub check: String,
    pub invariant: String,
    pub tolerance: f64,
    pub status: Status,
    pub detail: String,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

impl Verdict {
    pub fn new(check: &str, invariant: &str, tolerance: f64, pass: bool, detail: String) -> Self {
        Verdict {
            check: check.into(),
            invariant: invariant.into(),
            tolerance,
            status: if pass { Status::Pass } else { Status::Fail },
            detail,
        }
    }
}

/// A CSV table written next to the JSON report as `<stem>.<suffix>.csv`.
#[derive(Clone, Debug)]
pub struct Table {
    pub suffix: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(suffix: &'static str, header: &[&'static str]) -> Self {
        Table {
            suffix,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct TaskOutput {
    pub payload: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
}

#[derive(Serialize)]
pub struct ReportEnvelope<'a> {
    pub version: &'static str,
    pub task: &'static str,
    pub config: &'a ExperimentConfig,
    pub payload: &'a serde_json::Value,
    pub verdicts: &'a [Verdict],
    /// Kept last so that everything before it is reproducible byte for byte.
    pub wall_clock_seconds: f64,
}

impl ReportEnvelope<'_> {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Pass)
    }
}

pub fn write_outputs(
    dir: &Path,
    stem: &str,
    envelope: &ReportEnvelope,
    tables: &[Table],
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json = dir.join(format!("{stem}.report.json"));
    let mut text = serde_json::to_string_pretty(envelope).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(&json, text)?;
    written.push(json);
    for t in tables {
        let path = dir.join(format!("{stem}.{}.csv", t.suffix));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&t.header)?;
        for r in &t.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
