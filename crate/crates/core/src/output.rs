//! CSV and manifest writers.
//!
//! Reals are written with 17 significant digits so equal runs give
//! byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{QPolicyError, Result};
use crate::experiments::SeedRun;
use crate::mdp::format_f64;

pub const RECORD_HEADER: [&str; 7] = [
    "iteration",
    "bellman_error_max",
    "bellman_error_mean",
    "q_variance",
    "queries_iteration",
    "queries_cumulative",
    "seed",
];

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn csv_error(e: impl std::fmt::Display) -> QPolicyError {
    QPolicyError::Serialization(e.to_string())
}

/// Builds a CSV document from a header and string rows.
pub fn csv_string<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

pub fn fmt_real(x: f64) -> String {
    format_f64(x)
}

/// One row per iteration per seed, in the given run order.
pub fn records_csv(runs: &[SeedRun]) -> Result<String> {
    csv_string(
        &RECORD_HEADER,
        runs.iter().flat_map(|run| {
            run.records.iter().map(move |r| {
                vec![
                    r.iteration.to_string(),
                    fmt_real(r.bellman_error_max),
                    fmt_real(r.bellman_error_mean),
                    fmt_real(r.q_variance),
                    r.queries_iteration.to_string(),
                    r.queries_cumulative.to_string(),
                    run.seed.to_string(),
                ]
            })
        }),
    )
}

/// Provenance written next to every study's CSV files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub study: String,
    pub environment: serde_json::Value,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub version: String,
}

impl Manifest {
    pub fn new(study: &str, environment: serde_json::Value, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            study: study.to_string(),
            environment,
            config,
            seeds,
            version: format!("qpolicy {}", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
