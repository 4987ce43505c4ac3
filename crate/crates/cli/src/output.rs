//! Artifact writing: CSV tables, `CBF1` field dumps and a hashed manifest.

use std::fs;
use std::path::{Path, PathBuf};

use cbf_core::diagnostics::BoundReport;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::run::{Outcome, Table};

pub const MANIFEST: &str = "manifest.txt";

/// CSV bytes with a header row, CRLF line ends and minimal quoting.
pub fn table_bytes(t: &Table) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

pub fn reports_table(reports: &[BoundReport]) -> Table {
    let mut t = Table::new("reports", &BoundReport::CSV_HEADER);
    for r in reports {
        t.push(r.csv_fields().to_vec());
    }
    t
}

pub fn summary_table(summary: &[(String, String)]) -> Table {
    let mut t = Table::new("summary", &["key", "value"]);
    for (k, v) in summary {
        t.push(vec![k.clone(), v.clone()]);
    }
    t
}

/// Every artifact of `out` as `(file name, bytes)`, manifest excluded.
pub fn artifacts(out: &Outcome, config_text: &str) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = vec![
        ("config.ini".to_string(), config_text.as_bytes().to_vec()),
        ("series.csv".to_string(), table_bytes(&out.series)?),
        ("reports.csv".to_string(), table_bytes(&reports_table(&out.reports))?),
        ("summary.csv".to_string(), table_bytes(&summary_table(&out.summary))?),
    ];
    for t in &out.tables {
        files.push((format!("{}.csv", t.name), table_bytes(t)?));
    }
    for (name, field) in &out.fields {
        let mut buf = Vec::new();
        field.write_cbf1(&mut buf)?;
        files.push((format!("{name}.cbf1"), buf));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    if files.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Missing("two artifacts share a file name".into()));
    }
    Ok(files)
}

/// `<sha256>  <name>` per artifact, sorted by name.
pub fn manifest(files: &[(String, Vec<u8>)]) -> String {
    let mut lines: Vec<String> =
        files.iter().map(|(name, bytes)| format!("{}  {name}", hex::encode(Sha256::digest(bytes)))).collect();
    lines.sort_by(|a, b| a[66..].cmp(&b[66..]));
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}

/// Writes all artifacts and the manifest into `dir`. On failure every file
/// written by this call is removed again.
pub fn write_outputs(out: &Outcome, config_text: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut files = artifacts(out, config_text)?;
    let m = manifest(&files);
    files.push((MANIFEST.to_string(), m.into_bytes()));
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        let path = dir.join(name);
        if let Err(source) = fs::write(&path, bytes) {
            written.push(path.clone());
            remove_all(&written);
            return Err(CliError::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}
