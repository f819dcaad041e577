//! Result persistence: CSV tables with a JSON sidecar echoing the run
//! configuration, seed and tool version.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dist::Sample;
use crate::error::{MddError, Result};

/// Tool name and version recorded with every output.
pub fn version_string() -> String {
    format!("mdd v{}", env!("CARGO_PKG_VERSION"))
}

/// Provenance written next to each result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl RunMeta {
    pub fn new<C: Serialize>(experiment: &str, seed: u64, config: &C) -> Result<Self> {
        Ok(Self {
            experiment: experiment.into(),
            version: version_string(),
            seed,
            config: serde_json::to_value(config)?,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MddError + '_ {
    move |source| MddError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> MddError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => MddError::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => MddError::Config(format!("{}: {kind:?}", path.display())),
    }
}

/// Writes `rows` under an explicit header, so empty tables still get one.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Reads observations from the first column of a CSV file. A first row that
/// does not parse as a number is treated as a header.
pub fn read_sample(path: &Path) -> Result<Sample> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(MddError::Config(format!(
                    "{}: row {}: `{field}` is not a number",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(Sample::new(values))
}

/// Reads a JSON document.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| MddError::Config(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `<stem>.csv` and `<stem>.meta.json`; returns both paths.
pub fn emit_results<T: Serialize>(
    stem: &Path,
    header: &[&str],
    rows: &[T],
    meta: &RunMeta,
) -> Result<(PathBuf, PathBuf)> {
    let csv_path = stem.with_extension("csv");
    let meta_path = stem.with_extension("meta.json");
    write_csv(&csv_path, header, rows)?;
    write_json(&meta_path, meta)?;
    Ok((csv_path, meta_path))
}
