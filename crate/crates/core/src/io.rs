//! CSV ingestion of series and the JSON dataset manifest.
//!
//! A series file is a rectangular numeric CSV, one row per time point and one
//! column per grid point, with no header unless requested. Values are written
//! with Rust's shortest round-trip float formatting, so `load(save(x)) == x`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fts::{FunctionalTimeSeries, Grid};

pub fn parse_csv(text: &str, has_header: bool) -> Result<FunctionalTimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut values = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            col: None,
            msg: e.to_string(),
        })?;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    col: None,
                    msg: format!("ragged row: expected {w} columns, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                col: Some(j + 1),
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col: Some(j + 1),
                    msg: format!("non-finite cell {cell:?}"),
                });
            }
            values.push(v);
        }
    }
    let p = width.ok_or_else(|| Error::Parse {
        row: 0,
        col: None,
        msg: "no rows".into(),
    })?;
    let grid = Grid::uniform(p).map_err(|e| Error::Parse {
        row: 1,
        col: None,
        msg: e.to_string(),
    })?;
    FunctionalTimeSeries::new(values, grid)
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<FunctionalTimeSeries> {
    parse_csv(&fs::read_to_string(path)?, has_header)
}

pub fn to_csv_string(x: &FunctionalTimeSeries) -> String {
    let mut out = String::with_capacity(x.values().len() * 20);
    for row in x.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn save_csv(x: &FunctionalTimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(to_csv_string(x).as_bytes())?;
    Ok(())
}

/// Row-per-line CSV for a plain matrix.
pub fn matrix_to_csv(rows: impl IntoIterator<Item = impl AsRef<[f64]>>) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub series: Vec<ManifestEntry>,
}

/// A collection of series loaded through a manifest.
#[derive(Debug, Clone)]
pub struct Collection {
    pub ids: Vec<String>,
    pub labels: Vec<Option<String>>,
    pub series: Vec<FunctionalTimeSeries>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Loads every series; relative paths resolve against `base`.
    pub fn load_collection(&self, base: &Path, has_header: bool) -> Result<Collection> {
        let mut out = Collection {
            ids: Vec::new(),
            labels: Vec::new(),
            series: Vec::new(),
        };
        for (i, entry) in self.series.iter().enumerate() {
            let path = resolve(base, &entry.path);
            let x = load_csv(&path, has_header).map_err(|e| e.in_series(i))?;
            out.ids.push(entry.id.clone());
            out.labels.push(entry.label.clone());
            out.series.push(x);
        }
        Ok(out)
    }
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a manifest file and all series it lists.
pub fn load_manifest_collection(manifest: impl AsRef<Path>, has_header: bool) -> Result<Collection> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    Manifest::load(manifest)?.load_collection(base, has_header)
}
