//! Run directories and matrix files.

use std::path::{Path, PathBuf};

use anyhow::Context;
use nalgebra::DMatrix;
use serde::Serialize;

/// Writes a dense matrix as headerless CSV, one row per line.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> anyhow::Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in r.records() {
        let row = record?
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("value {v:?} in {}", path.display()))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    anyhow::ensure!(
        rows.iter().all(|r| r.len() == ncols),
        "ragged matrix in {}",
        path.display()
    );
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// An output directory that remembers what was written into it.
#[derive(Debug)]
pub struct RunDir {
    pub path: PathBuf,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    outputs: &'a [String],
}

impl RunDir {
    pub fn create(path: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let path = path.into();
        std::fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RunDir {
            path,
            outputs: Vec::new(),
        })
    }

    /// Path for a new output file, recorded in the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.path.join(name)
    }

    pub fn write_manifest<C: Serialize>(&self, command: &str, config: &C) -> anyhow::Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            outputs: &self.outputs,
        };
        write_json(&self.path.join("manifest.json"), &manifest)
    }
}
