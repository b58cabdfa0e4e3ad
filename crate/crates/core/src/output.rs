//! Deterministic CSV and JSON writers and the run directory layout
//! `<root>/<name>/{config.resolved, fields_*.csv, diagnostics.csv, summary.json}`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::solver::{FieldState, Grid};

/// Environment variable naming the output root; `runs` otherwise.
pub const OUTPUT_ROOT_ENV: &str = "NSAC_OUTPUT_ROOT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

/// Shortest round-trip formatting, so identical numbers give identical bytes.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // fold -0 into 0
        "0".to_string()
    } else {
        format!("{x:e}")
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{header}")?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let line: Vec<String> = values.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = CsvWriter::create(path, header)?;
    for r in rows {
        w.row(r)?;
    }
    w.finish()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub const FIELDS_HEADER: &str = "t,x,v,u,theta,chi,s,mu";

/// One snapshot of the grid fields with entropy and chemical potential.
pub fn write_fields(path: &Path, grid: &Grid, state: &FieldState, entropy: &[f64], mu: &[f64]) -> Result<()> {
    let mut w = CsvWriter::create(path, FIELDS_HEADER)?;
    for i in 0..grid.n_cells {
        w.row(&[
            state.t,
            grid.x(i),
            state.v[i],
            state.u[i],
            state.theta[i],
            state.chi[i],
            entropy[i],
            mu[i],
        ])?;
    }
    w.finish()
}

/// A run directory; creating it clears stale snapshots from earlier runs.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path, name: &str) -> Result<Self> {
        let path = root.join(name);
        fs::create_dir_all(&path)?;
        for entry in fs::read_dir(&path)? {
            let p = entry?.path();
            let stale = p
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("fields_") && n.ends_with(".csv"));
            if stale {
                fs::remove_file(p)?;
            }
        }
        Ok(RunDir { path })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn fields_path(&self, tick: usize) -> PathBuf {
        self.file(&format!("fields_{tick:05}.csv"))
    }
}
