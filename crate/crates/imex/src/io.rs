//! Comma-separated tables with a one-line header. Floats are written in
//! Rust's shortest round-trip form, so reading a file back gives the exact
//! values that were written.

use std::fs::File;
use std::path::Path;

use imex_core::{GridFunction, GridSpec};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_table(path: &Path, table: &Table) -> CliResult<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.headers).map_err(|e| io_error(path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    let headers = r
        .headers()
        .map_err(|e| io_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut table = Table {
        headers,
        rows: Vec::new(),
    };
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| io_error(path, e))?;
        let row = record
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| io_error(path, format!("row {}: `{v}` is not a number", i + 1)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        table.rows.push(row);
    }
    Ok(table)
}

/// Samples of an initial condition from an `x,u` table.
pub fn read_samples(path: &Path, spec: GridSpec) -> CliResult<GridFunction> {
    let table = read_table(path).map_err(|e| CliError::Config(e.to_string()))?;
    let u = table
        .column("u")
        .ok_or_else(|| CliError::Config(format!("{}: no `u` column", path.display())))?;
    Ok(GridFunction::new(spec, u)?)
}

pub fn write_samples(path: &Path, f: &GridFunction) -> CliResult<()> {
    let mut table = Table::new(["x", "u"]);
    for (x, &u) in f.spec().nodes().zip(f.samples()) {
        table.push(vec![x, u]);
    }
    write_table(path, &table)
}

/// One row per time node, `t` then one column per grid node.
pub fn iterate_table(times: &[f64], iterates: &[GridFunction]) -> Table {
    let spec = iterates[0].spec();
    let mut table = Table::new(
        std::iter::once("t".to_string()).chain(spec.nodes().map(|x| format!("u(x={x})"))),
    );
    for (&t, f) in times.iter().zip(iterates) {
        let mut row = Vec::with_capacity(f.samples().len() + 1);
        row.push(t);
        row.extend_from_slice(f.samples());
        table.push(row);
    }
    table
}
