//! CSV tables with a fixed schema, and the JSON run manifest.
//!
//! Floats are written with Rust's `Display`, the shortest decimal that
//! round-trips, with `.` as separator whatever the locale. A missing
//! value is written as `NA`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::ExperimentConfig;

pub const NA: &str = "NA";

/// Manifest schema tag; bump on incompatible changes.
pub const MANIFEST_SCHEMA: &str = "daemonic-run-manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Float,
    /// A float that may be `NA`.
    OptionalFloat,
    Int,
    Bool,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub ty: ColumnType,
}

pub const fn col(name: &'static str, ty: ColumnType) -> Column {
    Column { name, ty }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Na,
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Na, Cell::Float)
    }

    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x}"),
            Cell::Na => NA.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn fits(&self, ty: ColumnType) -> bool {
        match (self, ty) {
            (Cell::Float(x), ColumnType::Float | ColumnType::OptionalFloat) => x.is_finite(),
            (Cell::Na, ColumnType::OptionalFloat) => true,
            (Cell::Int(_), ColumnType::Int) | (Cell::Bool(_), ColumnType::Bool) => true,
            (Cell::Text(s), ColumnType::Text) => {
                !s.is_empty() && s != NA && !s.contains(['\n', '\r', ',', '"'])
            }
            _ => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("table {table}: {message}")]
    Schema { table: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub columns: &'static [Column],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &'static [Column]) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn validate(&self) -> Result<(), OutputError> {
        let err = |message: String| OutputError::Schema {
            table: self.name.clone(),
            message,
        };
        if self.columns.is_empty() {
            return Err(err("no columns".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(err(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    self.columns.len()
                )));
            }
            for (cell, column) in row.iter().zip(self.columns) {
                if !cell.fits(column.ty) {
                    return Err(err(format!(
                        "row {i}, column {}: {cell:?} is not a valid {:?}",
                        column.name, column.ty
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validates and renders the table.
    pub fn to_csv(&self) -> Result<Vec<u8>, OutputError> {
        self.validate()?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io_err = |e: csv::Error| OutputError::Schema {
            table: self.name.clone(),
            message: e.to_string(),
        };
        w.write_record(self.columns.iter().map(|c| c.name))
            .map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(io_err)?;
        }
        w.into_inner().map_err(|e| OutputError::Schema {
            table: self.name.clone(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedEntry {
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub rows: usize,
    pub columns: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub schema: &'static str,
    pub command: &'a str,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub seeds: &'a [SeedEntry],
    pub outputs: Vec<OutputEntry>,
    pub diagnostics: &'a serde_json::Value,
    pub workers: usize,
    pub wall_time_seconds: f64,
}

/// Everything a command produced, written by [`write_run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub seeds: Vec<SeedEntry>,
    pub diagnostics: serde_json::Value,
}

/// Renders every table before touching the disk, then writes the CSVs
/// and, when requested, `<command>_manifest.json`. Returns the paths
/// written.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    run: &RunOutput,
    workers: usize,
    wall_time_seconds: f64,
) -> Result<Vec<PathBuf>, OutputError> {
    use crate::config::Format;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| OutputError::Io { path, source }
    };
    let rendered = run
        .tables
        .iter()
        .map(|t| t.to_csv().map(|bytes| (t.file_name(), bytes)))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if config.output.formats.contains(&Format::Csv) {
        for (name, bytes) in &rendered {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
            written.push(path);
        }
    }
    if config.output.formats.contains(&Format::Json) {
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA,
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            seeds: &run.seeds,
            outputs: run
                .tables
                .iter()
                .map(|t| OutputEntry {
                    file: t.file_name(),
                    rows: t.rows.len(),
                    columns: t.columns.iter().map(|c| c.name).collect(),
                })
                .collect(),
            diagnostics: &run.diagnostics,
            workers,
            wall_time_seconds,
        };
        let path = dir.join(format!("{command}_manifest.json"));
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
