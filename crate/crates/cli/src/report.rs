use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Writes every float with 17 significant digits so values round-trip.
struct RoundTrip;

impl Formatter for RoundTrip {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_string(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTrip);
    value.serialize(&mut ser).expect("serializing a Value into memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!((0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())).collect())
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
        }
    }

    /// NaN residuals fail.
    pub fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Row-oriented view of a command's data for `--out csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn with_header(cols: &[&str]) -> Self {
        Self {
            header: Some(cols.iter().map(|c| c.to_string()).collect()),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// What a subcommand hands back to `main`.
#[derive(Debug)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub data: Value,
    pub table: Table,
}

#[derive(Debug)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs_digest: String,
    pub checks: Vec<Check>,
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "residual": c.residual,
                "tolerance": c.tolerance,
                "pass": c.pass(),
            })).collect::<Vec<_>>(),
            "pass": self.passed(),
        });
        if let Some(ms) = self.timing_ms {
            v["timing_ms"] = json!(ms);
        }
        v
    }
}

/// Input files read by a command, in the order they were read.
#[derive(Debug, Default)]
pub struct Inputs {
    files: Vec<Vec<u8>>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(bytes.clone());
        String::from_utf8(bytes).map_err(|_| CliError::Schema(format!("`{}` is not UTF-8 text", path.display())))
    }

    /// SHA-256 over the argument list and the bytes of every input file.
    pub fn digest(&self, args: &[String]) -> String {
        let mut h = Sha256::new();
        for part in args.iter().map(|a| a.as_bytes()).chain(self.files.iter().map(Vec::as_slice)) {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        hex::encode(h.finalize())
    }
}

pub fn write_csv(out: impl Write, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    if let Some(h) = &table.header {
        w.write_record(h)?;
    }
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
