//! JSON and CSV emission. Both forms carry the version string and the resolved
//! configuration; CSV puts them in `#` comment lines above the header.

use crate::config::{Format, RunConfig};
use crate::CliError;
use serde::Serialize;
use std::io::Write;

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip form; non-finite values as `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    result: &'a T,
}

pub fn render<T: Serialize>(cfg: &RunConfig, result: &T, table: &Table) -> Result<Vec<u8>, CliError> {
    let fail = |e: String| CliError::Analysis(format!("output: {e}"));
    match cfg.format() {
        Format::Json => {
            let env = Envelope {
                version: anisoweight::VERSION,
                config: cfg,
                result,
            };
            let mut s = serde_json::to_string_pretty(&env).map_err(|e| fail(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "# version: {}", anisoweight::VERSION).unwrap();
            let c = serde_json::to_string(cfg).map_err(|e| fail(e.to_string()))?;
            writeln!(buf, "# config: {c}").unwrap();
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(&table.header).map_err(|e| fail(e.to_string()))?;
            for r in &table.rows {
                w.write_record(r).map_err(|e| fail(e.to_string()))?;
            }
            w.into_inner().map_err(|e| fail(e.to_string()))
        }
    }
}

pub fn write(cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Analysis(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Analysis(format!("stdout: {e}"))),
    }
}
