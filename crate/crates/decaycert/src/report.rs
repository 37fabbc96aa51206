//! Report schema emitted by the CLI: a fixed-order JSON document per run
//! plus CSV curve files. Field order is the struct order, map keys are
//! sorted by the serializer, and nothing time- or host-dependent goes in,
//! so identical inputs produce byte-identical files.

use serde::Serialize;
use serde_json::Value;
use std::io;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
pub const GENERATOR: &str = concat!("decaycert ", env!("CARGO_PKG_VERSION"));

/// One named pass/fail check with free-form supporting numbers.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub details: Value,
}

impl Check {
    pub fn new(id: &str, pass: bool, details: Value) -> Self {
        Self { id: id.to_string(), pass, details }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub generator: &'static str,
    pub subcommand: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    /// `pass` aggregates over the checks.
    pub fn new(subcommand: &str, config: Value, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            schema_version: SCHEMA_VERSION,
            generator: GENERATOR,
            subcommand: subcommand.to_string(),
            config,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        s.push('\n');
        s
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

/// Writes a header plus rows of already-formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
