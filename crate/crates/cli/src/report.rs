use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: &str = "schema/report-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A self-describing report: the command, its full parameter set, the
/// verdict and the result, plus a flat table for CSV output.
pub struct Report {
    pub command: &'static str,
    pub params: Value,
    pub passed: bool,
    pub result: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(command: &'static str, params: &impl Serialize, passed: bool, result: &impl Serialize) -> Report {
        Report {
            command,
            params: serde_json::to_value(params).expect("parameters serialize"),
            passed,
            result: serde_json::to_value(result).expect("results serialize"),
            header: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn table(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Report {
        self.header = header;
        self.rows = rows;
        self
    }

    pub fn envelope(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "params": self.params,
            "status": if self.passed { "PASS" } else { "FAIL" },
            "result": self.result,
        })
    }

    pub fn emit(&self, format: Format, out: &mut impl Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.envelope())?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                w.flush()
            }
        }
    }
}
