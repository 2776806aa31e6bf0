//! CSV tables preceded by a `#`-prefixed echo of the configuration.

use std::io::Write;

use crate::CliError;

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    // Adding +0 folds -0 into 0.
    format!("{:.16e}", x + 0.0)
}

#[derive(Debug, Clone, PartialEq)]
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

    pub fn write<W: Write>(&self, mut out: W, preamble: &str) -> Result<(), CliError> {
        for line in preamble.lines() {
            if line.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "# {line}")?;
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Io(e.into());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}
