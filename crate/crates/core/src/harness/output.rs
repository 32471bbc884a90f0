//! CSV results tables.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::sweep::RateReport;

pub const HEADER: [&str; 12] = [
    "scheme",
    "power",
    "dam",
    "phase",
    "optimizer",
    "sweep_variable",
    "sweep_value",
    "trials",
    "failed_trials",
    "mean_rate",
    "std_error",
    "seed",
];

/// Nine significant digits.
fn number(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), source }
}

/// Serializes `table` to CSV text.
pub fn to_csv<W: Write>(table: &[RateReport], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in table {
        let (var, value) = match r.sweep {
            Some((var, v)) => (var.name().to_string(), number(v)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.scheme.index().to_string(),
            r.scheme.power.name().to_string(),
            r.scheme.dam.to_string(),
            r.scheme.phase.name().to_string(),
            r.scheme.optimizer.to_string(),
            var,
            value,
            r.trials().to_string(),
            r.failed_trials.to_string(),
            number(r.mean_rate),
            number(r.std_error),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `table` to `path`.
pub fn write_results(table: &[RateReport], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    to_csv(table, std::io::BufWriter::new(file)).map_err(|e| csv_error(path, e))
}

/// One parsed row of a results file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub scheme: usize,
    pub power: String,
    pub dam: bool,
    pub phase: String,
    pub optimizer: String,
    pub sweep_variable: String,
    pub sweep_value: Option<f64>,
    pub trials: usize,
    pub failed_trials: usize,
    pub mean_rate: f64,
    pub std_error: f64,
    pub seed: u64,
}

pub fn parse_results<R: std::io::Read>(input: R) -> std::result::Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_results(file).map_err(|e| csv_error(path, e))
}
