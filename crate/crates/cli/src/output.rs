//! CSV helpers shared by the subcommands.

use std::fs::{self, File};
use std::path::Path;

use crate::error::{CliError, Result};

/// Scientific notation with 17 significant digits, enough to round-trip any
/// `f64` exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
