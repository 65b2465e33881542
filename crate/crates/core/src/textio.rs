//! Helpers for the plain-text file formats.
//!
//! All floating-point values in machine-readable files are written with 17
//! significant digits so that parsing them back reproduces the exact bits.

use crate::error::{Result, TkmError};

/// Format a float with 17 significant digits (round-trip safe for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| TkmError::format(line, format!("invalid float {s:?}")))
}

pub(crate) fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| TkmError::format(line, format!("invalid integer {s:?}")))
}

pub(crate) fn parse_u64(s: &str, line: usize) -> Result<u64> {
    s.parse::<u64>()
        .map_err(|_| TkmError::format(line, format!("invalid integer {s:?}")))
}

pub(crate) fn parse_u32(s: &str, line: usize) -> Result<u32> {
    s.parse::<u32>()
        .map_err(|_| TkmError::format(line, format!("invalid integer {s:?}")))
}

/// Quote a CSV field only when it contains a comma, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
