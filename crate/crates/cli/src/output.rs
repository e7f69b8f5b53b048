use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        Self {
            text: format!("{}\n", cols.join(",")),
            width: cols.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn level_header(prefix: &[&str], k: usize, suffix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((1..=k).map(|m| format!("d{m}")))
        .chain(suffix.iter().map(|s| s.to_string()))
        .collect()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

/// Writes the main artifact to `out`, or stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Writes a JSON sidecar next to `out` (same stem, `.json`), or to stderr.
pub fn emit_sidecar(out: Option<&Path>, json: &str) -> Result<Option<PathBuf>, CliError> {
    match out {
        Some(path) => {
            let side = path.with_extension("json");
            if side == path {
                return Err(CliError::Validation(format!(
                    "sidecar would overwrite {}; use a non-.json output name",
                    path.display()
                )));
            }
            std::fs::write(&side, json).map_err(|e| {
                CliError::Validation(format!("cannot write {}: {e}", side.display()))
            })?;
            Ok(Some(side))
        }
        None => {
            std::io::stderr().write_all(json.as_bytes())?;
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 0.125, 5e-324, 1.0 - f64::EPSILON] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.125), "1.2500000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new(&level_header(&["step"], 2, &["residual"]));
        csv.row(&["0".into(), num(1.0), num(0.5), num(0.0)]);
        let text = csv.into_string();
        assert!(text.starts_with("step,d1,d2,residual\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 2);
    }
}
