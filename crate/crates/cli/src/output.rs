//! Report rendering. JSON carries full precision; CSV uses 9 significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, CliResult};

/// One CSV table. Extra tables go next to the main output file, as `<stem>.<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: Option<&'static str>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            name: None,
            header,
            rows: Vec::new(),
        }
    }

    pub fn named(name: &'static str, header: Vec<&'static str>) -> Self {
        Self {
            name: Some(name),
            ..Self::new(header)
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// What a command produces, in both renderings.
#[derive(Debug)]
pub struct Artifact {
    pub json: serde_json::Value,
    pub tables: Vec<Table>,
}

impl Artifact {
    pub fn new(json: impl Serialize, tables: Vec<Table>) -> CliResult<Self> {
        let json = serde_json::to_value(json).map_err(|e| CliError::Config(format!("json: {e}")))?;
        Ok(Self { json, tables })
    }
}

/// `v` with 9 significant digits.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        format!("{v:.8e}")
    } else {
        format!("{v:.*}", (8 - exp) as usize)
    }
}

pub fn opt_sig9(v: Option<f64>, missing: &str) -> String {
    v.map(sig9).unwrap_or_else(|| missing.to_string())
}

fn side_path(out: &Path, name: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}.csv"))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes the artifact to `out` or stdout.
pub fn emit(artifact: &Artifact, format: Format, out: Option<&Path>) -> CliResult<()> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&artifact.json).expect("values always serialize");
            text.push('\n');
            match out {
                Some(path) => write_file(path, &text),
                None => print(&text),
            }
        }
        Format::Csv => {
            let mut stdout_text = String::new();
            for table in &artifact.tables {
                let text = table.render()?;
                match (out, table.name) {
                    (Some(path), None) => write_file(path, &text)?,
                    (Some(path), Some(name)) => write_file(&side_path(path, name), &text)?,
                    (None, name) => {
                        if !stdout_text.is_empty() {
                            stdout_text.push('\n');
                        }
                        if let Some(name) = name {
                            stdout_text.push_str(&format!("# {name}\n"));
                        }
                        stdout_text.push_str(&text);
                    }
                }
            }
            if out.is_none() {
                print(&stdout_text)?;
            }
            Ok(())
        }
    }
}

fn print(text: &str) -> CliResult<()> {
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Write {
        path: PathBuf::from("<stdout>"),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.531_004_406_410_719), "0.531004406");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(97.020_5), "97.0205000");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.234_567_891_23e-7), "1.23456789e-7");
        assert_eq!(sig9(-0.25), "-0.250000000");
    }

    #[test]
    fn side_tables_sit_next_to_the_output() {
        assert_eq!(side_path(Path::new("/tmp/run.csv"), "distortion"), PathBuf::from("/tmp/run.distortion.csv"));
    }
}
