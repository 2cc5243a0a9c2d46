use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flat records as CSV (header from the first record) or a JSON array.
pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::internal(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::internal(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(|e| CliError::internal(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// One event (or any record) per line.
pub fn json_lines<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| CliError::internal(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Sends named outputs to files under a directory, or to stdout.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        Ok(Sink {
            dir: dir.map(Path::to_path_buf),
        })
    }

    pub fn emit(&self, file_name: &str, content: &str) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(file_name);
                fs::write(&path, content).map_err(|e| CliError::io(&path, e))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())
                    .map_err(|e| CliError::internal(e.to_string()))
            }
        }
    }
}

/// Space-separated list for a single CSV field.
pub fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}
