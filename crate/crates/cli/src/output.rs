//! Output plumbing: CSV and JSON emission to stdout or a file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

/// Every JSON document carries this so downstream readers can pin parsers.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub struct Sink {
    writer: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let writer: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        };
        Ok(Self { writer })
    }

    pub fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.writer, "{s}").map_err(CliError::from)
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
        self.line(&text)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(CliError::from)
    }
}

/// Formats a float so CSV round-trips at full precision.
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.17e}")
    }
}

/// Optional value cell; empty when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
