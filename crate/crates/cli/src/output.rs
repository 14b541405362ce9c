use crate::CliError;
use clap::ValueEnum;
use serde::Serialize;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Output {
    pub format: Format,
    pub path: Option<PathBuf>,
}

/// Writes `document` as JSON, or `rows` as CSV with a header line.
pub fn emit<D: Serialize, R: Serialize>(out: &Output, document: &D, rows: &[R]) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match &out.path {
        Some(path) => Box::new(File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let io_err = |e: &dyn std::fmt::Display| CliError::Io(e.to_string());
    match out.format {
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, document).map_err(|e| io_err(&e))?;
            writeln!(sink).map_err(|e| io_err(&e))?;
            sink.flush().map_err(|e| io_err(&e))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for row in rows {
                w.serialize(row).map_err(|e| io_err(&e))?;
            }
            w.flush().map_err(|e| io_err(&e))
        }
    }
}
