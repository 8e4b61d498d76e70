//! The single serialization point: rows arrive in input order and are
//! written as ndjson or CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::Failure;

/// Shortest round-trip text of a float; stable across runs.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// A table that knows both its JSON rows and its CSV projection.
pub struct Table<T> {
    pub header: Vec<String>,
    pub rows: Vec<(T, Vec<String>)>,
}

impl<T: Serialize> Table<T> {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, full: T, csv: Vec<String>) {
        debug_assert_eq!(csv.len(), self.header.len());
        self.rows.push((full, csv));
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> Result<(), Failure> {
        match format {
            Format::Json => write_json(self.rows.iter().map(|(row, _)| row), path),
            Format::Csv => write_csv(&self.header, self.rows.iter().map(|(_, record)| record), path),
        }
    }
}

/// One JSON object per line.
pub fn write_json<'a, T: Serialize + 'a>(rows: impl IntoIterator<Item = &'a T>, path: Option<&Path>) -> Result<(), Failure> {
    let mut w = open(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| Failure::usage(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<'a>(
    header: &[String],
    records: impl IntoIterator<Item = &'a Vec<String>>,
    path: Option<&Path>,
) -> Result<(), Failure> {
    let mut w = open(path)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        let csv_err = |e: csv::Error| Failure::usage(e.to_string());
        c.write_record(header).map_err(csv_err)?;
        for record in records {
            c.write_record(record).map_err(csv_err)?;
        }
        c.flush()?;
    }
    w.flush()?;
    Ok(())
}

/// `prefix1..prefixn`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}
