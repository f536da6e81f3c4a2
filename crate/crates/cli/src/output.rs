use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Destination chosen by `--out`, stdout otherwise.
pub struct Sink {
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(out: Option<&Path>) -> io::Result<Self> {
        let inner: Box<dyn Write> = match out {
            Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { inner })
    }

    pub fn line(&mut self, s: impl AsRef<str>) -> io::Result<()> {
        writeln!(self.inner, "{}", s.as_ref())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.inner, value)?;
        writeln!(self.inner)?;
        Ok(())
    }

    /// CSV with a header row; every record must have the header's length.
    pub fn csv(&mut self, header: &[&str], records: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.inner);
        w.write_record(header)?;
        for r in records {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Aligned text columns.
pub fn align(rows: &[Vec<String>]) -> Vec<String> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(c, s)| format!("{s:>w$}", w = widths[c]))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        })
        .collect()
}
