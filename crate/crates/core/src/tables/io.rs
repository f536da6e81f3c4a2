use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ContingencyTable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Json,
    Csv,
}

impl TableFormat {
    /// Format implied by a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

/// JSON shape of a table file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRecord {
    pub rows: Vec<Vec<u32>>,
    pub row_sums: Vec<u32>,
    pub col_sums: Vec<u32>,
}

impl From<&ContingencyTable> for TableRecord {
    fn from(t: &ContingencyTable) -> Self {
        Self {
            rows: t.to_rows(),
            row_sums: t.row_sums().to_vec(),
            col_sums: t.col_sums().to_vec(),
        }
    }
}

impl TryFrom<TableRecord> for ContingencyTable {
    type Error = Error;
    fn try_from(r: TableRecord) -> Result<Self> {
        ContingencyTable::with_margins(r.rows, &r.row_sums, &r.col_sums)
    }
}

pub fn parse_table(text: &str, format: TableFormat) -> Result<ContingencyTable> {
    match format {
        TableFormat::Json => serde_json::from_str::<TableRecord>(text)?.try_into(),
        TableFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .flexible(true)
                .from_reader(text.as_bytes());
            let mut rows = Vec::new();
            for (r, record) in reader.records().enumerate() {
                let record = record?;
                let row = record
                    .iter()
                    .map(|field| {
                        field.parse::<u32>().map_err(|_| {
                            Error::Parse(format!(
                                "row {}: {field:?} is not a non-negative integer",
                                r + 1
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if !row.is_empty() {
                    rows.push(row);
                }
            }
            ContingencyTable::from_rows(rows)
        }
    }
}

pub fn load_table(path: &Path, format: TableFormat) -> Result<ContingencyTable> {
    parse_table(&std::fs::read_to_string(path)?, format)
}

pub fn write_table(t: &ContingencyTable, format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Json => Ok(serde_json::to_string(&TableRecord::from(t))?),
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            for row in t.to_rows() {
                w.write_record(row.iter().map(u32::to_string))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
        }
    }
}
