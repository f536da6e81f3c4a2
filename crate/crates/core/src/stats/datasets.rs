use crate::error::{Error, Result};
use crate::tables::ContingencyTable;

/// A bundled table with its labels and the totals printed alongside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: &'static str,
    pub description: &'static str,
    pub row_labels: Vec<&'static str>,
    pub col_labels: Vec<&'static str>,
    pub table: ContingencyTable,
}

pub const DATASET_NAMES: [&str; 3] = ["midtown", "victoria", "hair_eye"];

struct Fixture {
    name: &'static str,
    description: &'static str,
    row_labels: &'static [&'static str],
    col_labels: &'static [&'static str],
    rows: &'static [&'static [u32]],
    // Margins as printed with the source table; checked on load.
    row_totals: &'static [u32],
    col_totals: &'static [u32],
    total: u32,
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

const FIXTURES: [Fixture; 3] = [
    Fixture {
        name: "midtown",
        description: "Midtown Manhattan Mental Health Study: parental socioeconomic status (A high to F low) by mental health",
        row_labels: &["A", "B", "C", "D", "E", "F"],
        col_labels: &["Well", "Mild", "Moderate", "Impaired"],
        rows: &[
            &[64, 94, 58, 46],
            &[57, 94, 54, 40],
            &[57, 105, 65, 60],
            &[72, 141, 77, 94],
            &[36, 97, 54, 78],
            &[21, 71, 54, 71],
        ],
        row_totals: &[262, 245, 287, 384, 265, 217],
        col_totals: &[307, 602, 362, 389],
        total: 1660,
    },
    Fixture {
        name: "victoria",
        description: "Month of birth (rows) by month of death (columns) for 82 descendants of Queen Victoria",
        row_labels: &MONTHS,
        col_labels: &MONTHS,
        rows: &[
            &[1, 0, 0, 0, 1, 2, 0, 0, 1, 0, 1, 0],
            &[1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 2],
            &[1, 0, 0, 0, 2, 1, 0, 0, 0, 0, 0, 1],
            &[3, 0, 2, 0, 0, 0, 1, 0, 1, 3, 1, 1],
            &[2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0],
            &[2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
            &[2, 0, 2, 1, 0, 0, 0, 0, 1, 1, 1, 2],
            &[0, 0, 0, 3, 0, 0, 1, 0, 0, 1, 0, 2],
            &[0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0],
            &[1, 1, 0, 2, 0, 0, 1, 0, 0, 1, 1, 0],
            &[0, 1, 1, 1, 2, 0, 0, 2, 0, 1, 1, 0],
            &[0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        ],
        row_totals: &[6, 5, 5, 12, 12, 3, 10, 7, 3, 7, 9, 3],
        col_totals: &[13, 4, 7, 10, 8, 4, 5, 3, 4, 9, 7, 8],
        total: 82,
    },
    Fixture {
        name: "hair_eye",
        description: "Eye colour (rows) by hair colour (columns) for 592 individuals",
        row_labels: &["Brown", "Blue", "Hazel", "Green"],
        col_labels: &["Black", "Brown", "Red", "Blond"],
        rows: &[
            &[68, 119, 26, 7],
            &[20, 84, 17, 94],
            &[15, 54, 14, 10],
            &[5, 29, 14, 16],
        ],
        row_totals: &[220, 215, 93, 64],
        col_totals: &[108, 286, 71, 127],
        total: 592,
    },
];

impl Fixture {
    fn load(&self) -> Result<Dataset> {
        let table = ContingencyTable::from_rows(self.rows.iter().map(|r| r.to_vec()).collect())?;
        if table.row_sums() != self.row_totals || table.col_sums() != self.col_totals || table.n() != self.total {
            return Err(Error::MarginMismatch(format!(
                "dataset {} does not reproduce its printed totals",
                self.name
            )));
        }
        Ok(Dataset {
            name: self.name,
            description: self.description,
            row_labels: self.row_labels.to_vec(),
            col_labels: self.col_labels.to_vec(),
            table,
        })
    }
}

/// One of the bundled datasets by name (see [`DATASET_NAMES`]).
pub fn builtin(name: &str) -> Result<Dataset> {
    let key = name.to_ascii_lowercase().replace('-', "_");
    FIXTURES
        .iter()
        .find(|f| f.name == key)
        .ok_or_else(|| Error::UnknownDataset(format!("{name} (known: {})", DATASET_NAMES.join(", "))))?
        .load()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_match_printed_margins() {
        assert_eq!(builtin("midtown").unwrap().table.n(), 1660);
        assert_eq!(builtin("victoria").unwrap().table.n(), 82);
        assert_eq!(builtin("hair-eye").unwrap().table.n(), 592);
        for name in DATASET_NAMES {
            let d = builtin(name).unwrap();
            assert_eq!(d.row_labels.len(), d.table.rows());
            assert_eq!(d.col_labels.len(), d.table.cols());
        }
        assert!(matches!(builtin("iris"), Err(Error::UnknownDataset(_))));
    }
}
