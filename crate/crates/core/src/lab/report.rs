use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::space::io::write_atomic;

/// One table entry: a finite number or the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Value(f64),
    Unavailable(String),
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            Cell::Unavailable(_) => None,
        }
    }

    pub(crate) fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) if v.is_finite() => Cell::Value(v),
            Ok(v) => Cell::Unavailable(format!("non-finite value {v}")),
            Err(e) => Cell::Unavailable(e.to_string()),
        }
    }
}

/// Report columns, in table order.
pub const COLUMNS: [&str; 11] = [
    "d_upper",
    "hausdorff",
    "gh_distortion",
    "gh_coverage",
    "pushforward_gap",
    "lambda1",
    "fdd_distance",
    "path_w2",
    "tightness_slope",
    "mixing_exponent",
    "path_space_d_upper",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub index: usize,
    pub label: String,
    pub points: usize,
    /// Cells aligned with [`COLUMNS`].
    pub cells: Vec<Cell>,
}

impl ReportRow {
    pub fn cell(&self, column: &str) -> &Cell {
        let k = COLUMNS.iter().position(|c| *c == column).unwrap_or_else(|| panic!("unknown column {column}"));
        &self.cells[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub name: String,
    pub config_digest: String,
    pub version: String,
    pub seed: u64,
    /// Wall-clock seconds per row and in total; excluded from comparisons
    /// of report content.
    pub row_seconds: Vec<f64>,
    pub total_seconds: f64,
    pub warnings: Vec<String>,
    pub policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub meta: ReportMeta,
    pub columns: Vec<String>,
    /// Rows by sequence index; the last row is the limit.
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Values of `column` on the non-limit rows where it is available, as
    /// `(index, value)`.
    pub fn series(&self, column: &str) -> Vec<(usize, f64)> {
        self.sequence_rows().filter_map(|r| r.cell(column).value().map(|v| (r.index, v))).collect()
    }

    pub fn sequence_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows[..self.rows.len().saturating_sub(1)].iter()
    }

    pub fn limit_row(&self) -> Option<&ReportRow> {
        self.rows.last()
    }

    /// Same content apart from timings.
    pub fn same_content(&self, other: &Self) -> bool {
        self.rows == other.rows && self.meta.config_digest == other.meta.config_digest && self.meta.seed == other.meta.seed
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("index,label,points,{}\n", COLUMNS.join(","));
        for r in &self.rows {
            let _ = write!(s, "{},\"{}\",{}", r.index, r.label.replace('"', "\"\""), r.points);
            for c in &r.cells {
                match c {
                    Cell::Value(v) => {
                        let _ = write!(s, ",{v:.12e}");
                    }
                    Cell::Unavailable(_) => s.push_str(",NA"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes `report.csv`, `report.json` and one `<column>.dat` file per
    /// column (index and value, unavailable cells left out) into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("report.csv"), self.to_csv().as_bytes())?;
        write_atomic(&dir.join("report.json"), self.to_json().as_bytes())?;
        for (k, col) in COLUMNS.iter().enumerate() {
            let mut s = format!("# index {col}\n");
            for r in &self.rows {
                if let Cell::Value(v) = r.cells[k] {
                    let _ = writeln!(s, "{} {v:.12e}", r.index);
                }
            }
            write_atomic(&dir.join(format!("{col}.dat")), s.as_bytes())?;
        }
        Ok(())
    }
}
