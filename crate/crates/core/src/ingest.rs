// SPDX-License-Identifier: Apache-2.0

//! CSV lake ingestion: file discovery, value normalization and per-column
//! statistics.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How cell text is canonicalized before it is indexed or matched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Trim surrounding whitespace only.
    Exact,
    /// Trim and lowercase.
    #[default]
    Lower,
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Normalization::Exact),
            "lower" => Ok(Normalization::Lower),
            other => Err(format!("unknown normalization policy `{other}` (expected exact|lower)")),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Exact => "exact",
            Normalization::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedValue {
    pub text: String,
    pub numeric: Option<f64>,
}

/// Normalizes one raw cell. Returns `None` when nothing is left after trimming.
pub fn normalize_value(raw: &str, policy: Normalization) -> Option<NormalizedValue> {
    let text = match policy {
        Normalization::Exact => raw.trim().to_string(),
        Normalization::Lower => {
            let trimmed = raw.trim();
            if trimmed.bytes().any(|b| b.is_ascii_uppercase()) || !trimmed.is_ascii() {
                trimmed.to_lowercase().trim().to_string()
            } else {
                trimmed.to_string()
            }
        }
    };
    if text.is_empty() {
        return None;
    }
    let numeric = parse_decimal(&text);
    Some(NormalizedValue { text, numeric })
}

/// Parses `[+-]digits[.digits][(e|E)[+-]digits]` (also `.5` and `5.`).
/// Rejects thousands separators, `inf`, `nan` and hex forms.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub column_id: u32,
    pub non_empty_count: u32,
    pub numeric_count: u32,
    pub is_numeric: bool,
    pub mean: Option<f64>,
}

/// Statistics over the non-empty cells of one column.
///
/// A column is numeric when at least half of its non-empty cells parse as
/// decimals. The mean is taken over the parseable cells only and is summed in
/// sorted order so that it does not depend on row order.
pub fn compute_column_stats(column_id: u32, values: &[NormalizedValue]) -> ColumnStats {
    let mut numbers: Vec<f64> = values.iter().filter_map(|v| v.numeric).collect();
    let non_empty_count = values.len() as u32;
    let numeric_count = numbers.len() as u32;
    let is_numeric = non_empty_count > 0 && 2 * u64::from(numeric_count) >= u64::from(non_empty_count);
    let mean = if is_numeric {
        numbers.sort_by(f64::total_cmp);
        Some(numbers.iter().sum::<f64>() / numbers.len() as f64)
    } else {
        None
    };
    ColumnStats {
        column_id,
        non_empty_count,
        numeric_count,
        is_numeric,
        mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCatalogEntry {
    pub table_id: u32,
    pub path: String,
    pub column_names: Vec<String>,
    pub row_count: u32,
    pub column_stats: Vec<ColumnStats>,
}

/// A table as read from disk (or generated in memory), before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    /// Lake-relative path with `/` separators; determines the table id.
    pub path: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A normalized table: catalog entry plus row-major cells (`None` = empty).
#[derive(Debug, Clone)]
pub struct IngestedTable {
    pub entry: TableCatalogEntry,
    pub rows: Vec<Vec<Option<NormalizedValue>>>,
}

pub fn ingest_table(table_id: u32, raw: &RawTable, policy: Normalization) -> IngestedTable {
    let width = raw.header.len();
    let rows: Vec<Vec<Option<NormalizedValue>>> = raw
        .rows
        .iter()
        .map(|row| {
            (0..width)
                .map(|c| row.get(c).and_then(|cell| normalize_value(cell, policy)))
                .collect()
        })
        .collect();
    let column_stats = (0..width)
        .map(|c| {
            let values: Vec<NormalizedValue> = rows.iter().filter_map(|r| r[c].clone()).collect();
            compute_column_stats(c as u32, &values)
        })
        .collect();
    IngestedTable {
        entry: TableCatalogEntry {
            table_id,
            path: raw.path.clone(),
            column_names: raw.header.clone(),
            row_count: rows.len() as u32,
            column_stats,
        },
        rows,
    }
}

#[derive(Debug, Clone, Default)]
pub struct LakeScan {
    pub catalog: Vec<TableCatalogEntry>,
    pub warnings: Vec<String>,
}

/// Lists `*.csv` files under `dir` (recursively) as `(relative path, full path)`,
/// sorted by relative path.
pub fn list_csv_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let meta = std::fs::metadata(dir).map_err(|e| Error::io(dir, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| dir.to_path_buf());
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let rel = path
            .strip_prefix(dir)
            .unwrap_or(path)
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push((rel, path.to_path_buf()));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

/// Reads one CSV file. `Err` carries a human-readable reason the file was
/// rejected.
pub fn read_csv_table(rel_path: &str, path: &Path) -> std::result::Result<RawTable, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{rel_path}: {e}"))?;
    parse_csv_bytes(rel_path, &bytes)
}

pub fn parse_csv_bytes(rel_path: &str, bytes: &[u8]) -> std::result::Result<RawTable, String> {
    if !quotes_balanced(bytes) {
        return Err(format!("{rel_path}: unbalanced quotes"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format!("{rel_path}: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(format!("{rel_path}: missing header row"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format!("{rel_path}: {e}"))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(RawTable {
        path: rel_path.to_string(),
        header,
        rows,
    })
}

/// RFC 4180 quote check: a field that opens with `"` must be closed before EOF.
fn quotes_balanced(bytes: &[u8]) -> bool {
    let mut in_quotes = false;
    let mut at_field_start = true;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if in_quotes {
            if b == b'"' {
                if bytes.get(i + 1) == Some(&b'"') {
                    i += 1;
                } else {
                    in_quotes = false;
                }
            }
        } else if b == b'"' && at_field_start {
            in_quotes = true;
        }
        at_field_start = !in_quotes && matches!(b, b',' | b'\n' | b'\r');
        i += 1;
    }
    !in_quotes
}

/// Reads and normalizes every CSV table under `dir` in path order, handing each
/// to `visit`. Malformed files are skipped, consume no table id, and are
/// reported in the returned warnings.
pub fn scan_lake_with(
    dir: &Path,
    policy: Normalization,
    mut visit: impl FnMut(IngestedTable),
) -> Result<Vec<String>> {
    const CHUNK: usize = 128;
    let files = list_csv_files(dir)?;
    let mut warnings = Vec::new();
    let mut next_id = 0u32;
    for chunk in files.chunks(CHUNK) {
        let parsed: Vec<_> = chunk
            .par_iter()
            .map(|(rel, path)| read_csv_table(rel, path))
            .collect();
        for table in parsed {
            match table {
                Ok(raw) => {
                    visit(ingest_table(next_id, &raw, policy));
                    next_id += 1;
                }
                Err(reason) => {
                    log::warn!("skipping {reason}");
                    warnings.push(reason);
                }
            }
        }
    }
    Ok(warnings)
}

/// Builds the table catalog for a lake directory.
pub fn scan_lake(dir: &Path, policy: Normalization) -> Result<LakeScan> {
    let mut catalog = Vec::new();
    let warnings = scan_lake_with(dir, policy, |t| catalog.push(t.entry))?;
    Ok(LakeScan { catalog, warnings })
}
