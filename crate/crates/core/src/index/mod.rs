// SPDX-License-Identifier: Apache-2.0

//! The single cell relation and its access paths.
//!
//! Cells are stored column-wise in `(table, row, column)` order. Two sorted
//! access paths sit on top: a value dictionary with posting lists (cell
//! positions per value) and a table/row directory (cell ranges per row). Row
//! signatures are stored once per row.

mod persist;
mod signature;

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

pub use persist::{BuildReport, CATALOG_FILE, DATA_FILE, FORMAT_VERSION};
pub use signature::{
    cell_signature, combined_signature, subsumes, RowSignature, HASHES_PER_VALUE, SIGNATURE_BITS,
    SIGNATURE_HASH, SIGNATURE_SEEDS,
};

use crate::error::{Error, Result};
use crate::ingest::{self, ColumnStats, IngestedTable, Normalization, RawTable, TableCatalogEntry};

/// Position of a numeric cell relative to its column mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Quadrant {
    /// Not a parseable value of a numeric column.
    None = 0,
    /// Below the column mean.
    Low = 1,
    /// Greater than or equal to the column mean.
    High = 2,
}

impl Quadrant {
    pub fn classify(stats: &ColumnStats, numeric: Option<f64>) -> Quadrant {
        match (stats.mean, numeric) {
            (Some(mean), Some(x)) if stats.is_numeric => {
                if x >= mean {
                    Quadrant::High
                } else {
                    Quadrant::Low
                }
            }
            _ => Quadrant::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::None => "",
            Quadrant::Low => "F",
            Quadrant::High => "T",
        }
    }

    pub(crate) fn from_u8(b: u8) -> Option<Quadrant> {
        match b {
            0 => Some(Quadrant::None),
            1 => Some(Quadrant::Low),
            2 => Some(Quadrant::High),
            _ => None,
        }
    }
}

/// One row of the cell relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRecord<'a> {
    pub value: &'a str,
    pub table_id: u32,
    pub column_id: u32,
    pub row_id: u32,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedRow<'a> {
    pub row_id: u32,
    pub signature: RowSignature,
    /// `(column_id, value)` in column order; empty cells are absent.
    pub cells: Vec<(u32, &'a str)>,
}

/// Dense cell storage, one vector per attribute.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub(crate) struct Cells {
    pub value: Vec<u32>,
    pub table: Vec<u32>,
    pub row: Vec<u32>,
    pub column: Vec<u32>,
    pub quadrant: Vec<Quadrant>,
}

impl Cells {
    pub fn len(&self) -> usize {
        self.value.len()
    }
}

/// An immutable, fully built index.
#[derive(Debug, Clone)]
pub struct Index {
    pub(crate) normalization: Normalization,
    pub(crate) catalog: Vec<TableCatalogEntry>,
    /// Sorted value dictionary; a value id is a position here.
    pub(crate) values: Vec<Box<str>>,
    pub(crate) cells: Cells,
    /// Global row id of each table's first row; length `tables + 1`.
    pub(crate) table_rows: Vec<u32>,
    /// First cell of each global row; length `rows + 1`.
    pub(crate) row_cells: Vec<u32>,
    pub(crate) row_sigs: Vec<u128>,
    /// Posting list offsets per value id; length `values + 1`.
    pub(crate) posting_offsets: Vec<u32>,
    /// Cell positions, grouped by value, ascending within each group.
    pub(crate) postings: Vec<u32>,
}

impl Index {
    /// Builds from a lake directory of CSV files.
    pub fn build_from_dir(lake_dir: &Path, policy: Normalization) -> Result<(Index, BuildReport)> {
        let mut builder = IndexBuilder::new(policy);
        let warnings = ingest::scan_lake_with(lake_dir, policy, |t| builder.push_table(t))?;
        let index = builder.finish();
        let report = BuildReport::new(&index, warnings);
        Ok((index, report))
    }

    /// Builds from in-memory tables. Tables are ordered by path before ids are
    /// assigned, exactly as a directory scan would.
    pub fn build_from_tables(tables: &[RawTable], policy: Normalization) -> Index {
        let mut order: Vec<&RawTable> = tables.iter().collect();
        order.sort_by(|a, b| a.path.cmp(&b.path));
        let mut builder = IndexBuilder::new(policy);
        for (id, raw) in order.into_iter().enumerate() {
            builder.push_table(ingest::ingest_table(id as u32, raw, policy));
        }
        builder.finish()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn catalog(&self) -> &[TableCatalogEntry] {
        &self.catalog
    }

    pub fn table(&self, table_id: u32) -> Result<&TableCatalogEntry> {
        self.catalog.get(table_id as usize).ok_or(Error::NoSuchTable(table_id))
    }

    pub fn table_count(&self) -> usize {
        self.catalog.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Number of rows holding at least one cell (i.e. stored signatures).
    pub fn signature_count(&self) -> usize {
        self.row_cells.windows(2).filter(|w| w[1] > w[0]).count()
    }

    pub fn distinct_values(&self) -> usize {
        self.values.len()
    }

    /// Normalizes raw query text with the policy the index was built with.
    pub fn normalize(&self, raw: &str) -> Option<String> {
        ingest::normalize_value(raw, self.normalization).map(|v| v.text)
    }

    pub(crate) fn value_id(&self, value: &str) -> Option<u32> {
        self.values.binary_search_by(|v| (**v).cmp(value)).ok().map(|i| i as u32)
    }

    pub(crate) fn value_str(&self, id: u32) -> &str {
        &self.values[id as usize]
    }

    pub(crate) fn postings_of(&self, value_id: u32) -> &[u32] {
        let lo = self.posting_offsets[value_id as usize] as usize;
        let hi = self.posting_offsets[value_id as usize + 1] as usize;
        &self.postings[lo..hi]
    }

    /// The part of a posting list that falls in `table_id`, plus the number of
    /// probes spent finding it.
    pub(crate) fn postings_in_table<'a>(&self, postings: &'a [u32], table_id: u32) -> (&'a [u32], usize) {
        let table = &self.cells.table;
        let lo = postings.partition_point(|&c| table[c as usize] < table_id);
        let hi = lo + postings[lo..].partition_point(|&c| table[c as usize] <= table_id);
        let probes = 2 * (usize::BITS - postings.len().leading_zeros()) as usize;
        (&postings[lo..hi], probes)
    }

    pub(crate) fn global_row(&self, table_id: u32, row_id: u32) -> usize {
        (self.table_rows[table_id as usize] + row_id) as usize
    }

    pub(crate) fn row_range(&self, table_id: u32, row_id: u32) -> Range<usize> {
        let g = self.global_row(table_id, row_id);
        self.row_cells[g] as usize..self.row_cells[g + 1] as usize
    }

    pub(crate) fn row_bits(&self, table_id: u32, row_id: u32) -> u128 {
        self.row_sigs[self.global_row(table_id, row_id)]
    }

    pub(crate) fn record(&self, cell: usize) -> CellRecord<'_> {
        CellRecord {
            value: self.value_str(self.cells.value[cell]),
            table_id: self.cells.table[cell],
            column_id: self.cells.column[cell],
            row_id: self.cells.row[cell],
            quadrant: self.cells.quadrant[cell],
        }
    }

    /// All records whose value is in `values`, in `(table, row, column)` order.
    /// Values are expected in normalized form; unknown values contribute
    /// nothing.
    pub fn lookup_values<'a, I, S>(&'a self, values: I) -> impl Iterator<Item = CellRecord<'a>> + 'a
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut ids: Vec<u32> = values.into_iter().filter_map(|v| self.value_id(v.as_ref())).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut hits: Vec<u32> = ids.iter().flat_map(|&id| self.postings_of(id).iter().copied()).collect();
        hits.sort_unstable();
        hits.into_iter().map(move |c| self.record(c as usize))
    }

    /// Materializes the requested rows of one table.
    pub fn fetch_rows(&self, table_id: u32, row_ids: &[u32]) -> Result<Vec<FetchedRow<'_>>> {
        let entry = self.table(table_id)?;
        row_ids
            .iter()
            .map(|&row_id| {
                if row_id >= entry.row_count {
                    return Err(Error::InvalidParameter(format!(
                        "row {row_id} out of range for table {table_id} ({} rows)",
                        entry.row_count
                    )));
                }
                let cells = self
                    .row_range(table_id, row_id)
                    .map(|c| (self.cells.column[c], self.value_str(self.cells.value[c])))
                    .collect();
                Ok(FetchedRow {
                    row_id,
                    signature: RowSignature {
                        table_id,
                        row_id,
                        bits: self.row_bits(table_id, row_id),
                    },
                    cells,
                })
            })
            .collect()
    }

    /// Every stored row signature (rows with at least one cell).
    pub fn row_signatures(&self) -> impl Iterator<Item = RowSignature> + '_ {
        self.catalog.iter().flat_map(move |t| {
            (0..t.row_count).filter_map(move |r| {
                let range = self.row_range(t.table_id, r);
                (!range.is_empty()).then(|| RowSignature {
                    table_id: t.table_id,
                    row_id: r,
                    bits: self.row_bits(t.table_id, r),
                })
            })
        })
    }

    /// All records in `(table, row, column)` order.
    pub fn records(&self) -> impl Iterator<Item = CellRecord<'_>> + '_ {
        (0..self.cells.len()).map(move |c| self.record(c))
    }
}

/// Accumulates ingested tables into an [`Index`].
pub struct IndexBuilder {
    policy: Normalization,
    catalog: Vec<TableCatalogEntry>,
    interner: HashMap<Box<str>, u32>,
    provisional: Vec<Box<str>>,
    provisional_sigs: Vec<u128>,
    cells: Cells,
    table_rows: Vec<u32>,
    row_cells: Vec<u32>,
    row_sigs: Vec<u128>,
}

impl IndexBuilder {
    pub fn new(policy: Normalization) -> Self {
        IndexBuilder {
            policy,
            catalog: Vec::new(),
            interner: HashMap::new(),
            provisional: Vec::new(),
            provisional_sigs: Vec::new(),
            cells: Cells::default(),
            table_rows: vec![0],
            row_cells: vec![0],
            row_sigs: Vec::new(),
        }
    }

    fn intern(&mut self, text: &str) -> u32 {
        if let Some(&id) = self.interner.get(text) {
            return id;
        }
        let id = self.provisional.len() as u32;
        let boxed: Box<str> = text.into();
        self.provisional_sigs.push(cell_signature(&boxed));
        self.provisional.push(boxed.clone());
        self.interner.insert(boxed, id);
        id
    }

    /// Appends the next table. Tables must arrive with dense ascending ids.
    pub fn push_table(&mut self, table: IngestedTable) {
        let IngestedTable { entry, rows } = table;
        assert_eq!(entry.table_id as usize, self.catalog.len(), "table ids must be dense");
        for (row_id, row) in rows.iter().enumerate() {
            let mut bits = 0u128;
            for (col, cell) in row.iter().enumerate() {
                let Some(v) = cell else { continue };
                let id = self.intern(&v.text);
                bits |= self.provisional_sigs[id as usize];
                self.cells.value.push(id);
                self.cells.table.push(entry.table_id);
                self.cells.row.push(row_id as u32);
                self.cells.column.push(col as u32);
                self.cells.quadrant.push(Quadrant::classify(&entry.column_stats[col], v.numeric));
            }
            self.row_cells.push(self.cells.len() as u32);
            self.row_sigs.push(bits);
        }
        let last = *self.table_rows.last().unwrap();
        self.table_rows.push(last + entry.row_count);
        self.catalog.push(entry);
    }

    pub fn finish(self) -> Index {
        let IndexBuilder {
            policy,
            catalog,
            provisional,
            mut cells,
            table_rows,
            row_cells,
            row_sigs,
            ..
        } = self;
        // Renumber values in sorted order so ids are independent of arrival.
        let mut order: Vec<u32> = (0..provisional.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| provisional[a as usize].cmp(&provisional[b as usize]));
        let mut remap = vec![0u32; provisional.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut slots: Vec<Option<Box<str>>> = provisional.into_iter().map(Some).collect();
        let values: Vec<Box<str>> = order.iter().map(|&old| slots[old as usize].take().unwrap()).collect();
        for v in cells.value.iter_mut() {
            *v = remap[*v as usize];
        }
        let (posting_offsets, postings) = build_postings(values.len(), &cells.value);
        Index {
            normalization: policy,
            catalog,
            values,
            cells,
            table_rows,
            row_cells,
            row_sigs,
            posting_offsets,
            postings,
        }
    }
}

fn build_postings(value_count: usize, cell_values: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let mut offsets = vec![0u32; value_count + 1];
    for &v in cell_values {
        offsets[v as usize + 1] += 1;
    }
    for i in 0..value_count {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut postings = vec![0u32; cell_values.len()];
    for (cell, &v) in cell_values.iter().enumerate() {
        postings[cursor[v as usize] as usize] = cell as u32;
        cursor[v as usize] += 1;
    }
    (offsets, postings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(path: &str, header: &[&str], rows: &[&[&str]]) -> RawTable {
        RawTable {
            path: path.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    #[test]
    fn one_row_two_cells() {
        let idx = Index::build_from_tables(&[raw("t.csv", &["x", "y"], &[&["a", "b"]])], Normalization::Lower);
        assert_eq!(idx.cell_count(), 2);
        let sigs: Vec<_> = idx.row_signatures().collect();
        assert_eq!(sigs.len(), 1);
        assert_eq!(sigs[0].bits, cell_signature("a") | cell_signature("b"));
    }

    #[test]
    fn quadrants_follow_mean() {
        let idx = Index::build_from_tables(
            &[raw("t.csv", &["n"], &[&["1"], &["2"], &["3"], &["4"]])],
            Normalization::Lower,
        );
        let q: Vec<_> = idx.records().map(|r| r.quadrant.as_str()).collect();
        assert_eq!(q, ["F", "F", "T", "T"]);
    }

    #[test]
    fn text_cells_in_numeric_column_have_no_quadrant() {
        let idx = Index::build_from_tables(
            &[raw("t.csv", &["n"], &[&["1"], &["x"], &["3"]])],
            Normalization::Lower,
        );
        let q: Vec<_> = idx.records().map(|r| (r.value, r.quadrant)).collect();
        // mean over the parseable cells is 2
        assert_eq!(q, [("1", Quadrant::Low), ("x", Quadrant::None), ("3", Quadrant::High)]);
    }

    #[test]
    fn empty_table_has_no_cells_or_signatures() {
        let idx = Index::build_from_tables(&[raw("t.csv", &["a", "b"], &[&["", " "], &["", ""]])], Normalization::Lower);
        assert_eq!(idx.cell_count(), 0);
        assert_eq!(idx.signature_count(), 0);
        assert_eq!(idx.catalog()[0].row_count, 2);
    }

    #[test]
    fn lookup_and_fetch() {
        let idx = Index::build_from_tables(
            &[
                raw("a.csv", &["c0", "c1"], &[&["x", "q"], &["y", "x"]]),
                raw("b.csv", &["c0"], &[&["z"], &["x"]]),
            ],
            Normalization::Lower,
        );
        assert_eq!(idx.lookup_values(Vec::<&str>::new()).count(), 0);
        assert_eq!(idx.lookup_values(["nope"]).count(), 0);
        let hits: Vec<_> = idx.lookup_values(["x"]).map(|r| (r.table_id, r.row_id, r.column_id)).collect();
        assert_eq!(hits, [(0, 0, 0), (0, 1, 1), (1, 1, 0)]);

        assert!(idx.fetch_rows(0, &[]).unwrap().is_empty());
        let rows = idx.fetch_rows(0, &[0]).unwrap();
        assert_eq!(rows[0].cells, vec![(0, "x"), (1, "q")]);
        assert_eq!(rows[0].signature.bits, combined_signature(["x", "q"]));
        assert!(matches!(idx.fetch_rows(9, &[0]), Err(Error::NoSuchTable(9))));
    }

    #[test]
    fn postings_in_table_slices() {
        let idx = Index::build_from_tables(
            &[
                raw("a.csv", &["c"], &[&["x"]]),
                raw("b.csv", &["c"], &[&["y"]]),
                raw("c.csv", &["c", "d"], &[&["x", "x"]]),
            ],
            Normalization::Lower,
        );
        let p = idx.postings_of(idx.value_id("x").unwrap());
        assert_eq!(idx.postings_in_table(p, 0).0.len(), 1);
        assert_eq!(idx.postings_in_table(p, 1).0.len(), 0);
        assert_eq!(idx.postings_in_table(p, 2).0.len(), 2);
    }
}
