// SPDX-License-Identifier: Apache-2.0

//! On-disk layout and the canonical dump.
//!
//! An index directory holds `catalog.json` and `alltables.bin`. The data file
//! is the cell relation itself (one fixed-width record per cell) preceded by
//! the value dictionary and followed by the per-row signatures. Access paths
//! are rebuilt on load.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::signature::{HASHES_PER_VALUE, SIGNATURE_BITS, SIGNATURE_HASH, SIGNATURE_SEEDS};
use super::{build_postings, Cells, Index, Quadrant};
use crate::error::{Error, Result};
use crate::ingest::{Normalization, TableCatalogEntry};

pub const FORMAT_VERSION: u32 = 1;
pub const CATALOG_FILE: &str = "catalog.json";
pub const DATA_FILE: &str = "alltables.bin";
const LOCK_FILE: &str = ".build.lock";
const MAGIC: &[u8; 8] = b"BLENDAT\0";
const DUMP_HEADER: &str = "cell_value,table_id,column_id,row_id,super_key_hex,quadrant";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureParams {
    pub bits: u32,
    pub hashes_per_value: usize,
    pub hash: String,
    pub seeds: Vec<u64>,
}

impl SignatureParams {
    fn current() -> Self {
        SignatureParams {
            bits: SIGNATURE_BITS,
            hashes_per_value: HASHES_PER_VALUE,
            hash: SIGNATURE_HASH.to_string(),
            seeds: SIGNATURE_SEEDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogFile {
    format_version: u32,
    normalization: Normalization,
    signature: SignatureParams,
    data_file: String,
    tables: Vec<TableCatalogEntry>,
}

/// Summary of an index build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub tables: usize,
    pub cells: usize,
    pub signatures: usize,
    pub distinct_values: usize,
    pub bytes: u64,
    pub warnings: Vec<String>,
}

impl BuildReport {
    pub(crate) fn new(index: &Index, warnings: Vec<String>) -> Self {
        BuildReport {
            tables: index.table_count(),
            cells: index.cell_count(),
            signatures: index.signature_count(),
            distinct_values: index.distinct_values(),
            bytes: 0,
            warnings,
        }
    }
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl Index {
    /// Persists the index into `dir`, returning the number of bytes written.
    /// Refuses to overwrite an existing index unless `force` is set.
    pub fn save(&self, dir: &Path, force: bool) -> Result<u64> {
        let catalog_path = dir.join(CATALOG_FILE);
        if catalog_path.exists() && !force {
            return Err(Error::IndexExists(dir.to_path_buf()));
        }
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let lock_path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Error::IndexLocked(dir.to_path_buf()))
            }
            Err(e) => return Err(Error::io(&lock_path, e)),
        }
        let _lock = LockGuard(lock_path);

        let data_tmp = dir.join(format!("{DATA_FILE}.tmp"));
        let catalog_tmp = dir.join(format!("{CATALOG_FILE}.tmp"));
        let written = self
            .write_data(&data_tmp)
            .and_then(|bytes| self.write_catalog(&catalog_tmp).map(|c| bytes + c))
            .and_then(|bytes| {
                fs::rename(&data_tmp, dir.join(DATA_FILE)).map_err(|e| Error::io(&data_tmp, e))?;
                fs::rename(&catalog_tmp, &catalog_path).map_err(|e| Error::io(&catalog_tmp, e))?;
                Ok(bytes)
            });
        if written.is_err() {
            let _ = fs::remove_file(&data_tmp);
            let _ = fs::remove_file(&catalog_tmp);
        }
        written
    }

    fn write_catalog(&self, path: &Path) -> Result<u64> {
        let file = CatalogFile {
            format_version: FORMAT_VERSION,
            normalization: self.normalization,
            signature: SignatureParams::current(),
            data_file: DATA_FILE.to_string(),
            tables: self.catalog.clone(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        Ok(text.len() as u64)
    }

    fn write_data(&self, path: &Path) -> Result<u64> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let mut n = 0u64;
        let mut put = |w: &mut BufWriter<File>, bytes: &[u8]| -> Result<()> {
            n += bytes.len() as u64;
            w.write_all(bytes).map_err(io)
        };
        put(&mut w, MAGIC)?;
        put(&mut w, &FORMAT_VERSION.to_le_bytes())?;
        put(&mut w, &(self.values.len() as u32).to_le_bytes())?;
        for v in &self.values {
            put(&mut w, &(v.len() as u32).to_le_bytes())?;
            put(&mut w, v.as_bytes())?;
        }
        let c = &self.cells;
        put(&mut w, &(c.len() as u64).to_le_bytes())?;
        for i in 0..c.len() {
            let mut rec = [0u8; 17];
            rec[0..4].copy_from_slice(&c.value[i].to_le_bytes());
            rec[4..8].copy_from_slice(&c.table[i].to_le_bytes());
            rec[8..12].copy_from_slice(&c.column[i].to_le_bytes());
            rec[12..16].copy_from_slice(&c.row[i].to_le_bytes());
            rec[16] = c.quadrant[i] as u8;
            put(&mut w, &rec)?;
        }
        let sigs: Vec<_> = self.row_signatures().collect();
        put(&mut w, &(sigs.len() as u64).to_le_bytes())?;
        for s in sigs {
            put(&mut w, &s.table_id.to_le_bytes())?;
            put(&mut w, &s.row_id.to_le_bytes())?;
            put(&mut w, &s.bits.to_le_bytes())?;
        }
        w.flush().map_err(io)?;
        w.into_inner().map_err(|e| io(e.into_error()))?.sync_all().map_err(io)?;
        Ok(n)
    }

    /// Loads an index written by [`Index::save`].
    pub fn open(dir: &Path) -> Result<Index> {
        let catalog_path = dir.join(CATALOG_FILE);
        let text = fs::read_to_string(&catalog_path).map_err(|e| Error::io(&catalog_path, e))?;
        let cat: CatalogFile = serde_json::from_str(&text)?;
        if cat.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(cat.format_version));
        }
        if cat.signature != SignatureParams::current() {
            return Err(Error::CorruptIndex("signature parameters differ from this build".into()));
        }
        for (i, t) in cat.tables.iter().enumerate() {
            if t.table_id as usize != i || t.column_names.len() != t.column_stats.len() {
                return Err(Error::CorruptIndex(format!("catalog entry {i} is inconsistent")));
            }
        }
        let data_path = dir.join(&cat.data_file);
        let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
        decode(cat, &bytes)
    }

    /// Writes the canonical CSV rendering of the cell relation.
    pub fn dump_canonical<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(DUMP_HEADER.split(','))?;
        for c in 0..self.cells.len() {
            let table = self.cells.table[c];
            let row = self.cells.row[c];
            w.write_record([
                self.value_str(self.cells.value[c]),
                &table.to_string(),
                &self.cells.column[c].to_string(),
                &row.to_string(),
                &format!("{:032x}", self.row_bits(table, row)),
                self.cells.quadrant[c].as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dump>", e))?;
        Ok(())
    }

    /// Canonical dump as a string.
    pub fn dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.dump_canonical(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dump is utf-8")
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::CorruptIndex("data file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptIndex(msg.into())
}

fn decode(cat: CatalogFile, bytes: &[u8]) -> Result<Index> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n_values = r.u32()? as usize;
    let mut values: Vec<Box<str>> = Vec::with_capacity(n_values);
    for _ in 0..n_values {
        let len = r.u32()? as usize;
        let s = std::str::from_utf8(r.take(len)?).map_err(|_| corrupt("non-utf8 value"))?;
        if values.last().is_some_and(|prev| **prev >= *s) {
            return Err(corrupt("value dictionary not strictly sorted"));
        }
        values.push(s.into());
    }

    let mut table_rows = Vec::with_capacity(cat.tables.len() + 1);
    table_rows.push(0u32);
    for t in &cat.tables {
        table_rows.push(table_rows.last().unwrap() + t.row_count);
    }
    let total_rows = *table_rows.last().unwrap() as usize;

    let n_cells = r.u64()? as usize;
    let mut cells = Cells {
        value: Vec::with_capacity(n_cells),
        table: Vec::with_capacity(n_cells),
        row: Vec::with_capacity(n_cells),
        column: Vec::with_capacity(n_cells),
        quadrant: Vec::with_capacity(n_cells),
    };
    let mut row_counts = vec![0u32; total_rows];
    let mut prev: Option<(u32, u32, u32)> = None;
    for _ in 0..n_cells {
        let rec = r.take(17)?;
        let field = |i: usize| u32::from_le_bytes(rec[i..i + 4].try_into().unwrap());
        let (value, table, column, row) = (field(0), field(4), field(8), field(12));
        let quadrant = Quadrant::from_u8(rec[16]).ok_or_else(|| corrupt("bad quadrant"))?;
        let entry = cat.tables.get(table as usize).ok_or_else(|| corrupt("cell table out of range"))?;
        if value as usize >= n_values || row >= entry.row_count || column as usize >= entry.column_names.len() {
            return Err(corrupt("cell field out of range"));
        }
        if prev.is_some_and(|p| p >= (table, row, column)) {
            return Err(corrupt("cells not in (table,row,column) order"));
        }
        prev = Some((table, row, column));
        row_counts[(table_rows[table as usize] + row) as usize] += 1;
        cells.value.push(value);
        cells.table.push(table);
        cells.row.push(row);
        cells.column.push(column);
        cells.quadrant.push(quadrant);
    }
    let mut row_cells = Vec::with_capacity(total_rows + 1);
    row_cells.push(0u32);
    for n in row_counts {
        row_cells.push(row_cells.last().unwrap() + n);
    }

    let mut row_sigs = vec![0u128; total_rows];
    let n_sigs = r.u64()? as usize;
    for _ in 0..n_sigs {
        let (table, row, bits) = (r.u32()?, r.u32()?, r.u128()?);
        let entry = cat.tables.get(table as usize).ok_or_else(|| corrupt("signature table out of range"))?;
        if row >= entry.row_count {
            return Err(corrupt("signature row out of range"));
        }
        row_sigs[(table_rows[table as usize] + row) as usize] = bits;
    }
    if r.pos != bytes.len() {
        return Err(corrupt("trailing bytes in data file"));
    }

    let (posting_offsets, postings) = build_postings(values.len(), &cells.value);
    Ok(Index {
        normalization: cat.normalization,
        catalog: cat.tables,
        values,
        cells,
        table_rows,
        row_cells,
        row_sigs,
        posting_offsets,
        postings,
    })
}
