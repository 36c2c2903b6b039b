// SPDX-License-Identifier: Apache-2.0

//! Ranked result lists and the single total order every component sorts by.
//!
//! Order: score descending, then table id ascending, then the entry's detail
//! column ids ascending. Brute-force oracles import the same comparator so
//! that equality checks can be exact.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// `k` value meaning "no limit".
pub const UNLIMITED: usize = usize::MAX;

/// Per-seeker payload explaining an entry's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detail {
    /// Matched candidate columns: one for single-column overlap, the
    /// query-column-to-candidate-column mapping for multi-column overlap,
    /// none for keyword search.
    Columns(Vec<u32>),
    Correlation {
        key_column: u32,
        num_column: u32,
        qcr: f64,
        agree: u64,
        disagree: u64,
    },
}

impl Detail {
    pub fn columns(&self) -> Vec<u32> {
        match self {
            Detail::Columns(c) => c.clone(),
            Detail::Correlation {
                key_column,
                num_column,
                ..
            } => vec![*key_column, *num_column],
        }
    }

    fn cmp_columns(&self, other: &Detail) -> Ordering {
        match (self, other) {
            (Detail::Columns(a), Detail::Columns(b)) => a.cmp(b),
            _ => self.columns().cmp(&other.columns()),
        }
    }
}

impl fmt::Display for Detail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detail::Columns(cols) => {
                for (i, c) in cols.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            Detail::Correlation {
                key_column,
                num_column,
                qcr,
                agree,
                disagree,
            } => write!(
                f,
                "key_col={key_column};num_col={num_column};qcr={qcr};agree={agree};disagree={disagree}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub table_id: u32,
    pub score: f64,
    pub detail: Detail,
}

impl RankedEntry {
    pub fn new(table_id: u32, score: f64, detail: Detail) -> Self {
        RankedEntry {
            table_id,
            score,
            detail,
        }
    }
}

/// The shared total order.
pub fn entry_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.table_id.cmp(&b.table_id))
        .then_with(|| a.detail.cmp_columns(&b.detail))
}

/// An ordered, length-bounded list of ranked tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedTables {
    entries: Vec<RankedEntry>,
}

impl RankedTables {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sorts by [`entry_order`] and keeps the first `k`.
    pub fn top_k(mut entries: Vec<RankedEntry>, k: usize) -> Self {
        if k < entries.len() {
            entries.select_nth_unstable_by(k, entry_order);
            entries.truncate(k);
        }
        entries.sort_by(entry_order);
        RankedTables { entries }
    }

    /// Wraps entries that are already in final order.
    pub fn from_ordered(entries: Vec<RankedEntry>) -> Self {
        RankedTables { entries }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<RankedEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RankedEntry> {
        self.entries.iter()
    }

    /// Table ids in list order, duplicates included.
    pub fn table_ids(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.table_id).collect()
    }

    /// Keeps the first (best) entry of each table.
    pub fn dedup_tables(&self) -> RankedTables {
        let mut seen = HashSet::new();
        RankedTables {
            entries: self.entries.iter().filter(|e| seen.insert(e.table_id)).cloned().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a RankedTables {
    type Item = &'a RankedEntry;
    type IntoIter = std::slice::Iter<'a, RankedEntry>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}
