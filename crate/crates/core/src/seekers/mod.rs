// SPDX-License-Identifier: Apache-2.0

//! The four atomic top-K search operators.
//!
//! * single-column overlap (`sc`): distinct query values shared with a column
//! * keyword: distinct query values found anywhere in a table
//! * multi-column overlap (`mc`): query tuples contained row-wise under one
//!   consistent column mapping
//! * correlation (`corr`): quadrant count ratio against a target column

mod corr;
mod mc;
mod overlap;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use corr::seek_corr;
pub use mc::{seek_mc, seek_mc_traced, McTrace};
pub use overlap::{seek_keyword, seek_sc};

use crate::error::{Error, Result};
use crate::index::Index;
use crate::ranking::RankedTables;

pub const DEFAULT_SAMPLE: u32 = 256;
pub const DEFAULT_MIN_SUPPORT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeekerKind {
    Sc,
    Keyword,
    Mc,
    Corr,
}

impl SeekerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeekerKind::Sc => "sc",
            SeekerKind::Keyword => "keyword",
            SeekerKind::Mc => "mc",
            SeekerKind::Corr => "corr",
        }
    }

    /// Static cost class used to order seekers inside an execution group;
    /// lower runs first.
    pub fn cost_class(self) -> u8 {
        match self {
            SeekerKind::Keyword => 0,
            SeekerKind::Sc => 1,
            SeekerKind::Corr => 2,
            SeekerKind::Mc => 3,
        }
    }
}

impl fmt::Display for SeekerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeekerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sc" => Ok(SeekerKind::Sc),
            "keyword" => Ok(SeekerKind::Keyword),
            "mc" => Ok(SeekerKind::Mc),
            "corr" => Ok(SeekerKind::Corr),
            other => Err(format!("unknown seeker kind `{other}`")),
        }
    }
}

/// Candidate-table restriction injected by the optimizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Restriction {
    In(BTreeSet<u32>),
    NotIn(BTreeSet<u32>),
}

impl Restriction {
    #[inline]
    pub fn admits(&self, table_id: u32) -> bool {
        match self {
            Restriction::In(s) => s.contains(&table_id),
            Restriction::NotIn(s) => !s.contains(&table_id),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Restriction::In(s) | Restriction::NotIn(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Declarative description of one seeker invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeekerSpec {
    pub kind: SeekerKind,
    /// Raw query columns. `sc`/`keyword`: one; `corr`: key then target;
    /// `mc`: two or more of equal length.
    pub query_columns: Vec<Vec<String>>,
    pub k: usize,
    /// Correlation only: rows with `row_id < sample` are considered; `None`
    /// means every row.
    pub sample: Option<u32>,
    /// Correlation only: minimum joined pairs for a ranked group.
    pub min_support: u64,
    pub restriction: Option<Restriction>,
}

impl SeekerSpec {
    fn base(kind: SeekerKind, query_columns: Vec<Vec<String>>, k: usize) -> Result<Self> {
        let spec = SeekerSpec {
            kind,
            query_columns,
            k,
            sample: Some(DEFAULT_SAMPLE),
            min_support: DEFAULT_MIN_SUPPORT,
            restriction: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sc(values: Vec<String>, k: usize) -> Result<Self> {
        Self::base(SeekerKind::Sc, vec![values], k)
    }

    pub fn keyword(values: Vec<String>, k: usize) -> Result<Self> {
        Self::base(SeekerKind::Keyword, vec![values], k)
    }

    pub fn mc(columns: Vec<Vec<String>>, k: usize) -> Result<Self> {
        Self::base(SeekerKind::Mc, columns, k)
    }

    pub fn corr(key: Vec<String>, target: Vec<String>, k: usize) -> Result<Self> {
        Self::base(SeekerKind::Corr, vec![key, target], k)
    }

    pub fn new(kind: SeekerKind, query_columns: Vec<Vec<String>>, k: usize) -> Result<Self> {
        Self::base(kind, query_columns, k)
    }

    pub fn with_sample(mut self, sample: Option<u32>) -> Self {
        self.sample = sample;
        self
    }

    pub fn with_min_support(mut self, min_support: u64) -> Self {
        self.min_support = min_support;
        self
    }

    pub fn with_restriction(mut self, restriction: Option<Restriction>) -> Self {
        self.restriction = restriction;
        self
    }

    /// Checks arity, column lengths and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let got = self.query_columns.len();
        let (ok, expected) = match self.kind {
            SeekerKind::Sc | SeekerKind::Keyword => (got == 1, "exactly 1"),
            SeekerKind::Corr => (got == 2, "exactly 2 (key, target)"),
            SeekerKind::Mc => (got >= 2, "at least 2"),
        };
        if !ok {
            return Err(Error::Arity {
                kind: self.kind.as_str(),
                expected,
                got,
            });
        }
        if matches!(self.kind, SeekerKind::Mc | SeekerKind::Corr) {
            let len = self.query_columns[0].len();
            if self.query_columns.iter().any(|c| c.len() != len) {
                return Err(Error::RaggedQuery);
            }
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.sample == Some(0) {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        Ok(())
    }

    /// Total number of query values, the tie key for cost ordering.
    pub fn query_size(&self) -> usize {
        self.query_columns.iter().map(Vec::len).sum()
    }
}

/// Work counters for one or more seeker runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    /// Posting entries visited, including binary-search probes.
    pub postings_scanned: u64,
    /// Rows materialized from the table/row access path.
    pub rows_fetched: u64,
}

impl ScanStats {
    pub fn rows_scanned(&self) -> u64 {
        self.postings_scanned + self.rows_fetched
    }

    pub fn add(&mut self, other: ScanStats) {
        self.postings_scanned += other.postings_scanned;
        self.rows_fetched += other.rows_fetched;
    }
}

/// Runs any seeker.
pub fn seek(index: &Index, spec: &SeekerSpec) -> Result<RankedTables> {
    seek_with_stats(index, spec, &mut ScanStats::default())
}

pub fn seek_with_stats(index: &Index, spec: &SeekerSpec, stats: &mut ScanStats) -> Result<RankedTables> {
    spec.validate()?;
    match spec.kind {
        SeekerKind::Sc => overlap::sc(index, spec, stats),
        SeekerKind::Keyword => overlap::keyword(index, spec, stats),
        SeekerKind::Mc => mc::run(index, spec, stats, None),
        SeekerKind::Corr => corr::run(index, spec, stats),
    }
}

/// Visits the posting entries (cell positions) of one value that pass the
/// restriction. With a small `IN` list the table ranges are located by binary
/// search instead of scanning the whole list.
pub(crate) fn scan_postings(
    index: &Index,
    value_id: u32,
    restriction: Option<&Restriction>,
    stats: &mut ScanStats,
    mut visit: impl FnMut(usize),
) {
    let postings = index.postings_of(value_id);
    match restriction {
        None => {
            stats.postings_scanned += postings.len() as u64;
            postings.iter().for_each(|&c| visit(c as usize));
        }
        Some(Restriction::In(tables)) if seek_is_cheaper(tables.len(), postings.len()) => {
            for &t in tables {
                let (slice, probes) = index.postings_in_table(postings, t);
                stats.postings_scanned += (slice.len() + probes) as u64;
                slice.iter().for_each(|&c| visit(c as usize));
            }
        }
        Some(r) => {
            stats.postings_scanned += postings.len() as u64;
            for &c in postings {
                if r.admits(index.cells.table[c as usize]) {
                    visit(c as usize);
                }
            }
        }
    }
}

fn seek_is_cheaper(tables: usize, postings: usize) -> bool {
    let probes = 2 * (usize::BITS - postings.leading_zeros()) as usize;
    tables.saturating_mul(probes) < postings
}

/// Normalizes, drops empties and deduplicates one query column.
pub(crate) fn normalized_set(index: &Index, values: &[String]) -> BTreeSet<String> {
    values.iter().filter_map(|v| index.normalize(v)).collect()
}
