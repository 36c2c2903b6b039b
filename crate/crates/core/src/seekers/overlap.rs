// SPDX-License-Identifier: Apache-2.0

//! Single-column and keyword overlap.

use std::collections::HashMap;

use super::{normalized_set, scan_postings, ScanStats, SeekerKind, SeekerSpec};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::ranking::{Detail, RankedEntry, RankedTables};

/// Top-K `(table, column)` groups by distinct shared values.
pub fn seek_sc(index: &Index, spec: &SeekerSpec) -> Result<RankedTables> {
    expect_kind(spec, SeekerKind::Sc)?;
    super::seek(index, spec)
}

/// Top-K tables by distinct query values found in any column.
pub fn seek_keyword(index: &Index, spec: &SeekerSpec) -> Result<RankedTables> {
    expect_kind(spec, SeekerKind::Keyword)?;
    super::seek(index, spec)
}

fn expect_kind(spec: &SeekerSpec, kind: SeekerKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidParameter(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    Ok(())
}

/// Known value ids of the (single) query column.
fn query_value_ids(index: &Index, spec: &SeekerSpec) -> Result<Vec<u32>> {
    let values = normalized_set(index, &spec.query_columns[0]);
    if values.is_empty() {
        return Err(Error::EmptyQueryColumn);
    }
    Ok(values.iter().filter_map(|v| index.value_id(v)).collect())
}

pub(super) fn sc(index: &Index, spec: &SeekerSpec, stats: &mut ScanStats) -> Result<RankedTables> {
    let ids = query_value_ids(index, spec)?;
    // (table, column) -> (distinct matches, last value counted)
    let mut groups: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    for vid in ids {
        scan_postings(index, vid, spec.restriction.as_ref(), stats, |c| {
            let key = (index.cells.table[c], index.cells.column[c]);
            let slot = groups.entry(key).or_insert((0, u32::MAX));
            if slot.1 != vid {
                *slot = (slot.0 + 1, vid);
            }
        });
    }
    let entries = groups
        .into_iter()
        .map(|((t, c), (n, _))| RankedEntry::new(t, f64::from(n), Detail::Columns(vec![c])))
        .collect();
    Ok(RankedTables::top_k(entries, spec.k))
}

pub(super) fn keyword(index: &Index, spec: &SeekerSpec, stats: &mut ScanStats) -> Result<RankedTables> {
    let ids = query_value_ids(index, spec)?;
    let mut groups: HashMap<u32, (u32, u32)> = HashMap::new();
    for vid in ids {
        scan_postings(index, vid, spec.restriction.as_ref(), stats, |c| {
            let slot = groups.entry(index.cells.table[c]).or_insert((0, u32::MAX));
            if slot.1 != vid {
                *slot = (slot.0 + 1, vid);
            }
        });
    }
    let entries = groups
        .into_iter()
        .map(|(t, (n, _))| RankedEntry::new(t, f64::from(n), Detail::Columns(Vec::new())))
        .collect();
    Ok(RankedTables::top_k(entries, spec.k))
}
