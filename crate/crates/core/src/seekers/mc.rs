// SPDX-License-Identifier: Apache-2.0

//! Multi-column overlap in three phases: an n-way posting join to find rows
//! holding a value from every query column, a row-signature subsumption
//! filter, and exact validation under one injective column mapping per table.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{normalized_set, scan_postings, ScanStats, SeekerKind, SeekerSpec};
use crate::error::{Error, Result};
use crate::index::{combined_signature, subsumes, Index};
use crate::ranking::{Detail, RankedEntry, RankedTables};

/// Row sets observed between the phases of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct McTrace {
    /// Rows joining on every query column, `(table, row)` ascending.
    pub candidate_rows: Vec<(u32, u32)>,
    /// Candidate rows whose signature subsumes at least one query tuple.
    pub surviving_rows: Vec<(u32, u32)>,
}

pub fn seek_mc(index: &Index, spec: &SeekerSpec) -> Result<RankedTables> {
    seek_mc_traced(index, spec, &mut ScanStats::default()).map(|(r, _)| r)
}

pub fn seek_mc_traced(index: &Index, spec: &SeekerSpec, stats: &mut ScanStats) -> Result<(RankedTables, McTrace)> {
    if spec.kind != SeekerKind::Mc {
        return Err(Error::InvalidParameter(format!("expected a mc spec, got {}", spec.kind)));
    }
    spec.validate()?;
    let mut trace = McTrace::default();
    let ranked = run(index, spec, stats, Some(&mut trace))?;
    Ok((ranked, trace))
}

struct QueryTuple {
    /// Value ids, or `None` if some value never occurs in the lake.
    ids: Option<Vec<u32>>,
    bits: u128,
}

/// Normalized, non-empty, deduplicated query tuples.
fn query_tuples(index: &Index, columns: &[Vec<String>]) -> Result<Vec<QueryTuple>> {
    let rows = columns[0].len();
    let mut distinct: BTreeSet<Vec<String>> = BTreeSet::new();
    for r in 0..rows {
        let tuple: Option<Vec<String>> = columns.iter().map(|c| index.normalize(&c[r])).collect();
        if let Some(t) = tuple {
            distinct.insert(t);
        }
    }
    if distinct.is_empty() {
        return Err(Error::EmptyQueryRelation);
    }
    Ok(distinct
        .into_iter()
        .map(|t| QueryTuple {
            ids: t.iter().map(|v| index.value_id(v)).collect(),
            bits: combined_signature(t.iter().map(String::as_str)),
        })
        .collect())
}

pub(super) fn run(
    index: &Index,
    spec: &SeekerSpec,
    stats: &mut ScanStats,
    trace: Option<&mut McTrace>,
) -> Result<RankedTables> {
    let arity = spec.query_columns.len();
    let tuples = query_tuples(index, &spec.query_columns)?;

    // Phase 1: rows with a hit in every query column.
    let mut hits: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    for (i, column) in spec.query_columns.iter().enumerate() {
        let i = i as u32;
        for value in normalized_set(index, column) {
            let Some(vid) = index.value_id(&value) else { continue };
            scan_postings(index, vid, spec.restriction.as_ref(), stats, |c| {
                let key = (index.cells.table[c], index.cells.row[c]);
                if i == 0 {
                    hits.entry(key).or_insert((1, 0));
                } else if let Some(slot) = hits.get_mut(&key) {
                    // only rows that matched every earlier column advance
                    if slot.0 == i && slot.1 != i {
                        *slot = (i + 1, i);
                    }
                }
            });
        }
    }
    let mut candidates: Vec<(u32, u32)> = hits
        .into_iter()
        .filter(|(_, (n, _))| *n as usize == arity)
        .map(|(k, _)| k)
        .collect();
    candidates.sort_unstable();

    // Phase 2: signature filter, remembering which tuples each row may hold.
    let mut survivors: BTreeMap<u32, Vec<(u32, Vec<usize>)>> = BTreeMap::new();
    for &(t, r) in &candidates {
        let bits = index.row_bits(t, r);
        let passing: Vec<usize> = tuples
            .iter()
            .enumerate()
            .filter(|(_, q)| subsumes(q.bits, bits))
            .map(|(i, _)| i)
            .collect();
        if !passing.is_empty() {
            survivors.entry(t).or_default().push((r, passing));
        }
    }
    if let Some(trace) = trace {
        trace.candidate_rows = candidates;
        trace.surviving_rows = survivors
            .iter()
            .flat_map(|(&t, rows)| rows.iter().map(move |(r, _)| (t, *r)))
            .collect();
    }

    // Phase 3: exact validation on fetched rows.
    let mut entries = Vec::new();
    for (table, rows) in survivors {
        stats.rows_fetched += rows.len() as u64;
        if let Some((mapping, count)) = best_mapping(index, table, &rows, &tuples, arity) {
            entries.push(RankedEntry::new(table, count as f64, Detail::Columns(mapping)));
        }
    }
    Ok(RankedTables::top_k(entries, spec.k))
}

/// The injective query-to-candidate column mapping that matches the most
/// distinct tuples; ties go to the lexicographically smallest mapping.
fn best_mapping(
    index: &Index,
    table: u32,
    rows: &[(u32, Vec<usize>)],
    tuples: &[QueryTuple],
    arity: usize,
) -> Option<(Vec<u32>, usize)> {
    let mut matched: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    let mut options: Vec<Vec<u32>> = vec![Vec::new(); arity];
    for (row, passing) in rows {
        let range = index.row_range(table, *row);
        let row_values = &index.cells.value[range.clone()];
        let row_columns = &index.cells.column[range];
        for &ti in passing {
            let Some(ids) = &tuples[ti].ids else { continue };
            for (i, &vid) in ids.iter().enumerate() {
                options[i].clear();
                options[i].extend(
                    row_values
                        .iter()
                        .zip(row_columns)
                        .filter(|(v, _)| **v == vid)
                        .map(|(_, c)| *c),
                );
            }
            if options.iter().any(Vec::is_empty) {
                continue;
            }
            let mut current = Vec::with_capacity(arity);
            assign(&options, &mut current, &mut |mapping| {
                matched.entry(mapping.to_vec()).or_default().push(ti);
            });
        }
    }
    matched
        .into_iter()
        .map(|(mapping, mut tuple_ids)| {
            tuple_ids.sort_unstable();
            tuple_ids.dedup();
            (mapping, tuple_ids.len())
        })
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
}

/// Enumerates injective choices, one column from each option list.
fn assign(options: &[Vec<u32>], current: &mut Vec<u32>, emit: &mut impl FnMut(&[u32])) {
    let i = current.len();
    if i == options.len() {
        emit(current);
        return;
    }
    for &c in &options[i] {
        if !current.contains(&c) {
            current.push(c);
            assign(options, current, emit);
            current.pop();
        }
    }
}
