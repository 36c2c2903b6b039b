// SPDX-License-Identifier: Apache-2.0

//! Brute-force reference answers computed by scanning the raw lake.
//!
//! Only value normalization, the decimal grammar and the shared ranking order
//! come from the engine crate; grouping, matching and scoring are redone here
//! from the table contents.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use blend_core::ingest::parse_decimal;
use blend_core::ranking::entry_order;
use blend_core::{normalize_value, Detail, Normalization, RankedEntry, RankedTables, Restriction};

use crate::lake::{ToyLake, ToyTable};

/// The lake as normalized cells, `None` for empty ones.
pub struct OracleLake<'a> {
    pub lake: &'a ToyLake,
    pub policy: Normalization,
    cells: Vec<Vec<Vec<Option<String>>>>,
}

impl<'a> OracleLake<'a> {
    pub fn new(lake: &'a ToyLake, policy: Normalization) -> Self {
        let cells = lake
            .tables
            .iter()
            .map(|t| {
                (0..t.rows.len())
                    .map(|r| (0..t.width()).map(|c| norm(t.cell(r, c), policy)).collect())
                    .collect()
            })
            .collect();
        OracleLake { lake, policy, cells }
    }

    fn admitted(&self, restriction: Option<&Restriction>) -> impl Iterator<Item = (u32, &ToyTable)> + '_ {
        let restriction = restriction.cloned();
        self.lake
            .tables
            .iter()
            .enumerate()
            .map(|(i, t)| (i as u32, t))
            .filter(move |(i, _)| restriction.as_ref().is_none_or(|r| r.admits(*i)))
    }

    pub fn cell(&self, table: u32, row: usize, col: usize) -> Option<&str> {
        self.cells[table as usize][row][col].as_deref()
    }

    fn norm_set(&self, values: &[String]) -> BTreeSet<String> {
        values.iter().filter_map(|v| norm(v, self.policy)).collect()
    }

    /// Quadrant flag of every cell: `Some(true)` at or above the column mean,
    /// `Some(false)` below it, `None` for text cells and non-numeric columns.
    fn quadrants(&self, table: u32) -> Vec<Vec<Option<bool>>> {
        let t = &self.cells[table as usize];
        let width = self.lake.tables[table as usize].width();
        let mut flags = vec![vec![None; width]; t.len()];
        for c in 0..width {
            let present: Vec<&str> = t.iter().filter_map(|r| r[c].as_deref()).collect();
            let mut nums: Vec<f64> = present.iter().filter_map(|v| parse_decimal(v)).collect();
            if present.is_empty() || nums.len() * 2 < present.len() {
                continue;
            }
            nums.sort_by(f64::total_cmp);
            let mean = nums.iter().sum::<f64>() / nums.len() as f64;
            for (r, row) in t.iter().enumerate() {
                if let Some(x) = row[c].as_deref().and_then(parse_decimal) {
                    flags[r][c] = Some(x >= mean);
                }
            }
        }
        flags
    }
}

fn norm(raw: &str, policy: Normalization) -> Option<String> {
    normalize_value(raw, policy).map(|v| v.text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    EmptyQuery,
    NonNumericTarget,
}

/// Distinct query values per (table, column).
pub fn oracle_sc(
    o: &OracleLake,
    query: &[String],
    k: usize,
    restriction: Option<&Restriction>,
) -> Result<RankedTables, OracleError> {
    let q = o.norm_set(query);
    if q.is_empty() {
        return Err(OracleError::EmptyQuery);
    }
    let mut entries = Vec::new();
    for (id, t) in o.admitted(restriction) {
        for c in 0..t.width() {
            let col: HashSet<&str> = (0..t.rows.len()).filter_map(|r| o.cell(id, r, c)).collect();
            let n = q.iter().filter(|v| col.contains(v.as_str())).count();
            if n > 0 {
                entries.push(RankedEntry::new(id, n as f64, Detail::Columns(vec![c as u32])));
            }
        }
    }
    Ok(RankedTables::top_k(entries, k))
}

/// Distinct query values anywhere in a table.
pub fn oracle_keyword(
    o: &OracleLake,
    query: &[String],
    k: usize,
    restriction: Option<&Restriction>,
) -> Result<RankedTables, OracleError> {
    let q = o.norm_set(query);
    if q.is_empty() {
        return Err(OracleError::EmptyQuery);
    }
    let mut entries = Vec::new();
    for (id, t) in o.admitted(restriction) {
        let all: HashSet<&str> = (0..t.rows.len())
            .flat_map(|r| (0..t.width()).map(move |c| (r, c)))
            .filter_map(|(r, c)| o.cell(id, r, c))
            .collect();
        let n = q.iter().filter(|v| all.contains(v.as_str())).count();
        if n > 0 {
            entries.push(RankedEntry::new(id, n as f64, Detail::Columns(Vec::new())));
        }
    }
    Ok(RankedTables::top_k(entries, k))
}

/// Distinct, fully non-empty normalized query tuples.
pub fn query_tuples(policy: Normalization, columns: &[Vec<String>]) -> BTreeSet<Vec<String>> {
    (0..columns[0].len())
        .filter_map(|r| columns.iter().map(|c| norm(&c[r], policy)).collect::<Option<Vec<_>>>())
        .collect()
}

/// Every injective mapping of `arity` query columns onto `width` columns, in
/// lexicographic order.
pub fn injective_mappings(arity: usize, width: usize) -> Vec<Vec<u32>> {
    fn go(arity: usize, width: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == arity {
            out.push(cur.clone());
            return;
        }
        for c in 0..width as u32 {
            if !cur.contains(&c) {
                cur.push(c);
                go(arity, width, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(arity, width, &mut Vec::new(), &mut out);
    out
}

/// Best mapping per table by exhaustive enumeration: the most distinct query
/// tuples found row-wise, ties to the lexicographically smallest mapping.
pub fn oracle_mc(
    o: &OracleLake,
    columns: &[Vec<String>],
    k: usize,
    restriction: Option<&Restriction>,
) -> Result<RankedTables, OracleError> {
    let tuples = query_tuples(o.policy, columns);
    if tuples.is_empty() {
        return Err(OracleError::EmptyQuery);
    }
    let arity = columns.len();
    let mut entries = Vec::new();
    for (id, t) in o.admitted(restriction) {
        let mut best: Option<(usize, Vec<u32>)> = None;
        for mapping in injective_mappings(arity, t.width()) {
            let mut found: HashSet<Vec<&str>> = HashSet::new();
            for r in 0..t.rows.len() {
                let row: Option<Vec<&str>> = mapping.iter().map(|&c| o.cell(id, r, c as usize)).collect();
                if let Some(row) = row {
                    if tuples.contains(&row.iter().map(|s| s.to_string()).collect::<Vec<_>>()) {
                        found.insert(row);
                    }
                }
            }
            let n = found.len();
            if n > 0 && best.as_ref().is_none_or(|(b, _)| n > *b) {
                best = Some((n, mapping));
            }
        }
        if let Some((n, mapping)) = best {
            entries.push(RankedEntry::new(id, n as f64, Detail::Columns(mapping)));
        }
    }
    Ok(RankedTables::top_k(entries, k))
}

/// True when some query tuple sits in the row under an injective placement.
pub fn row_holds_tuple(o: &OracleLake, table: u32, row: usize, tuples: &BTreeSet<Vec<String>>) -> bool {
    let width = o.lake.tables[table as usize].width();
    let arity = tuples.iter().next().map_or(0, Vec::len);
    injective_mappings(arity, width).iter().any(|m| {
        let vals: Option<Vec<String>> = m.iter().map(|&c| o.cell(table, row, c as usize).map(str::to_string)).collect();
        vals.is_some_and(|v| tuples.contains(&v))
    })
}

/// Quadrant-count-ratio groups computed per candidate row.
pub fn oracle_corr(
    o: &OracleLake,
    key: &[String],
    target: &[String],
    sample: Option<u32>,
    min_support: u64,
    k: usize,
    restriction: Option<&Restriction>,
) -> Result<RankedTables, OracleError> {
    let pairs: Vec<(String, f64)> = key
        .iter()
        .zip(target)
        .filter_map(|(k, t)| Some((norm(k, o.policy)?, parse_decimal(t.trim())?)))
        .collect();
    if pairs.len() < 2 {
        return Err(OracleError::NonNumericTarget);
    }
    let mut ts: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    ts.sort_by(f64::total_cmp);
    let mean = ts.iter().sum::<f64>() / ts.len() as f64;
    // key -> (seen at or above mean, seen below)
    let mut classes: HashMap<String, (bool, bool)> = HashMap::new();
    for (k, t) in pairs {
        let e = classes.entry(k).or_default();
        if t >= mean {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }

    let mut groups: BTreeMap<(u32, u32, u32), (u64, u64)> = BTreeMap::new();
    for (id, t) in o.admitted(restriction) {
        let quad = o.quadrants(id);
        let rows = t.rows.len().min(sample.map_or(usize::MAX, |h| h as usize));
        for (r, quad_row) in quad.iter().enumerate().take(rows) {
            for kc in 0..t.width() {
                let Some((hi, lo)) = o.cell(id, r, kc).and_then(|v| classes.get(v)) else { continue };
                for (nc, q) in quad_row.iter().enumerate() {
                    let Some(q) = *q else { continue };
                    if nc == kc {
                        continue;
                    }
                    let g = groups.entry((id, kc as u32, nc as u32)).or_default();
                    for (class_present, class_high) in [(*hi, true), (*lo, false)] {
                        if class_present {
                            if q == class_high {
                                g.0 += 1;
                            } else {
                                g.1 += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let entries = groups
        .into_iter()
        .filter(|(_, (a, d))| a + d >= min_support.max(1))
        .map(|((table, key_column, num_column), (agree, disagree))| {
            let qcr = (agree as f64 - disagree as f64) / (agree + disagree) as f64;
            RankedEntry::new(
                table,
                qcr.abs(),
                Detail::Correlation {
                    key_column,
                    num_column,
                    qcr,
                    agree,
                    disagree,
                },
            )
        })
        .collect();
    Ok(RankedTables::top_k(entries, k))
}

/// Pearson correlation of paired samples; `None` when either side is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Tables present in every input, scored and ordered by the last one.
pub fn oracle_intersection(inputs: &[RankedTables], k: usize) -> RankedTables {
    let Some(last) = inputs.last() else {
        return RankedTables::new();
    };
    let sets: Vec<HashSet<u32>> = inputs.iter().map(|r| r.iter().map(|e| e.table_id).collect()).collect();
    let mut seen = HashSet::new();
    let mut best: Vec<RankedEntry> = Vec::new();
    let mut sorted: Vec<&RankedEntry> = last.iter().collect();
    sorted.sort_by(|a, b| entry_order(a, b));
    for e in sorted {
        if seen.insert(e.table_id) && sets.iter().all(|s| s.contains(&e.table_id)) {
            best.push(e.clone());
        }
    }
    RankedTables::top_k(best, k)
}

/// Runs seekers one after another, each limited to the tables every earlier
/// one returned, then intersects. An empty running set ends the run early.
pub fn oracle_sequential_intersection(
    seekers: &mut dyn FnMut(usize, Option<&Restriction>) -> RankedTables,
    count: usize,
    k: usize,
) -> RankedTables {
    let mut outputs = Vec::with_capacity(count);
    let mut surviving: Option<BTreeSet<u32>> = None;
    for i in 0..count {
        let restriction = surviving.clone().map(Restriction::In);
        let out = seekers(i, restriction.as_ref());
        let tables: BTreeSet<u32> = out.iter().map(|e| e.table_id).collect();
        let next: BTreeSet<u32> = match surviving {
            None => tables,
            Some(s) => s.intersection(&tables).copied().collect(),
        };
        outputs.push(out);
        if next.is_empty() {
            return RankedTables::new();
        }
        surviving = Some(next);
    }
    oracle_intersection(&outputs, k)
}

/// Frequency-ranked union of table sets, as the union plan's counter ranks.
pub fn oracle_counter(inputs: &[RankedTables], k: usize) -> Vec<(u32, usize)> {
    let mut freq: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for input in inputs {
        let mut seen = HashSet::new();
        let mut pos = 0;
        for e in input.iter() {
            if seen.insert(e.table_id) {
                let slot = freq.entry(e.table_id).or_insert((0, usize::MAX));
                slot.0 += 1;
                slot.1 = slot.1.min(pos);
                pos += 1;
            }
        }
    }
    let mut v: Vec<(u32, usize, usize)> = freq.into_iter().map(|(t, (f, r))| (t, f, r)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
    v.into_iter().take(k).map(|(t, f, _)| (t, f)).collect()
}
