// SPDX-License-Identifier: Apache-2.0

//! Set operators over seeker outputs.
//!
//! Every input is first reduced to one entry per table (its best entry). Score
//! provenance: intersection takes the last input's score, union the maximum,
//! difference the first input's, counter the number of inputs containing the
//! table.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{entry_order, RankedEntry, RankedTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerKind {
    Intersection,
    Union,
    Difference,
    Counter,
}

impl CombinerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CombinerKind::Intersection => "intersection",
            CombinerKind::Union => "union",
            CombinerKind::Difference => "difference",
            CombinerKind::Counter => "counter",
        }
    }

    /// Checks the number of inputs this combiner accepts.
    pub fn check_arity(self, got: usize) -> Result<()> {
        let (ok, expected) = match self {
            CombinerKind::Difference => (got == 2, "exactly 2"),
            CombinerKind::Intersection | CombinerKind::Union => (got >= 2, "at least 2"),
            CombinerKind::Counter => (got >= 1, "at least 1"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::CombinerArity {
                kind: self.as_str(),
                expected,
                got,
            })
        }
    }
}

impl fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombinerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "intersection" => Ok(CombinerKind::Intersection),
            "union" => Ok(CombinerKind::Union),
            "difference" => Ok(CombinerKind::Difference),
            "counter" => Ok(CombinerKind::Counter),
            other => Err(format!("unknown combiner kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombinerSpec {
    pub kind: CombinerKind,
    pub k: usize,
}

impl CombinerSpec {
    pub fn new(kind: CombinerKind, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(CombinerSpec { kind, k })
    }

    pub fn apply(&self, inputs: &[RankedTables]) -> Result<RankedTables> {
        combine(self.kind, inputs, self.k)
    }
}

pub fn combine(kind: CombinerKind, inputs: &[RankedTables], k: usize) -> Result<RankedTables> {
    kind.check_arity(inputs.len())?;
    Ok(match kind {
        CombinerKind::Intersection => combine_intersection(inputs, k),
        CombinerKind::Union => combine_union(inputs, k),
        CombinerKind::Difference => combine_difference(&inputs[0], &inputs[1], k),
        CombinerKind::Counter => combine_counter(inputs, k),
    })
}

fn table_set(r: &RankedTables) -> HashSet<u32> {
    r.iter().map(|e| e.table_id).collect()
}

fn sorted_top(mut entries: Vec<RankedEntry>, k: usize) -> RankedTables {
    entries.sort_by(entry_order);
    entries.truncate(k);
    RankedTables::from_ordered(entries)
}

/// Tables present in every input, scored by the last input.
pub fn combine_intersection(inputs: &[RankedTables], k: usize) -> RankedTables {
    let Some(last) = inputs.last() else {
        return RankedTables::new();
    };
    let others: Vec<HashSet<u32>> = inputs[..inputs.len() - 1].iter().map(table_set).collect();
    let entries = last
        .dedup_tables()
        .into_entries()
        .into_iter()
        .filter(|e| others.iter().all(|s| s.contains(&e.table_id)))
        .collect();
    sorted_top(entries, k)
}

/// Tables present in any input, scored by their maximum.
pub fn combine_union(inputs: &[RankedTables], k: usize) -> RankedTables {
    let mut best: HashMap<u32, RankedEntry> = HashMap::new();
    for input in inputs {
        for e in input.dedup_tables().into_entries() {
            match best.get(&e.table_id) {
                Some(cur) if entry_order(cur, &e).is_le() => {}
                _ => {
                    best.insert(e.table_id, e);
                }
            }
        }
    }
    sorted_top(best.into_values().collect(), k)
}

/// Tables of `first` absent from `second`, in `first`'s order.
pub fn combine_difference(first: &RankedTables, second: &RankedTables, k: usize) -> RankedTables {
    let exclude = table_set(second);
    RankedTables::from_ordered(
        first
            .dedup_tables()
            .into_entries()
            .into_iter()
            .filter(|e| !exclude.contains(&e.table_id))
            .take(k)
            .collect(),
    )
}

/// Tables ordered by how many inputs contain them, then by best rank in any
/// input, then by id. The score is the frequency.
pub fn combine_counter(inputs: &[RankedTables], k: usize) -> RankedTables {
    // table -> (frequency, best rank, entry at best rank)
    let mut counts: HashMap<u32, (u32, usize, RankedEntry)> = HashMap::new();
    for input in inputs {
        for (rank, e) in input.dedup_tables().into_entries().into_iter().enumerate() {
            match counts.get_mut(&e.table_id) {
                Some(slot) => {
                    slot.0 += 1;
                    if rank < slot.1 || (rank == slot.1 && entry_order(&e, &slot.2).is_lt()) {
                        slot.1 = rank;
                        slot.2 = e;
                    }
                }
                None => {
                    counts.insert(e.table_id, (1, rank, e));
                }
            }
        }
    }
    let mut rows: Vec<_> = counts.into_values().collect();
    rows.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.table_id.cmp(&b.2.table_id)));
    RankedTables::from_ordered(
        rows.into_iter()
            .take(k)
            .map(|(freq, _, e)| RankedEntry::new(e.table_id, f64::from(freq), e.detail))
            .collect(),
    )
}
