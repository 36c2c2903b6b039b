// SPDX-License-Identifier: Apache-2.0

//! Correlation search with the quadrant count ratio.
//!
//! Query keys are split by whether their paired target is at or above the
//! target mean (`T`) or below it (`F`); a key seen with both keeps both
//! classes. Each candidate cell sharing a row with a matching key cell and
//! carrying a quadrant flag counts as agreement when the classes line up and
//! as disagreement otherwise. `qcr = (agree - disagree) / (agree + disagree)`.

use std::collections::HashMap;

use super::{scan_postings, ScanStats, SeekerKind, SeekerSpec};
use crate::error::{Error, Result};
use crate::index::{Index, Quadrant};
use crate::ingest::parse_decimal;
use crate::ranking::{Detail, RankedEntry, RankedTables};

pub fn seek_corr(index: &Index, spec: &SeekerSpec) -> Result<RankedTables> {
    if spec.kind != SeekerKind::Corr {
        return Err(Error::InvalidParameter(format!("expected a corr spec, got {}", spec.kind)));
    }
    super::seek(index, spec)
}

/// Classes a key was observed with.
#[derive(Debug, Clone, Copy, Default)]
struct KeyClasses {
    high: bool,
    low: bool,
}

/// Keys paired with numeric targets, classified against the target mean.
/// Rows with an empty key or a non-numeric target are dropped.
pub(crate) fn classify_query<'a>(
    normalize: impl Fn(&str) -> Option<String>,
    keys: &'a [String],
    targets: &'a [String],
) -> Result<Vec<(String, bool)>> {
    let pairs: Vec<(String, f64)> = keys
        .iter()
        .zip(targets)
        .filter_map(|(k, t)| Some((normalize(k)?, parse_decimal(t.trim())?)))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::NonNumericTarget);
    }
    let mut sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(pairs.into_iter().map(|(k, t)| (k, t >= mean)).collect())
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    agree: u64,
    disagree: u64,
}

pub(super) fn run(index: &Index, spec: &SeekerSpec, stats: &mut ScanStats) -> Result<RankedTables> {
    let classified = classify_query(|v| index.normalize(v), &spec.query_columns[0], &spec.query_columns[1])?;
    let mut keys: HashMap<u32, KeyClasses> = HashMap::new();
    for (key, high) in classified {
        let Some(vid) = index.value_id(&key) else { continue };
        let slot = keys.entry(vid).or_default();
        slot.high |= high;
        slot.low |= !high;
    }
    let mut key_ids: Vec<_> = keys.into_iter().collect();
    key_ids.sort_unstable_by_key(|(vid, _)| *vid);

    let sample = spec.sample.unwrap_or(u32::MAX);
    let mut groups: HashMap<(u32, u32, u32), Tally> = HashMap::new();
    let mut fetched = 0u64;
    for (vid, classes) in key_ids {
        scan_postings(index, vid, spec.restriction.as_ref(), stats, |key_cell| {
            let row = index.cells.row[key_cell];
            if row >= sample {
                return;
            }
            let table = index.cells.table[key_cell];
            let key_col = index.cells.column[key_cell];
            fetched += 1;
            for c in index.row_range(table, row) {
                let num_col = index.cells.column[c];
                let quadrant = index.cells.quadrant[c];
                if num_col == key_col || quadrant == Quadrant::None {
                    continue;
                }
                let tally = groups.entry((table, key_col, num_col)).or_default();
                let high = quadrant == Quadrant::High;
                if classes.high {
                    if high {
                        tally.agree += 1;
                    } else {
                        tally.disagree += 1;
                    }
                }
                if classes.low {
                    if high {
                        tally.disagree += 1;
                    } else {
                        tally.agree += 1;
                    }
                }
            }
        });
    }
    stats.rows_fetched += fetched;

    let entries = groups
        .into_iter()
        .filter(|(_, t)| t.agree + t.disagree >= spec.min_support.max(1))
        .map(|((table, key_column, num_column), t)| {
            let qcr = qcr(t.agree, t.disagree);
            RankedEntry::new(
                table,
                qcr.abs(),
                Detail::Correlation {
                    key_column,
                    num_column,
                    qcr,
                    agree: t.agree,
                    disagree: t.disagree,
                },
            )
        })
        .collect();
    Ok(RankedTables::top_k(entries, spec.k))
}

/// `(agree - disagree) / (agree + disagree)`; zero when nothing was counted.
pub fn qcr(agree: u64, disagree: u64) -> f64 {
    let n = agree + disagree;
    if n == 0 {
        return 0.0;
    }
    (agree as f64 - disagree as f64) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Normalization, RawTable};
    use crate::ranking::UNLIMITED;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn candidate(path: &str, keys: &[&str], nums: &[&str]) -> RawTable {
        RawTable {
            path: path.into(),
            header: s(&["key", "num"]),
            rows: keys.iter().zip(nums).map(|(k, n)| s(&[k, n])).collect(),
        }
    }

    fn query() -> SeekerSpec {
        SeekerSpec::corr(s(&["k1", "k2", "k3", "k4"]), s(&["1", "2", "3", "4"]), 10)
            .unwrap()
            .with_sample(None)
    }

    fn single(idx: &Index) -> (f64, u64, u64) {
        let r = seek_corr(idx, &query()).unwrap();
        assert_eq!(r.len(), 1, "{r:?}");
        match r.entries()[0].detail {
            Detail::Correlation { qcr, agree, disagree, .. } => (qcr, agree, disagree),
            _ => unreachable!(),
        }
    }

    #[test]
    fn perfect_agreement() {
        let idx = Index::build_from_tables(
            &[candidate("c.csv", &["k1", "k2", "k3", "k4"], &["10", "20", "30", "40"])],
            Normalization::Lower,
        );
        assert_eq!(single(&idx), (1.0, 4, 0));
    }

    #[test]
    fn perfect_disagreement() {
        let idx = Index::build_from_tables(
            &[candidate("c.csv", &["k1", "k2", "k3", "k4"], &["40", "30", "20", "10"])],
            Normalization::Lower,
        );
        assert_eq!(single(&idx), (-1.0, 0, 4));
    }

    #[test]
    fn balanced_classes_give_zero() {
        // query classes F,F,T,T; candidate quadrants F,T,F,T (mean 25)
        // -> agree, disagree, disagree, agree
        let idx = Index::build_from_tables(
            &[candidate("c.csv", &["k1", "k2", "k3", "k4"], &["10", "30", "20", "40"])],
            Normalization::Lower,
        );
        assert_eq!(single(&idx), (0.0, 2, 2));
    }

    #[test]
    fn min_support_and_sample() {
        let idx = Index::build_from_tables(
            &[candidate("c.csv", &["k1", "k2", "k3", "k4"], &["10", "20", "30", "40"])],
            Normalization::Lower,
        );
        let spec = query().with_sample(Some(2));
        assert!(seek_corr(&idx, &spec).unwrap().is_empty(), "only 2 pairs < m=3");
        let spec = spec.with_min_support(2);
        let r = seek_corr(&idx, &spec).unwrap();
        assert!(matches!(r.entries()[0].detail, Detail::Correlation { agree: 2, disagree: 0, .. }));
    }

    #[test]
    fn key_with_both_classes_counts_both() {
        let idx = Index::build_from_tables(
            &[candidate("c.csv", &["k1", "k2", "k3"], &["10", "20", "30"])],
            Normalization::Lower,
        );
        // k1 appears with 1 (F) and 9 (T); mean = 4.25
        let spec = SeekerSpec::corr(s(&["k1", "k1", "k2", "k3"]), s(&["1", "9", "2", "5"]), UNLIMITED)
            .unwrap()
            .with_sample(None);
        let r = seek_corr(&idx, &spec).unwrap();
        // quadrants (mean 20): k1 F, k2 T, k3 T
        // k1 {T,F} x F -> 1 agree 1 disagree; k2 F x T -> disagree; k3 T x T -> agree
        assert!(matches!(r.entries()[0].detail, Detail::Correlation { agree: 2, disagree: 2, .. }));
    }

    #[test]
    fn non_numeric_target() {
        let idx = Index::build_from_tables(&[], Normalization::Lower);
        let spec = SeekerSpec::corr(s(&["a", "b"]), s(&["x", "y"]), 5).unwrap();
        assert!(matches!(seek_corr(&idx, &spec), Err(Error::NonNumericTarget)));
    }

    #[test]
    fn qcr_formula() {
        assert_eq!(qcr(3, 1), 0.5);
        assert_eq!(qcr(0, 0), 0.0);
        assert_eq!(qcr(0, 7), -1.0);
    }
}
