// SPDX-License-Identifier: Apache-2.0

//! Seeker queries drawn from a toy lake, runnable against both the engine
//! and the oracles.

use std::collections::BTreeSet;

use blend_core::seekers::DEFAULT_MIN_SUPPORT;
use blend_core::{Restriction, SeekerKind, SeekerSpec, UNLIMITED};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lake::{GroundTruth, ToyLake};
use crate::oracle::{oracle_corr, oracle_keyword, oracle_mc, oracle_sc, OracleError, OracleLake};

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub kind: SeekerKind,
    pub columns: Vec<Vec<String>>,
    pub k: usize,
    pub sample: Option<u32>,
    pub min_support: u64,
    pub restriction: Option<Restriction>,
}

impl Query {
    pub fn new(kind: SeekerKind, columns: Vec<Vec<String>>, k: usize) -> Self {
        Query {
            kind,
            columns,
            k,
            sample: None,
            min_support: DEFAULT_MIN_SUPPORT,
            restriction: None,
        }
    }

    pub fn spec(&self) -> blend_core::Result<SeekerSpec> {
        Ok(SeekerSpec::new(self.kind, self.columns.clone(), self.k)?
            .with_sample(self.sample)
            .with_min_support(self.min_support)
            .with_restriction(self.restriction.clone()))
    }

    pub fn oracle(&self, o: &OracleLake) -> Result<blend_core::RankedTables, OracleError> {
        self.oracle_restricted(o, self.restriction.as_ref())
    }

    pub fn oracle_restricted(
        &self,
        o: &OracleLake,
        restriction: Option<&Restriction>,
    ) -> Result<blend_core::RankedTables, OracleError> {
        match self.kind {
            SeekerKind::Sc => oracle_sc(o, &self.columns[0], self.k, restriction),
            SeekerKind::Keyword => oracle_keyword(o, &self.columns[0], self.k, restriction),
            SeekerKind::Mc => oracle_mc(o, &self.columns, self.k, restriction),
            SeekerKind::Corr => oracle_corr(
                o,
                &self.columns[0],
                &self.columns[1],
                self.sample,
                self.min_support,
                self.k,
                restriction,
            ),
        }
    }
}

fn pick_k(rng: &mut ChaCha8Rng) -> usize {
    *[1, 3, 5, 10, 25, UNLIMITED].choose(rng).unwrap()
}

fn random_restriction(rng: &mut ChaCha8Rng, tables: usize) -> Option<Restriction> {
    if tables == 0 || rng.random_bool(0.6) {
        return None;
    }
    let set: BTreeSet<u32> = (0..tables as u32).filter(|_| rng.random_bool(0.3)).collect();
    Some(if rng.random_bool(0.5) { Restriction::In(set) } else { Restriction::NotIn(set) })
}

/// Copies `n` sampled values of one column, plus a couple of unrelated words.
fn sampled_column(lake: &ToyLake, rng: &mut ChaCha8Rng) -> Vec<String> {
    let t = lake.tables.choose(rng).unwrap();
    let c = rng.random_range(0..t.width());
    let mut v: Vec<String> = t.column(c).choose_multiple(rng, 15).cloned().collect();
    v.push(format!("w{}", rng.random_range(0..400)));
    v.push(String::new());
    v
}

fn sampled_tuples(lake: &ToyLake, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<String>>> {
    let wide: Vec<_> = lake.tables.iter().filter(|t| t.width() >= 2 && !t.rows.is_empty()).collect();
    let t = wide.choose(rng)?;
    let arity = rng.random_range(2..=t.width().min(3));
    let mut cols: Vec<usize> = (0..t.width()).collect();
    cols.shuffle(rng);
    cols.truncate(arity);
    let rows: Vec<usize> = (0..t.rows.len()).collect();
    let picked: Vec<usize> = rows.choose_multiple(rng, 8).copied().collect();
    Some(cols.iter().map(|&c| picked.iter().map(|&r| t.cell(r, c).to_string()).collect()).collect())
}

fn sampled_corr(lake: &ToyLake, rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let t = lake.tables.choose(rng).unwrap();
    let kc = rng.random_range(0..t.width());
    let nc = rng.random_range(0..t.width());
    let rows: Vec<usize> = (0..t.rows.len()).collect();
    let picked: Vec<usize> = rows.choose_multiple(rng, 30).copied().collect();
    let key = picked.iter().map(|&r| t.cell(r, kc).to_string()).collect();
    let mut target: Vec<String> = picked.iter().map(|&r| t.cell(r, nc).to_string()).collect();
    if rng.random_bool(0.5) {
        // a numeric target independent of the table
        target = (0..picked.len()).map(|_| rng.random_range(0..100).to_string()).collect();
    }
    vec![key, target]
}

/// A mix of planted and sampled queries over all four seekers.
pub fn lake_queries(lake: &ToyLake, truth: &GroundTruth, rng: &mut ChaCha8Rng) -> Vec<Query> {
    let n = lake.tables.len();
    let mut out = Vec::new();
    let mut push = |mut q: Query, rng: &mut ChaCha8Rng, restrict: bool| {
        if restrict {
            q.restriction = random_restriction(rng, n);
        }
        out.push(q);
    };
    push(Query::new(SeekerKind::Sc, vec![truth.join.query.clone()], 10), rng, false);
    let k = pick_k(rng);
    push(Query::new(SeekerKind::Sc, vec![sampled_column(lake, rng)], k), rng, true);
    let k = pick_k(rng);
    push(Query::new(SeekerKind::Keyword, vec![sampled_column(lake, rng)], k), rng, true);
    push(Query::new(SeekerKind::Keyword, vec![truth.join.query.clone()], pick_k(rng)), rng, true);
    push(Query::new(SeekerKind::Mc, truth.mc.columns.clone(), 10), rng, false);
    if let Some(cols) = sampled_tuples(lake, rng) {
        let k = pick_k(rng);
        push(Query::new(SeekerKind::Mc, cols, k), rng, true);
    }
    let planted = Query::new(SeekerKind::Corr, vec![truth.corr.key.clone(), truth.corr.target.clone()], UNLIMITED);
    push(planted, rng, false);
    let mut q = Query::new(SeekerKind::Corr, sampled_corr(lake, rng), pick_k(rng));
    q.sample = *[None, Some(256), Some(20), Some(3)].choose(rng).unwrap();
    q.min_support = rng.random_range(1..=4);
    push(q, rng, true);
    out
}
