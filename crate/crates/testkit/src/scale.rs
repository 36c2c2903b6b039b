// SPDX-License-Identifier: Apache-2.0

//! Larger generated lakes written straight to disk, for timing and
//! work-count comparisons.

use std::io;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a bulk lake.
#[derive(Debug, Clone, Copy)]
pub struct ScaleProfile {
    pub tables: usize,
    pub rows: usize,
    pub cols: usize,
    /// Distinct text tokens; draws are skewed toward small indices.
    pub vocabulary: usize,
}

impl ScaleProfile {
    /// 10,000 tables of 50 rows by 10 columns: five million cells.
    pub fn desk() -> Self {
        ScaleProfile {
            tables: 10_000,
            rows: 50,
            cols: 10,
            vocabulary: 400_000,
        }
    }
}

/// Queries drawn from a bulk lake while writing it.
#[derive(Debug, Clone, Default)]
pub struct ScaleQueries {
    pub cells: u64,
    /// Text columns copied from random tables.
    pub columns: Vec<Vec<String>>,
    /// (key, numeric target) pairs copied from random tables.
    pub corr: Vec<(Vec<String>, Vec<String>)>,
    /// Row-aligned pairs of text columns copied from random tables.
    pub tuples: Vec<Vec<Vec<String>>>,
    /// One whole table's columns, for the union plan.
    pub union_table: Vec<(String, Vec<String>)>,
}

fn skewed(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    ((u * u * u) * n as f64) as usize
}

/// Writes `profile.tables` CSV files into `dir`. Columns 0-5 are text, 6-9
/// numeric; column 0 behaves like an entity key local to a table cluster.
pub fn write_scale_lake(dir: &Path, seed: u64, profile: ScaleProfile) -> io::Result<ScaleQueries> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = ScaleQueries::default();
    let header: Vec<String> = (0..profile.cols).map(|c| format!("c{c}")).collect();
    let text_cols = (profile.cols * 6).div_ceil(10);
    let sample_every = (profile.tables / 20).max(1);
    for t in 0..profile.tables {
        let cluster = t / 20;
        let mut cols: Vec<Vec<String>> = vec![Vec::with_capacity(profile.rows); profile.cols];
        for _ in 0..profile.rows {
            for (c, col) in cols.iter_mut().enumerate() {
                let v = if c == 0 {
                    format!("e{}_{}", cluster, rng.random_range(0..200))
                } else if c < text_cols {
                    format!("v{}", skewed(&mut rng, profile.vocabulary))
                } else {
                    format!("{:.2}", rng.random_range(0.0..1000.0f64))
                };
                col.push(v);
            }
        }
        let mut w = csv::Writer::from_path(dir.join(format!("t{t:05}.csv")))?;
        w.write_record(&header)?;
        for r in 0..profile.rows {
            w.write_record(cols.iter().map(|c| c[r].as_str()))?;
        }
        w.flush()?;
        q.cells += (profile.rows * profile.cols) as u64;
        if t % sample_every == 0 {
            let c = rng.random_range(0..text_cols);
            q.columns.push(cols[c].clone());
            q.tuples.push(vec![cols[0].clone(), cols[1 % text_cols].clone()]);
            if text_cols < profile.cols {
                q.corr.push((cols[0].clone(), cols[profile.cols - 1].clone()));
            }
            if q.union_table.is_empty() {
                q.union_table = header.iter().cloned().zip(cols.iter().cloned()).collect();
            }
        }
    }
    Ok(q)
}

/// An augmentation-by-example query: key column values plus a few example
/// (key, attribute) rows taken from the same source table.
#[derive(Debug, Clone)]
pub struct AugmentQuery {
    pub source: usize,
    pub query: Vec<String>,
    pub examples: Vec<Vec<String>>,
}

const COUNTRIES: usize = 40;

/// Tables with an entity column, a low-cardinality country column, a year and
/// a measure. Entities cluster so each query joins a handful of tables while
/// the example attributes occur everywhere.
pub fn write_augment_lake(dir: &Path, seed: u64, tables: usize, queries: usize) -> io::Result<Vec<AugmentQuery>> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let step = (tables / queries.max(1)).max(1);
    for t in 0..tables {
        let cluster = t / 10;
        let rows = rng.random_range(40..120);
        let mut data: Vec<[String; 4]> = Vec::with_capacity(rows);
        for _ in 0..rows {
            data.push([
                format!("entity{}_{}", cluster, rng.random_range(0..150)),
                format!("country{}", rng.random_range(0..COUNTRIES)),
                rng.random_range(1990..2024).to_string(),
                format!("{:.1}", rng.random_range(0.0..500.0f64)),
            ]);
        }
        let mut w = csv::Writer::from_path(dir.join(format!("a{t:04}.csv")))?;
        w.write_record(["name", "country", "year", "value"])?;
        for r in &data {
            w.write_record(r)?;
        }
        w.flush()?;
        if t % step == 0 && out.len() < queries {
            let query: Vec<String> = data.choose_multiple(&mut rng, 25).map(|r| r[0].clone()).collect();
            let picks: Vec<&[String; 4]> = data.choose_multiple(&mut rng, 3).collect();
            let examples = vec![
                picks.iter().map(|r| r[0].clone()).collect(),
                picks.iter().map(|r| r[1].clone()).collect(),
            ];
            out.push(AugmentQuery {
                source: t,
                query,
                examples,
            });
        }
    }
    Ok(out)
}
