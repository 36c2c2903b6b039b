// SPDX-License-Identifier: Apache-2.0

//! Seeded toy lakes with planted structure.

use std::io;
use std::path::Path;

use blend_core::RawTable;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ToyTable {
    pub fn width(&self) -> usize {
        self.header.len()
    }

    /// Cell at `(row, col)`, padding short rows with empty cells.
    pub fn cell(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).map(String::as_str).unwrap_or("")
    }

    pub fn column(&self, col: usize) -> Vec<String> {
        (0..self.rows.len()).map(|r| self.cell(r, col).to_string()).collect()
    }
}

/// Tables are kept sorted by name, so position equals the engine's table id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyLake {
    pub seed: u64,
    pub tables: Vec<ToyTable>,
}

impl ToyLake {
    pub fn raw_tables(&self) -> Vec<RawTable> {
        self.tables
            .iter()
            .map(|t| RawTable {
                path: t.name.clone(),
                header: t.header.clone(),
                rows: t.rows.clone(),
            })
            .collect()
    }

    /// Writes every table as `<dir>/<name>`.
    pub fn write_csv(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            let mut w = csv::Writer::from_path(dir.join(&t.name))?;
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    pub min_tables: usize,
    pub max_tables: usize,
    pub max_cols: usize,
    pub max_rows: usize,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            min_tables: 25,
            max_tables: 50,
            max_cols: 10,
            max_rows: 200,
        }
    }
}

/// A query column that one table contains completely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedJoin {
    pub query: Vec<String>,
    pub table: u32,
    pub column: u32,
    /// Tables holding only part of the query.
    pub partial: Vec<u32>,
}

/// Tables whose columns draw from the same domains as the query table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedUnion {
    pub query: Vec<(String, Vec<String>)>,
    pub tables: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorrColumn {
    pub table: u32,
    pub key_column: u32,
    pub num_column: u32,
    pub slope: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorr {
    pub key: Vec<String>,
    pub target: Vec<String>,
    pub columns: Vec<PlantedCorrColumn>,
}

/// Query tuples held row-wise by one table; decoys hold the same values in
/// misaligned rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedMc {
    pub columns: Vec<Vec<String>>,
    pub table: u32,
    pub mapping: Vec<u32>,
    pub decoys: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub join: PlantedJoin,
    pub union: PlantedUnion,
    pub corr: PlantedCorr,
    pub mc: PlantedMc,
}

enum Role {
    Noise,
    JoinFull(u32),
    JoinPartial,
    Union,
    Corr(Vec<(u32, u32, f64, f64)>),
    Mc(Vec<u32>),
    McDecoy,
}

struct Gen {
    rng: ChaCha8Rng,
    profile: Profile,
}

/// Domain prefixes. Noise text uses `w`; the planted structures use their own
/// so overlaps between them are deliberate.
const JOIN_DOMAIN: usize = 200;
const UNION_DOMAIN: usize = 60;
const KEY_DOMAIN: usize = 80;

impl Gen {
    /// Case and padding variants that collapse under lower-casing.
    fn vary(&mut self, v: String) -> String {
        let x: f64 = self.rng.random();
        if x < 0.08 {
            v.to_uppercase()
        } else if x < 0.12 {
            format!(" {v} ")
        } else {
            v
        }
    }

    fn rows(&mut self, min: usize) -> usize {
        self.rng.random_range(min.min(self.profile.max_rows)..=self.profile.max_rows.min(min.max(5) + 120))
    }

    fn number(&mut self) -> String {
        match self.rng.random_range(0..10) {
            0..=5 => self.rng.random_range(-50..1000i32).to_string(),
            6..=8 => format!("{:.2}", self.rng.random_range(-100.0..100.0f64)),
            _ => format!("{}e2", self.rng.random_range(1..9)),
        }
    }

    fn noise_column(&mut self, rows: usize) -> Vec<String> {
        let empty_rate = if self.rng.random_bool(0.2) { 0.5 } else { 0.05 };
        let kind = self.rng.random_range(0..4);
        let base = self.rng.random_range(0..300);
        let width = self.rng.random_range(5..80);
        (0..rows)
            .map(|_| {
                if self.rng.random_bool(empty_rate) {
                    return String::new();
                }
                let numeric = match kind {
                    0 | 1 => false,
                    2 => true,
                    _ => self.rng.random_bool(0.7),
                };
                if numeric {
                    self.number()
                } else {
                    let w = format!("w{}", base + self.rng.random_range(0..width));
                    self.vary(w)
                }
            })
            .collect()
    }

    fn table_from_columns(columns: Vec<Vec<String>>) -> (Vec<String>, Vec<Vec<String>>) {
        let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        let header = (0..columns.len()).map(|i| format!("c{i}")).collect();
        let rows = (0..rows)
            .map(|r| columns.iter().map(|c| c.get(r).cloned().unwrap_or_default()).collect())
            .collect();
        (header, rows)
    }

    /// Noise columns with `fixed` placed at random positions; returns the
    /// columns and where each fixed column landed.
    fn mix(&mut self, fixed: Vec<Vec<String>>, rows: usize, extra: usize) -> (Vec<Vec<String>>, Vec<u32>) {
        let mut cols: Vec<(Option<usize>, Vec<String>)> = fixed.into_iter().enumerate().map(|(i, c)| (Some(i), c)).collect();
        for _ in 0..extra {
            let c = self.noise_column(rows);
            cols.push((None, c));
        }
        cols.shuffle(&mut self.rng);
        let mut positions = vec![0u32; cols.iter().filter(|c| c.0.is_some()).count()];
        for (pos, (tag, _)) in cols.iter().enumerate() {
            if let Some(i) = tag {
                positions[*i] = pos as u32;
            }
        }
        (cols.into_iter().map(|c| c.1).collect(), positions)
    }

    fn extra_cols(&mut self, used: usize) -> usize {
        self.rng.random_range(0..=self.profile.max_cols.saturating_sub(used).min(4))
    }

    fn noise_table(&mut self, join_query: &[String]) -> Vec<Vec<String>> {
        let width = self.rng.random_range(1..=self.profile.max_cols);
        let rows = self.rows(1);
        let mut cols: Vec<Vec<String>> = (0..width).map(|_| self.noise_column(rows)).collect();
        // occasional low-grade overlap with the planted domains
        let target = self.rng.random_range(0..width);
        match self.rng.random_range(0..10) {
            0 | 1 => {
                for cell in cols[target].iter_mut().take(8) {
                    *cell = join_query.choose(&mut self.rng).unwrap().clone();
                }
            }
            2 => {
                let c = self.rng.random_range(0..4);
                for cell in cols[target].iter_mut().take(4) {
                    *cell = format!("u{c}x{}", self.rng.random_range(0..UNION_DOMAIN));
                }
            }
            3 => {
                for cell in cols[target].iter_mut() {
                    *cell = format!("k{}", self.rng.random_range(0..KEY_DOMAIN));
                }
            }
            _ => {}
        }
        cols
    }
}

/// A join-domain value outside the query.
fn join_filler(rng: &mut ChaCha8Rng, query_ids: &[usize]) -> String {
    loop {
        let i = rng.random_range(0..JOIN_DOMAIN);
        if !query_ids.contains(&i) {
            return format!("j{i}");
        }
    }
}

fn sample_distinct(rng: &mut ChaCha8Rng, domain: usize, n: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, domain, n.min(domain)).into_vec()
}

/// Generates a lake and the structures planted in it. Same seed, same lake.
pub fn gen_lake(seed: u64, profile: Profile) -> (ToyLake, GroundTruth) {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        profile,
    };
    let mut built: Vec<(Role, Vec<Vec<String>>)> = Vec::new();

    // join: 30 query values, one table holding all of them
    let join_ids = sample_distinct(&mut g.rng, JOIN_DOMAIN, 30);
    let join_query: Vec<String> = join_ids.iter().map(|i| g.vary(format!("j{i}"))).collect();
    {
        let rows = g.rows(40);
        let mut col: Vec<String> = join_query.iter().map(|v| v.trim().to_lowercase()).collect();
        while col.len() < rows {
            col.push(join_filler(&mut g.rng, &join_ids));
        }
        col.shuffle(&mut g.rng);
        let extra = g.extra_cols(1);
        let (cols, pos) = g.mix(vec![col], rows, extra);
        built.push((Role::JoinFull(pos[0]), cols));
    }
    for _ in 0..g.rng.random_range(2..=4) {
        let keep = g.rng.random_range(5..29);
        let mut col: Vec<String> = join_query.choose_multiple(&mut g.rng, keep).map(|v| v.trim().to_lowercase()).collect();
        let rows = g.rows(col.len());
        while col.len() < rows {
            col.push(join_filler(&mut g.rng, &join_ids));
        }
        col.shuffle(&mut g.rng);
        let extra = g.extra_cols(1);
        let (cols, _) = g.mix(vec![col], rows, extra);
        built.push((Role::JoinPartial, cols));
    }

    // union: C domains, a query table and a group of G tables
    let domains = g.rng.random_range(2..=4usize);
    let group = g.rng.random_range(2..=5usize);
    let union_value = |rng: &mut ChaCha8Rng, c: usize| format!("u{c}x{}", rng.random_range(0..UNION_DOMAIN));
    let union_query: Vec<(String, Vec<String>)> = (0..domains)
        .map(|c| (format!("a{c}"), (0..20).map(|_| union_value(&mut g.rng, c)).collect()))
        .collect();
    for _ in 0..group {
        let rows = g.rows(15);
        let fixed: Vec<Vec<String>> = (0..domains)
            .map(|c| (0..rows).map(|_| union_value(&mut g.rng, c)).collect())
            .collect();
        let extra = g.extra_cols(domains);
        let (cols, _) = g.mix(fixed, rows, extra);
        built.push((Role::Union, cols));
    }

    // correlation: 40 distinct keys with uniform targets
    let key_ids = sample_distinct(&mut g.rng, KEY_DOMAIN, 40);
    let corr_key: Vec<String> = key_ids.iter().map(|i| format!("k{i}")).collect();
    let targets: Vec<f64> = (0..corr_key.len()).map(|_| (g.rng.random_range(0.0..100.0f64) * 100.0).round() / 100.0).collect();
    let corr_target: Vec<String> = targets.iter().map(|t| format!("{t:.2}")).collect();
    for _ in 0..g.rng.random_range(3..=6) {
        let mut members: Vec<usize> = (0..corr_key.len()).filter(|_| g.rng.random_bool(0.8)).collect();
        members.shuffle(&mut g.rng);
        let numeric = g.rng.random_range(1..=2usize);
        let mut params = Vec::new();
        let mut fixed: Vec<Vec<String>> = vec![members.iter().map(|&m| corr_key[m].clone()).collect()];
        for _ in 0..numeric {
            let slope = if g.rng.random_bool(0.5) { 1.0 } else { -1.0 } * g.rng.random_range(0.2..3.0);
            let noise = *[0.0, 5.0, 20.0, 60.0, 150.0].choose(&mut g.rng).unwrap();
            let col = members
                .iter()
                .map(|&m| {
                    let e: f64 = g.rng.random_range(-1.0..1.0) + g.rng.random_range(-1.0..1.0);
                    format!("{:.3}", slope * targets[m] + noise * e)
                })
                .collect();
            fixed.push(col);
            params.push((slope, noise));
        }
        // keys outside the query
        for _ in 0..g.rng.random_range(0..5) {
            fixed[0].push(format!("k{}", KEY_DOMAIN + g.rng.random_range(0..20)));
            for c in fixed.iter_mut().skip(1) {
                c.push(format!("{:.3}", g.rng.random_range(-100.0..100.0)));
            }
        }
        let rows = fixed[0].len();
        let extra = g.extra_cols(1 + numeric);
        let (cols, pos) = g.mix(fixed, rows, extra);
        let planted = params
            .into_iter()
            .enumerate()
            .map(|(i, (slope, noise))| (pos[0], pos[i + 1], slope, noise))
            .collect();
        built.push((Role::Corr(planted), cols));
    }

    // multi-column: 10 tuples of arity 2 or 3
    let arity = if g.rng.random_bool(0.3) { 3 } else { 2 };
    let entities = sample_distinct(&mut g.rng, 100, 10);
    let tuples: Vec<Vec<String>> = entities
        .iter()
        .map(|e| {
            let mut t = vec![format!("m{e}"), format!("y{}", g.rng.random_range(0..40))];
            if arity == 3 {
                t.push(format!("z{}", g.rng.random_range(0..15)));
            }
            t
        })
        .collect();
    let mc_columns: Vec<Vec<String>> = (0..arity).map(|i| tuples.iter().map(|t| g.vary(t[i].clone())).collect()).collect();
    {
        let mut rows_data = tuples.clone();
        for _ in 0..g.rng.random_range(0..20) {
            let mut t = vec![format!("m{}", 100 + g.rng.random_range(0..100)), format!("y{}", g.rng.random_range(0..40))];
            if arity == 3 {
                t.push(format!("z{}", g.rng.random_range(0..15)));
            }
            rows_data.push(t);
        }
        rows_data.shuffle(&mut g.rng);
        let fixed = (0..arity).map(|i| rows_data.iter().map(|t| t[i].clone()).collect()).collect();
        let rows = rows_data.len();
        let extra = g.extra_cols(arity);
        let (cols, pos) = g.mix(fixed, rows, extra);
        built.push((Role::Mc(pos), cols));
    }
    for _ in 0..g.rng.random_range(1..=3) {
        // every value present, rows rotated so that no row holds a tuple
        let shift = g.rng.random_range(1..tuples.len());
        let fixed: Vec<Vec<String>> = (0..arity)
            .map(|i| (0..tuples.len()).map(|r| tuples[(r + i * shift) % tuples.len()][i].clone()).collect())
            .collect();
        let extra = g.rng.random_range(0..=2);
        let (cols, _) = g.mix(fixed, tuples.len(), extra);
        built.push((Role::McDecoy, cols));
    }

    let total = g.rng.random_range(profile.min_tables..=profile.max_tables).max(built.len() + 1);
    while built.len() < total {
        let cols = g.noise_table(&join_query);
        built.push((Role::Noise, cols));
    }
    built.shuffle(&mut g.rng);

    let mut tables = Vec::with_capacity(built.len());
    let mut join = PlantedJoin {
        query: join_query,
        table: 0,
        column: 0,
        partial: Vec::new(),
    };
    let mut union = PlantedUnion {
        query: union_query,
        tables: Vec::new(),
    };
    let mut corr = PlantedCorr {
        key: corr_key,
        target: corr_target,
        columns: Vec::new(),
    };
    let mut mc = PlantedMc {
        columns: mc_columns,
        table: 0,
        mapping: Vec::new(),
        decoys: Vec::new(),
    };
    for (id, (role, cols)) in built.into_iter().enumerate() {
        let id = id as u32;
        match role {
            Role::Noise => {}
            Role::JoinFull(c) => {
                join.table = id;
                join.column = c;
            }
            Role::JoinPartial => join.partial.push(id),
            Role::Union => union.tables.push(id),
            Role::Corr(planted) => corr.columns.extend(planted.into_iter().map(|(k, n, slope, noise)| PlantedCorrColumn {
                table: id,
                key_column: k,
                num_column: n,
                slope,
                noise,
            })),
            Role::Mc(pos) => {
                mc.table = id;
                mc.mapping = pos;
            }
            Role::McDecoy => mc.decoys.push(id),
        }
        let (header, rows) = Gen::table_from_columns(cols);
        tables.push(ToyTable {
            name: format!("t{id:03}.csv"),
            header,
            rows,
        });
    }
    (ToyLake { seed, tables }, GroundTruth { join, union, corr, mc })
}
