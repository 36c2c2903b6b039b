// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Each criterion prints one `[PASS]`/`[FAIL]` line; the
//! process exits non-zero when any criterion fails.
//!
//! Run a subset with `cargo test -p blend-testkit --test acceptance -- 3 5`.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use blend_core::optimizer::{execute_plan, ExecOptions, SeekerOrder};
use blend_core::plan::{build_augmentation_plan, build_union_plan, InputSpec, NodeSpec, SeekerNode};
use blend_core::seekers::{seek, seek_mc_traced, ScanStats};
use blend_core::{
    CombinerKind, CombinerSpec, Detail, Error, Index, Normalization, PlanGraph, RankedTables, SeekerKind, SeekerSpec,
    UNLIMITED,
};
use blend_testkit::oracle::{query_tuples, row_holds_tuple};
use blend_testkit::scale::{write_augment_lake, write_scale_lake, ScaleProfile};
use blend_testkit::{
    gen_lake, lake_queries, oracle_sequential_intersection, pearson, OracleError, OracleLake, Profile, Query,
    ToyLake,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn engine_result(index: &Index, q: &Query) -> Result<RankedTables, &'static str> {
    let spec = q.spec().map_err(|_| "invalid")?;
    seek(index, &spec).map_err(|e| match e {
        Error::EmptyQueryColumn | Error::EmptyQueryRelation => "empty",
        Error::NonNumericTarget => "non-numeric",
        _ => "other",
    })
}

fn oracle_result(o: &OracleLake, q: &Query) -> Result<RankedTables, &'static str> {
    q.oracle(o).map_err(|e| match e {
        OracleError::EmptyQuery => "empty",
        OracleError::NonNumericTarget => "non-numeric",
    })
}

fn build(lake: &ToyLake, policy: Normalization) -> Index {
    Index::build_from_tables(&lake.raw_tables(), policy)
}

fn c1_seeker_oracle() -> Outcome {
    let mut queries = 0;
    let mut mismatches = Vec::new();
    let mut per_kind = [0usize; 4];
    let mut non_empty = 0;
    for seed in 0..100u64 {
        let (lake, truth) = gen_lake(seed, Profile::default());
        let policy = if seed % 5 == 4 { Normalization::Exact } else { Normalization::Lower };
        let index = build(&lake, policy);
        let o = OracleLake::new(&lake, policy);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA11CE);
        for q in lake_queries(&lake, &truth, &mut rng) {
            queries += 1;
            per_kind[q.kind.cost_class() as usize] += 1;
            let (e, r) = (engine_result(&index, &q), oracle_result(&o, &q));
            non_empty += usize::from(r.as_ref().is_ok_and(|r| !r.is_empty()));
            if e != r {
                mismatches.push(format!("seed {seed} {} k={}", q.kind, q.k));
            }
        }
    }
    let kinds_ok = per_kind.iter().all(|&n| n > 0);
    outcome(
        mismatches.is_empty() && queries >= 400 && kinds_ok,
        format!(
            "{queries} queries over 100 lakes (keyword {}, sc {}, corr {}, mc {}; {non_empty} with non-empty answers), {} mismatches {:?}",
            per_kind[0],
            per_kind[1],
            per_kind[2],
            per_kind[3],
            mismatches.len(),
            &mismatches[..mismatches.len().min(5)]
        ),
    )
}

fn c2_mc_filter() -> Outcome {
    let (mut survivors, mut true_pos, mut candidates, mut fn_violations) = (0usize, 0usize, 0usize, 0usize);
    for seed in 0..100u64 {
        let (lake, truth) = gen_lake(seed, Profile::default());
        let index = build(&lake, Normalization::Lower);
        let o = OracleLake::new(&lake, Normalization::Lower);
        let spec = SeekerSpec::mc(truth.mc.columns.clone(), UNLIMITED).unwrap();
        let (_, trace) = seek_mc_traced(&index, &spec, &mut ScanStats::default()).unwrap();
        let tuples = query_tuples(Normalization::Lower, &truth.mc.columns);
        candidates += trace.candidate_rows.len();
        survivors += trace.surviving_rows.len();
        true_pos += trace
            .surviving_rows
            .iter()
            .filter(|(t, r)| row_holds_tuple(&o, *t, *r as usize, &tuples))
            .count();
        let kept: BTreeSet<(u32, u32)> = trace.surviving_rows.iter().copied().collect();
        for (t, table) in lake.tables.iter().enumerate() {
            for r in 0..table.rows.len() {
                if row_holds_tuple(&o, t as u32, r, &tuples) && !kept.contains(&(t as u32, r as u32)) {
                    fn_violations += 1;
                }
            }
        }
    }
    let precision = true_pos as f64 / survivors.max(1) as f64;
    outcome(
        precision >= 0.95 && fn_violations == 0,
        format!(
            "precision {:.4} ({true_pos}/{survivors} survivors true, {candidates} join candidates), {fn_violations} false negatives",
            precision
        ),
    )
}

fn c3_qcr() -> Outcome {
    let (mut columns, mut worst, mut range_bad, mut sign_checked, mut sign_bad) = (0, 0.0f64, 0, 0, 0);
    let mut notes = Vec::new();
    for seed in 0..100u64 {
        if columns >= 50 {
            break;
        }
        let (lake, truth) = gen_lake(seed, Profile::default());
        let index = build(&lake, Normalization::Lower);
        let o = OracleLake::new(&lake, Normalization::Lower);
        let mut q = Query::new(SeekerKind::Corr, vec![truth.corr.key.clone(), truth.corr.target.clone()], UNLIMITED);
        q.min_support = 1;
        let engine = engine_result(&index, &q).unwrap();
        let oracle = oracle_result(&o, &q).unwrap();
        let target_of = |key: &str| {
            truth.corr.key.iter().position(|k| k == key).map(|i| truth.corr.target[i].parse::<f64>().unwrap())
        };
        for p in &truth.corr.columns {
            columns += 1;
            let find = |r: &RankedTables| {
                r.iter().find_map(|e| match e.detail {
                    Detail::Correlation {
                        key_column,
                        num_column,
                        qcr,
                        ..
                    } if e.table_id == p.table && key_column == p.key_column && num_column == p.num_column => Some(qcr),
                    _ => None,
                })
            };
            let (Some(a), Some(b)) = (find(&engine), find(&oracle)) else {
                notes.push(format!("seed {seed} table {} missing", p.table));
                range_bad += 1;
                continue;
            };
            worst = worst.max((a - b).abs());
            if !(-1.0..=1.0).contains(&a) {
                range_bad += 1;
            }
            let t = &lake.tables[p.table as usize];
            let (xs, ys): (Vec<f64>, Vec<f64>) = (0..t.rows.len())
                .filter_map(|r| Some((target_of(t.cell(r, p.key_column as usize))?, t.cell(r, p.num_column as usize).parse::<f64>().ok()?)))
                .unzip();
            if let Some(rho) = pearson(&xs, &ys) {
                if rho.abs() >= 0.5 {
                    sign_checked += 1;
                    if a.signum() != rho.signum() || a == 0.0 {
                        sign_bad += 1;
                        notes.push(format!("seed {seed} qcr {a:.3} pearson {rho:.3}"));
                    }
                }
            }
        }
    }
    outcome(
        columns >= 50 && worst <= 1e-12 && range_bad == 0 && sign_bad == 0,
        format!(
            "{columns} planted columns, max |engine-oracle| {worst:.1e}, {range_bad} out of range/missing, sign agreement {}/{sign_checked} {:?}",
            sign_checked - sign_bad,
            &notes[..notes.len().min(5)]
        ),
    )
}

fn c4_union() -> Outcome {
    let (mut plans, mut misses) = (0, Vec::new());
    for seed in 0..100u64 {
        let (lake, truth) = gen_lake(seed, Profile::default());
        let index = build(&lake, Normalization::Lower);
        let g = truth.union.tables.len();
        for k in [g, g + 2, 10.max(g)] {
            plans += 1;
            let plan = build_union_plan(&truth.union.query, k, None).unwrap();
            let (out, _) = execute_plan(&plan, &index, &ExecOptions::default()).unwrap();
            let got: BTreeSet<u32> = out.table_ids().into_iter().collect();
            for t in &truth.union.tables {
                if !got.contains(t) {
                    misses.push(format!("seed {seed} k {k} table {t}"));
                }
            }
        }
    }
    outcome(
        misses.is_empty(),
        format!("{plans} union plans, {} planted tables missed {:?}", misses.len(), &misses[..misses.len().min(5)]),
    )
}

/// A random intersection plan over two or three seekers drawn from one lake.
fn intersection_plan(lake: &ToyLake, rng: &mut ChaCha8Rng, k: usize) -> (PlanGraph, Vec<(String, Query)>) {
    let truth_seed = lake.seed;
    let (_, truth) = gen_lake(truth_seed, Profile::default());
    let mut pool = lake_queries(lake, &truth, rng);
    pool.retain(|q| q.restriction.is_none());
    pool.shuffle(rng);
    let n = rng.random_range(2..=3usize).min(pool.len());
    let mut input = InputSpec::new();
    let mut seekers = Vec::new();
    for (i, mut q) in pool.into_iter().take(n).enumerate() {
        q.k = k;
        q.sample = Some(256);
        q.min_support = 3;
        let name = format!("s{i}");
        let cols: Vec<String> = (0..q.columns.len()).map(|c| format!("{name}_{c}")).collect();
        for (c, col) in cols.iter().zip(&q.columns) {
            input = input.column(c.clone(), col.clone());
        }
        seekers.push((name, q, cols));
    }
    let mut g = PlanGraph::new();
    g.add("input", NodeSpec::Input(input), &[]).unwrap();
    for (name, q, cols) in &seekers {
        let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        g.add(name, NodeSpec::Seeker(SeekerNode::on_columns(q.kind, &refs, q.k)), &["input"]).unwrap();
    }
    let names: Vec<&str> = seekers.iter().map(|(n, _, _)| n.as_str()).collect();
    let comb = CombinerSpec::new(CombinerKind::Intersection, k).unwrap();
    g.add("combiner", NodeSpec::Combiner(comb), &names).unwrap();
    g.add("terminal", NodeSpec::Terminal, &["combiner"]).unwrap();
    (g, seekers.into_iter().map(|(n, q, _)| (n, q)).collect())
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

fn c5_optimizer() -> Outcome {
    let mut violations = Vec::new();
    let (mut unlimited_runs, mut finite_runs, mut union_runs, mut plans) = (0, 0, 0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seed = 1000u64;
    while plans < 50 {
        seed += 1;
        let (lake, truth) = gen_lake(seed, Profile::default());
        let index = build(&lake, Normalization::Lower);
        let o = OracleLake::new(&lake, Normalization::Lower);

        // unlimited k: every ordering gives the plain set intersection
        let (plan, seekers) = intersection_plan(&lake, &mut rng, UNLIMITED);
        let specs: Vec<SeekerSpec> = seekers.iter().map(|(n, _)| plan.seeker_spec(n).unwrap()).collect();
        let outputs: Vec<_> = specs.iter().map(|s| seek(&index, s)).collect();
        if outputs.iter().any(Result::is_err) {
            // seeker rejects its query (e.g. non-numeric target); draw again
            continue;
        }
        plans += 1;
        let mut expected: Option<BTreeSet<u32>> = None;
        for out in outputs.into_iter().map(Result::unwrap) {
            let set: BTreeSet<u32> = out.table_ids().into_iter().collect();
            expected = Some(match expected {
                None => set,
                Some(e) => e.intersection(&set).copied().collect(),
            });
        }
        let names: Vec<String> = seekers.iter().map(|(n, _)| n.clone()).collect();
        for order in permutations(&names) {
            unlimited_runs += 1;
            let opts = ExecOptions {
                optimize: true,
                order: SeekerOrder::Explicit(order.clone()),
            };
            let (out, _) = execute_plan(&plan, &index, &opts).unwrap();
            let got: BTreeSet<u32> = out.table_ids().into_iter().collect();
            if Some(&got) != expected.as_ref() {
                violations.push(format!("seed {seed} unlimited order {order:?}"));
            }
        }

        // finite k: optimized equals the sequential oracle in cost order
        let k = rng.random_range(1..=5);
        let (plan, seekers) = intersection_plan(&lake, &mut rng, k);
        let mut ordered: Vec<(String, Query)> = seekers.clone();
        ordered.sort_by(|(an, a), (bn, b)| {
            let size = |q: &Query| q.columns.iter().map(Vec::len).sum::<usize>();
            (a.kind.cost_class(), size(a), an).cmp(&(b.kind.cost_class(), size(b), bn))
        });
        let engine = execute_plan(&plan, &index, &ExecOptions::default());
        let mut failed = false;
        let expected = oracle_sequential_intersection(
            &mut |i, r| match ordered[i].1.oracle_restricted(&o, r) {
                Ok(out) => out,
                Err(_) => {
                    failed = true;
                    RankedTables::new()
                }
            },
            ordered.len(),
            k,
        );
        finite_runs += 1;
        match engine {
            Ok((out, _)) if !failed => {
                if out != expected {
                    violations.push(format!("seed {seed} finite k={k}"));
                }
            }
            Err(_) if failed => {}
            _ => violations.push(format!("seed {seed} finite k={k}: error mismatch")),
        }

        // union and counter plans ignore the optimizer
        for kind in [CombinerKind::Union, CombinerKind::Counter] {
            union_runs += 1;
            let mut plan = PlanGraph::new();
            let mut input = InputSpec::new();
            for (i, (_, col)) in truth.union.query.iter().enumerate() {
                input = input.column(format!("q{i}"), col.clone());
            }
            input = input.column("join", truth.join.query.clone());
            plan.add("input", NodeSpec::Input(input), &[]).unwrap();
            let mut names = Vec::new();
            for i in 0..truth.union.query.len() {
                let name = format!("s{i}");
                let kind = if i % 2 == 0 { SeekerKind::Sc } else { SeekerKind::Keyword };
                plan.add(&name, NodeSpec::Seeker(SeekerNode::on_columns(kind, &[&format!("q{i}")], 5)), &["input"])
                    .unwrap();
                names.push(name);
            }
            plan.add("j", NodeSpec::Seeker(SeekerNode::on_columns(SeekerKind::Sc, &["join"], 5)), &["input"])
                .unwrap();
            names.push("j".into());
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            plan.add("combiner", NodeSpec::Combiner(CombinerSpec::new(kind, 6).unwrap()), &refs).unwrap();
            plan.add("terminal", NodeSpec::Terminal, &["combiner"]).unwrap();
            let a = execute_plan(&plan, &index, &ExecOptions::default()).unwrap().0;
            let b = execute_plan(&plan, &index, &ExecOptions::unoptimized()).unwrap().0;
            if a != b {
                violations.push(format!("seed {seed} {kind} differs"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{plans} intersection plans ({unlimited_runs} unlimited-k orderings, {finite_runs} finite-k oracle runs), {union_runs} union/counter plans, {} violations {:?}",
            violations.len(),
            &violations[..violations.len().min(5)]
        ),
    )
}

fn c6_rewrite_benefit(dir: &Path) -> Outcome {
    let queries = write_augment_lake(dir, 6, 1000, 25).unwrap();
    let (index, _) = Index::build_from_dir(dir, Normalization::Lower).unwrap();
    let mut reductions = Vec::new();
    let mut not_fewer = 0;
    let (mut opt_total, mut base_total) = (0u64, 0u64);
    for q in &queries {
        let plan = build_augmentation_plan(q.examples.clone(), q.query.clone(), 10).unwrap();
        let (a, ta) = execute_plan(&plan, &index, &ExecOptions::default()).unwrap();
        let (_, tb) = execute_plan(&plan, &index, &ExecOptions::unoptimized()).unwrap();
        let (sa, sb) = (ta.stats(), tb.stats());
        if sa.postings_scanned >= sb.postings_scanned {
            not_fewer += 1;
        }
        if !a.table_ids().contains(&(q.source as u32)) {
            // the source table holds every example and most of the query
            not_fewer += 1;
        }
        opt_total += sa.rows_scanned();
        base_total += sb.rows_scanned();
        reductions.push(1.0 - sa.rows_scanned() as f64 / sb.rows_scanned().max(1) as f64);
    }
    reductions.sort_by(f64::total_cmp);
    let median = reductions[reductions.len() / 2];
    outcome(
        not_fewer == 0 && median >= 0.20,
        format!(
            "{} augmentation plans on 1000 tables: optimized scanned fewer postings in {}/{}, median rows-scanned reduction {:.1}% (total {opt_total} vs {base_total})",
            queries.len(),
            queries.len() - not_fewer.min(queries.len()),
            queries.len(),
            median * 100.0
        ),
    )
}

fn c7_storage(dir: &Path) -> Outcome {
    let mut problems = Vec::new();
    let mut lakes = 0;
    for seed in [11u64, 12, 13] {
        lakes += 1;
        let (lake, _) = gen_lake(seed, Profile::default());
        let lake_dir = dir.join(format!("lake{seed}"));
        lake.write_csv(&lake_dir).unwrap();
        let (a, _) = Index::build_from_dir(&lake_dir, Normalization::Lower).unwrap();
        let (b, _) = Index::build_from_dir(&lake_dir, Normalization::Lower).unwrap();
        let (ia, ib) = (dir.join(format!("idx{seed}a")), dir.join(format!("idx{seed}b")));
        a.save(&ia, false).unwrap();
        b.save(&ib, false).unwrap();
        let mut files: Vec<String> = std::fs::read_dir(&ia)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        files.sort();
        if files != ["alltables.bin", "catalog.json"] {
            problems.push(format!("seed {seed}: files {files:?}"));
        }
        let dump = a.dump_string();
        let reopened = Index::open(&ia).unwrap().dump_string();
        if dump != reopened {
            problems.push(format!("seed {seed}: dump changed across save/open"));
        }
        if dump != b.dump_string() {
            problems.push(format!("seed {seed}: independent builds differ"));
        }
        for f in &files {
            if std::fs::read(ia.join(f)).unwrap() != std::fs::read(ib.join(f)).unwrap() {
                problems.push(format!("seed {seed}: {f} differs between builds"));
            }
        }
        if dump != build(&lake, Normalization::Lower).dump_string() {
            problems.push(format!("seed {seed}: in-memory and on-disk builds differ"));
        }
    }
    outcome(
        problems.is_empty(),
        format!("{lakes} lakes: single data file + catalog, dumps identical across build/save/open and rebuilds {problems:?}"),
    )
}

fn c8_performance(dir: &Path) -> Outcome {
    let lake_dir = dir.join("lake");
    let t = Instant::now();
    let queries = write_scale_lake(&lake_dir, 8, ScaleProfile::desk()).unwrap();
    let gen_time = t.elapsed();
    let t = Instant::now();
    let (index, report) = Index::build_from_dir(&lake_dir, Normalization::Lower).unwrap();
    index.save(&dir.join("index"), false).unwrap();
    let build_time = t.elapsed();
    drop(index);
    let t = Instant::now();
    let index = Index::open(&dir.join("index")).unwrap();
    let open_time = t.elapsed();

    let mut slowest = (Duration::ZERO, String::new());
    let mut time = |label: String, f: &mut dyn FnMut()| {
        let t = Instant::now();
        f();
        let d = t.elapsed();
        if d > slowest.0 {
            slowest = (d, label);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (i, col) in queries.columns.iter().take(5).enumerate() {
        time(format!("sc#{i}"), &mut || {
            seek(&index, &SeekerSpec::sc(col.clone(), 10).unwrap()).unwrap();
        });
        time(format!("keyword#{i}"), &mut || {
            seek(&index, &SeekerSpec::keyword(col.clone(), 10).unwrap()).unwrap();
        });
    }
    for (i, cols) in queries.tuples.iter().take(5).enumerate() {
        let rows: Vec<usize> = (0..cols[0].len()).collect();
        let pick: Vec<usize> = rows.choose_multiple(&mut rng, 10).copied().collect();
        let q: Vec<Vec<String>> = cols.iter().map(|c| pick.iter().map(|&r| c[r].clone()).collect()).collect();
        time(format!("mc#{i}"), &mut || {
            seek(&index, &SeekerSpec::mc(q.clone(), 10).unwrap()).unwrap();
        });
    }
    for (i, (key, target)) in queries.corr.iter().take(5).enumerate() {
        time(format!("corr#{i}"), &mut || {
            seek(&index, &SeekerSpec::corr(key.clone(), target.clone(), 10).unwrap()).unwrap();
        });
    }
    let single = slowest.clone();
    let t = Instant::now();
    let plan = build_union_plan(&queries.union_table, 10, None).unwrap();
    execute_plan(&plan, &index, &ExecOptions::default()).unwrap();
    let union_time = t.elapsed();

    let pass = build_time < Duration::from_secs(300)
        && single.0 < Duration::from_secs(2)
        && union_time < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "{} tables, {} cells: generate {:.1}s, build+persist {:.1}s, open {:.1}s, slowest single seeker {} {:.3}s, union plan {:.3}s",
            report.tables,
            report.cells,
            gen_time.as_secs_f64(),
            build_time.as_secs_f64(),
            open_time.as_secs_f64(),
            single.1,
            single.0.as_secs_f64(),
            union_time.as_secs_f64()
        ),
    )
}

type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |n: u32| args.is_empty() || args.iter().any(|a| a == &n.to_string());
    let tmp = tempfile::tempdir().unwrap();
    let criteria: [Criterion; 8] = [
        (1, "seeker-oracle equivalence", Box::new(c1_seeker_oracle)),
        (2, "mc signature filter precision", Box::new(c2_mc_filter)),
        (3, "qcr fidelity", Box::new(c3_qcr)),
        (4, "union task fidelity", Box::new(c4_union)),
        (5, "optimizer consistency", Box::new(c5_optimizer)),
        (6, "rewriting benefit", Box::new(|| c6_rewrite_benefit(&tmp.path().join("c6")))),
        (7, "storage unification", Box::new(|| c7_storage(&tmp.path().join("c7")))),
        (8, "desk-scale performance", Box::new(|| c8_performance(&tmp.path().join("c8")))),
    ];
    let mut failed = 0;
    for (n, name, run) in &criteria {
        if !selected(*n) {
            continue;
        }
        let t = Instant::now();
        let r = run();
        let tag = if r.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!r.pass);
        println!("[{tag}] criterion {n} {name}: {} ({:.1}s)", r.detail, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
