// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blend_core::optimizer::{execute_plan, ExecOptions};
use blend_core::plan::build_union_plan;
use blend_core::{Index, Normalization};
use blend_testkit::{gen_lake, Profile};

fn blend(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blend"))
        .args(args)
        .env_remove("BLEND_INDEX")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    index: PathBuf,
}

impl Fixture {
    fn at(&self, rel: &str) -> String {
        p(&self.root.join(rel)).to_string()
    }
}

/// Three-table lake: two tables share the query column, two hold the
/// example rows, and t3 carries a price column for corr.
fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let lake = root.join("lake");
    fs::create_dir_all(&lake).unwrap();
    fs::write(lake.join("t1.csv"), "name,size\nalpha,1\nbeta,2\n").unwrap();
    fs::write(lake.join("t2.csv"), "name,color\nalpha,red\ngamma,blue\n").unwrap();
    fs::write(lake.join("t3.csv"), "who,what,price\ndelta,red,10\ngamma,blue,20\nalpha,green,30\nbeta,gray,40\n").unwrap();
    fs::write(root.join("q.csv"), "q,label,price\nalpha,red,1\nbeta,blue,2\ngamma,x,3\ndelta,y,4\n").unwrap();
    fs::write(root.join("ex.csv"), "a,b\nalpha,red\ngamma,blue\n").unwrap();
    let index = root.join("ix");
    let o = blend(&["index", "build", "--lake", p(&lake), "--out", p(&index)]);
    assert!(o.status.success(), "{}", stderr(&o));
    Fixture { _dir: dir, root, index }
}

fn csv_rows(text: &str) -> Vec<(String, String, String, String, String)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["rank", "table_id", "table_path", "score", "detail"]);
    r.deserialize().map(|x| x.unwrap()).collect()
}

#[test]
fn build_reports_summary_and_refuses_to_overwrite() {
    let f = fixture();
    let lake = f.at("lake");
    let o = blend(&["index", "build", "--lake", &lake, "--out", p(&f.index)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("index exists"));

    let o = blend(&["index", "build", "--lake", &lake, "--out", p(&f.index), "--force"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["tables"], 3);
    assert_eq!(summary["cells"], 20);
    assert!(summary["bytes"].as_u64().unwrap() > 0);

    let o = blend(&["index", "build", "--out", p(&f.index)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_matches_library_dump() {
    let f = fixture();
    let o = blend(&["index", "dump", "--index", p(&f.index)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), Index::open(&f.index).unwrap().dump_string());
}

#[test]
fn index_defaults_to_environment_variable() {
    let f = fixture();
    let q = f.at("q.csv:q");
    let o = Command::new(env!("CARGO_BIN_EXE_blend"))
        .args(["task", "sc", "--query", &q])
        .env("BLEND_INDEX", &f.index)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o)).len(), 3);
}

#[test]
fn sc_respects_k_and_formats_agree() {
    let f = fixture();
    let q = f.at("q.csv:q");
    let run = |fmt: &str, k: &str| blend(&["task", "sc", "--query", &q, "-k", k, "--index", p(&f.index), "--format", fmt]);
    let csv_out = stdout(&run("csv", "2"));
    let rows = csv_rows(&csv_out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].1, "2"); // t3 holds all four query values
    assert_eq!(rows[0].2, "t3.csv");
    assert_eq!(csv_out, stdout(&run("csv", "2")));

    let json: Vec<serde_json::Value> = serde_json::from_str(&stdout(&run("json", "2"))).unwrap();
    assert_eq!(json.len(), rows.len());
    for (j, r) in json.iter().zip(&rows) {
        assert_eq!(j["rank"].to_string(), r.0);
        assert_eq!(j["table_id"].to_string(), r.1);
        assert_eq!(j["table_path"], r.2.as_str());
        assert_eq!(j["score"].as_f64().unwrap(), r.3.parse::<f64>().unwrap());
        assert_eq!(j["detail"], r.4.as_str());
    }
}

#[test]
fn corr_accepts_sample_and_reports_node_errors() {
    let f = fixture();
    let (key, price, label) = (f.at("q.csv:q"), f.at("q.csv:price"), f.at("q.csv:label"));
    let ix = p(&f.index);
    let o = blend(&["task", "corr", "--key", &key, "--target", &price, "--sample", "256", "--min-support", "1", "--index", ix]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0].2, "t3.csv");
    assert!(rows[0].4.contains("qcr="));

    let o = blend(&["task", "corr", "--key", &key, "--target", &price, "--sample", "unlimited", "--index", ix]);
    assert!(o.status.success());

    let o = blend(&["task", "corr", "--key", &key, "--target", &label, "--index", ix]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("node `corr`: non-numeric target"), "{}", stderr(&o));

    let o = blend(&["task", "corr", "--key", &key, "--target", &price, "--sample", "0", "--index", ix]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn union_task_uses_ten_times_k_per_column() {
    let (lake, truth) = gen_lake(4, Profile::default());
    let dir = tempfile::tempdir().unwrap();
    let lake_dir = dir.path().join("lake");
    lake.write_csv(&lake_dir).unwrap();
    let ix = dir.path().join("ix");
    assert!(blend(&["index", "build", "--lake", p(&lake_dir), "--out", p(&ix)]).status.success());

    let mut w = csv::Writer::from_path(dir.path().join("u.csv")).unwrap();
    w.write_record(truth.union.query.iter().map(|(n, _)| n)).unwrap();
    for r in 0..truth.union.query[0].1.len() {
        w.write_record(truth.union.query.iter().map(|(_, c)| &c[r])).unwrap();
    }
    w.flush().unwrap();

    let o = blend(&["task", "union", "--query", p(&dir.path().join("u.csv")), "-k", "3", "--index", p(&ix)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got: Vec<u32> = csv_rows(&stdout(&o)).iter().map(|r| r.1.parse().unwrap()).collect();

    let index = Index::open(&ix).unwrap();
    let plan = build_union_plan(&truth.union.query, 3, Some(30)).unwrap();
    let (want, _) = execute_plan(&plan, &index, &ExecOptions::default()).unwrap();
    assert_eq!(got, want.table_ids());
}

const AUGMENT_PLAN: &str = r#"{"nodes":[
    {"name":"input","kind":"input","params":{"columns":{"q":"q.csv:q","e0":"ex.csv:a","e1":"ex.csv:b"}}},
    {"name":"example","kind":"seeker","seeker":"mc","params":{"k":10,"query":["e0","e1"]},"inputs":["input"]},
    {"name":"query","kind":"seeker","seeker":"sc","params":{"k":10,"query":["q"]},"inputs":["input"]},
    {"name":"combiner","kind":"combiner","combiner":"intersection","params":{"k":10},"inputs":["example","query"]},
    {"name":"terminal","kind":"terminal","inputs":["combiner"]}
]}"#;

#[test]
fn plan_file_matches_augment_task() {
    let f = fixture();
    let plan = f.root.join("plans/augment.json");
    fs::create_dir_all(plan.parent().unwrap()).unwrap();
    // column references resolve against the plan file's directory
    fs::write(&plan, AUGMENT_PLAN.replace("q.csv", "../q.csv").replace("ex.csv", "../ex.csv")).unwrap();
    let ix = p(&f.index);

    let from_file = blend(&["plan", "run", "--plan", p(&plan), "--index", ix, "--trace"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    let (q, a, b) = (f.at("q.csv:q"), f.at("ex.csv:a"), f.at("ex.csv:b"));
    let task = blend(&["task", "augment", "--query", &q, "--example", &a, "--example", &b, "--index", ix]);
    assert!(task.status.success(), "{}", stderr(&task));
    assert_eq!(stdout(&from_file), stdout(&task));
    let rows = csv_rows(&stdout(&task));
    assert_eq!(rows.iter().map(|r| r.2.as_str()).collect::<Vec<_>>(), ["t2.csv", "t3.csv"]); // scored by the mc seeker, which runs last

    let trace: Vec<serde_json::Value> = stderr(&from_file).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(trace.len(), 1);
    assert_eq!(trace[0]["order"], serde_json::json!(["query", "example"]));
    assert_eq!(trace[0]["seekers"][1]["restriction"], "in");
}

#[test]
fn no_optimize_keeps_intersection_table_set() {
    let f = fixture();
    let plan = f.root.join("augment.json");
    fs::write(&plan, AUGMENT_PLAN).unwrap();
    let ix = p(&f.index);
    let a = blend(&["plan", "run", "--plan", p(&plan), "--index", ix]);
    let b = blend(&["plan", "run", "--plan", p(&plan), "--index", ix, "--no-optimize", "--trace"]);
    assert!(b.status.success());
    // scores come from whichever seeker ran last, so only the tables must agree
    let tables = |o: &Output| {
        let mut t: Vec<String> = csv_rows(&stdout(o)).into_iter().map(|r| r.2).collect();
        t.sort();
        t
    };
    assert_eq!(tables(&a), tables(&b));
    let trace: serde_json::Value = serde_json::from_str(stderr(&b).lines().next().unwrap()).unwrap();
    assert_eq!(trace["optimized"], false);
    assert_eq!(trace["order"], serde_json::json!(["example", "query"]));
}

#[test]
fn invalid_plans_exit_with_usage_code() {
    let f = fixture();
    let ix = p(&f.index);
    let cyclic = r#"{"nodes":[
        {"name":"input","kind":"input","params":{"columns":{"q":["x"]}}},
        {"name":"a","kind":"seeker","seeker":"sc","params":{"k":1,"query":["q"]},"inputs":["input"]},
        {"name":"u","kind":"combiner","combiner":"union","params":{"k":1},"inputs":["a","v"]},
        {"name":"v","kind":"combiner","combiner":"union","params":{"k":1},"inputs":["a","u"]},
        {"name":"terminal","kind":"terminal","inputs":["u"]}
    ]}"#;
    let path = f.root.join("cyclic.json");
    fs::write(&path, cyclic).unwrap();
    let o = blend(&["plan", "run", "--plan", p(&path), "--index", ix]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cycle"), "{}", stderr(&o));

    fs::write(&path, "{\"nodes\": [").unwrap();
    assert_eq!(blend(&["plan", "run", "--plan", p(&path), "--index", ix]).status.code(), Some(2));

    let missing = f.at("q.csv:nope");
    let o = blend(&["task", "sc", "--query", &missing, "--index", ix]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_results_still_print_a_header() {
    let f = fixture();
    fs::write(f.root.join("none.csv"), "v\nzzz\n").unwrap();
    let q = f.at("none.csv:v");
    let o = blend(&["task", "keyword", "--query", &q, "--index", p(&f.index)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "rank,table_id,table_path,score,detail\n");
    let o = blend(&["task", "keyword", "--query", &q, "--index", p(&f.index), "--format", "json"]);
    assert_eq!(stdout(&o).trim(), "[]");
}

#[test]
fn normalization_policy_is_honoured() {
    let f = fixture();
    let out = f.root.join("exact");
    let o = blend(&["index", "build", "--lake", &f.at("lake"), "--out", p(&out), "--normalize", "exact"]);
    assert!(o.status.success());
    assert_eq!(Index::open(&out).unwrap().normalization(), Normalization::Exact);
    let o = blend(&["index", "build", "--lake", &f.at("lake"), "--out", p(&out), "--normalize", "upper"]);
    assert_eq!(o.status.code(), Some(2));
}
