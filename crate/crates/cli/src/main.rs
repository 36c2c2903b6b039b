// SPDX-License-Identifier: Apache-2.0

//! `blend`: build a lake index, run predefined discovery tasks, run plan files.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or plan validation error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use blend_core::optimizer::{execute_plan, ExecOptions};
use blend_core::plan::{
    build_augmentation_plan, build_corr_plan, build_join_plan, build_keyword_plan, build_mc_join_plan,
    build_union_plan, read_query_csv, ColumnRef,
};
use blend_core::seekers::DEFAULT_MIN_SUPPORT;
use blend_core::{Index, Normalization, PlanGraph, RankedTables};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "blend", version, about = "Data-lake discovery over a single cell index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect an index.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Run a predefined discovery task.
    Task(TaskArgs),
    /// Execute plan files.
    #[command(subcommand)]
    Plan(PlanCmd),
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Index every .csv file under a directory.
    Build {
        #[arg(long)]
        lake: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "lower")]
        normalize: Normalization,
        /// Replace an existing index at --out.
        #[arg(long)]
        force: bool,
    },
    /// Print the canonical dump of an index.
    Dump {
        #[arg(long, env = "BLEND_INDEX")]
        index: PathBuf,
    },
}

#[derive(Subcommand)]
enum PlanCmd {
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
        /// Print optimizer groups as JSON lines on stderr.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Args)]
struct ExecArgs {
    #[arg(long, env = "BLEND_INDEX")]
    index: PathBuf,
    /// Run seekers unrestricted in declaration order.
    #[arg(long)]
    no_optimize: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskKind {
    Sc,
    Keyword,
    Mc,
    Corr,
    Union,
    Augment,
}

#[derive(Args)]
struct TaskArgs {
    kind: TaskKind,
    /// `file.csv:column` (repeat for mc); a whole `file.csv` for union.
    #[arg(long)]
    query: Vec<String>,
    /// Example column for augment, `file.csv:column`; repeat per column.
    #[arg(long)]
    example: Vec<String>,
    #[arg(long)]
    key: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    /// Per-table row sample for corr: a count or `unlimited`.
    #[arg(long, value_parser = parse_sample)]
    sample: Option<Sample>,
    #[arg(long, default_value_t = DEFAULT_MIN_SUPPORT)]
    min_support: u64,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Clone, Copy)]
struct Sample(Option<u32>);

fn parse_sample(s: &str) -> Result<Sample, String> {
    if s == "unlimited" {
        return Ok(Sample(None));
    }
    match s.parse::<u32>() {
        Ok(h) if h > 0 => Ok(Sample(Some(h))),
        _ => Err(format!("expected a positive integer or `unlimited`, got `{s}`")),
    }
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

#[derive(Serialize)]
struct OutputRow<'a> {
    rank: usize,
    table_id: u32,
    table_path: &'a str,
    score: f64,
    detail: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Index(IndexCmd::Build {
            lake,
            out,
            normalize,
            force,
        }) => {
            let (index, mut report) = Index::build_from_dir(&lake, normalize).map_err(runtime)?;
            report.bytes = index.save(&out, force).map_err(runtime)?;
            let json = serde_json::to_string_pretty(&report).map_err(runtime)?;
            println!("{json}");
            Ok(())
        }
        Command::Index(IndexCmd::Dump { index }) => {
            let index = Index::open(&index).map_err(runtime)?;
            let stdout = std::io::stdout().lock();
            index.dump_canonical(std::io::BufWriter::new(stdout)).map_err(runtime)
        }
        Command::Task(args) => {
            let plan = task_plan(&args)?;
            execute(&plan, &args.exec, false)
        }
        Command::Plan(PlanCmd::Run { plan, exec, trace }) => {
            let text = std::fs::read_to_string(&plan)
                .with_context(|| format!("reading {}", plan.display()))
                .map_err(runtime)?;
            let mut graph = PlanGraph::parse_json(&text).map_err(usage)?;
            let base = plan.parent().unwrap_or(Path::new("."));
            graph.resolve_files(base).map_err(usage)?;
            graph.validate().map_err(usage)?;
            execute(&graph, &exec, trace)
        }
    }
}

fn load_ref(reference: &str) -> Result<Vec<String>, Failure> {
    let r = ColumnRef::parse(reference).map_err(usage)?;
    r.load(Path::new(".")).map_err(usage)
}

fn one_query(args: &TaskArgs) -> Result<Vec<String>, Failure> {
    match args.query.as_slice() {
        [q] => load_ref(q),
        _ => Err(usage(anyhow::anyhow!("expected exactly one --query file.csv:column"))),
    }
}

fn required(flag: &str, value: &Option<String>) -> Result<Vec<String>, Failure> {
    let v = value.as_deref().ok_or_else(|| usage(anyhow::anyhow!("--{flag} is required")))?;
    load_ref(v)
}

fn task_plan(args: &TaskArgs) -> Result<PlanGraph, Failure> {
    let k = args.k;
    let plan = match args.kind {
        TaskKind::Sc => build_join_plan(one_query(args)?, k),
        TaskKind::Keyword => build_keyword_plan(one_query(args)?, k),
        TaskKind::Mc => {
            let cols = args.query.iter().map(|q| load_ref(q)).collect::<Result<Vec<_>, _>>()?;
            build_mc_join_plan(cols, k)
        }
        TaskKind::Corr => {
            let key = required("key", &args.key)?;
            let target = required("target", &args.target)?;
            let sample = args.sample.and_then(|s| s.0);
            build_corr_plan(key, target, k, sample, args.min_support)
        }
        TaskKind::Union => {
            let [file] = args.query.as_slice() else {
                return Err(usage(anyhow::anyhow!("union expects exactly one --query file.csv")));
            };
            let (header, rows) = read_query_csv(Path::new(file), file).map_err(usage)?;
            let table: Vec<(String, Vec<String>)> = header
                .iter()
                .enumerate()
                .map(|(c, name)| (name.clone(), rows.iter().map(|r| r.get(c).cloned().unwrap_or_default()).collect()))
                .collect();
            build_union_plan(&table, k, None)
        }
        TaskKind::Augment => {
            let query = one_query(args)?;
            let examples = args.example.iter().map(|e| load_ref(e)).collect::<Result<Vec<_>, _>>()?;
            build_augmentation_plan(examples, query, k)
        }
    };
    plan.map_err(usage)
}

fn execute(plan: &PlanGraph, exec: &ExecArgs, trace: bool) -> Result<(), Failure> {
    let index = Index::open(&exec.index).map_err(runtime)?;
    let opts = if exec.no_optimize {
        ExecOptions::unoptimized()
    } else {
        ExecOptions::default()
    };
    let (result, exec_trace) = execute_plan(plan, &index, &opts).map_err(runtime)?;
    if trace {
        let mut err = std::io::stderr().lock();
        for line in exec_trace.json_lines() {
            let _ = writeln!(err, "{line}");
        }
    }
    print_results(&index, &result, exec.format).map_err(runtime)
}

fn print_results(index: &Index, result: &RankedTables, format: Format) -> anyhow::Result<()> {
    let mut rows = Vec::with_capacity(result.len());
    for (i, e) in result.iter().enumerate() {
        rows.push(OutputRow {
            rank: i + 1,
            table_id: e.table_id,
            table_path: &index.table(e.table_id)?.path,
            score: e.score,
            detail: e.detail.to_string(),
        });
    }
    let stdout = std::io::stdout().lock();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout);
            if rows.is_empty() {
                w.write_record(["rank", "table_id", "table_path", "score", "detail"])?;
            }
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = std::io::BufWriter::new(stdout);
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
