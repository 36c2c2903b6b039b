// SPDX-License-Identifier: Apache-2.0

//! Predefined plans for the common discovery tasks.

use super::{InputSpec, NodeSpec, PlanGraph, SeekerNode};
use crate::combiners::{CombinerKind, CombinerSpec};
use crate::error::{Error, Result};
use crate::ingest::{normalize_value, Normalization};
use crate::seekers::SeekerKind;

const INPUT: &str = "input";
const TERMINAL: &str = "terminal";

fn single_seeker(columns: Vec<(String, Vec<String>)>, seeker: SeekerNode) -> Result<PlanGraph> {
    let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
    let mut input = InputSpec::new();
    for (name, values) in columns {
        input = input.column(name, values);
    }
    let mut seeker = seeker;
    seeker.query = names.into_iter().map(super::QueryArg::Column).collect();
    let name = seeker.kind.as_str().to_string();
    let mut g = PlanGraph::new();
    g.add(INPUT, NodeSpec::Input(input), &[])?;
    g.add(&name, NodeSpec::Seeker(seeker), &[INPUT])?;
    g.add(TERMINAL, NodeSpec::Terminal, &[&name])?;
    g.validate()?;
    Ok(g)
}

/// input -> sc -> terminal
pub fn build_join_plan(column: Vec<String>, k: usize) -> Result<PlanGraph> {
    single_seeker(vec![("q".into(), column)], SeekerNode::new(SeekerKind::Sc, Vec::new(), k))
}

/// input -> keyword -> terminal
pub fn build_keyword_plan(values: Vec<String>, k: usize) -> Result<PlanGraph> {
    single_seeker(vec![("q".into(), values)], SeekerNode::new(SeekerKind::Keyword, Vec::new(), k))
}

/// input -> mc -> terminal
pub fn build_mc_join_plan(columns: Vec<Vec<String>>, k: usize) -> Result<PlanGraph> {
    let named = columns.into_iter().enumerate().map(|(i, c)| (format!("q{i}"), c)).collect();
    single_seeker(named, SeekerNode::new(SeekerKind::Mc, Vec::new(), k))
}

/// input -> corr -> terminal
pub fn build_corr_plan(
    key: Vec<String>,
    target: Vec<String>,
    k: usize,
    sample: Option<u32>,
    min_support: u64,
) -> Result<PlanGraph> {
    let mut seeker = SeekerNode::new(SeekerKind::Corr, Vec::new(), k);
    seeker.sample = sample;
    seeker.min_support = min_support;
    single_seeker(vec![("key".into(), key), ("target".into(), target)], seeker)
}

/// Per-column seeker limit used by the union plan: ten times the final `k`.
pub fn union_k_prime(k: usize) -> usize {
    k.saturating_mul(10)
}

/// One sc seeker per usable column (limit `k_prime`) feeding a counter with
/// limit `k`. Columns with no non-blank cell are skipped.
pub fn build_union_plan(table: &[(String, Vec<String>)], k: usize, k_prime: Option<usize>) -> Result<PlanGraph> {
    let k_prime = k_prime.unwrap_or_else(|| union_k_prime(k));
    let usable: Vec<(String, &Vec<String>)> = table
        .iter()
        .enumerate()
        .filter(|(_, (_, values))| values.iter().any(|v| normalize_value(v, Normalization::Exact).is_some()))
        .map(|(i, (name, values))| (format!("col{i}:{name}"), values))
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidParameter("union query table has no non-empty column".into()));
    }
    let mut input = InputSpec::new();
    for (name, values) in &usable {
        input = input.column(name.clone(), (*values).clone());
    }
    let mut g = PlanGraph::new();
    g.add(INPUT, NodeSpec::Input(input), &[])?;
    for (name, _) in &usable {
        g.add(name, NodeSpec::Seeker(SeekerNode::on_columns(SeekerKind::Sc, &[name], k_prime)), &[INPUT])?;
    }
    let seekers: Vec<&str> = usable.iter().map(|(n, _)| n.as_str()).collect();
    g.add("counter", NodeSpec::Combiner(CombinerSpec::new(CombinerKind::Counter, k)?), &seekers)?;
    g.add(TERMINAL, NodeSpec::Terminal, &["counter"])?;
    g.validate()?;
    Ok(g)
}

/// mc seeker on the example columns and sc seeker on the query column, both
/// feeding an intersection.
pub fn build_augmentation_plan(examples: Vec<Vec<String>>, query: Vec<String>, k: usize) -> Result<PlanGraph> {
    let mut input = InputSpec::new().column("q", query);
    let mut example_cols = Vec::new();
    for (i, col) in examples.into_iter().enumerate() {
        let name = format!("e{i}");
        input = input.column(name.clone(), col);
        example_cols.push(name);
    }
    let example_refs: Vec<&str> = example_cols.iter().map(String::as_str).collect();
    let mut g = PlanGraph::new();
    g.add(INPUT, NodeSpec::Input(input), &[])?;
    g.add("example", NodeSpec::Seeker(SeekerNode::on_columns(SeekerKind::Mc, &example_refs, k)), &[INPUT])?;
    g.add("query", NodeSpec::Seeker(SeekerNode::on_columns(SeekerKind::Sc, &["q"], k)), &[INPUT])?;
    g.add(
        "combiner",
        NodeSpec::Combiner(CombinerSpec::new(CombinerKind::Intersection, k)?),
        &["example", "query"],
    )?;
    g.add(TERMINAL, NodeSpec::Terminal, &["combiner"])?;
    g.validate()?;
    Ok(g)
}
