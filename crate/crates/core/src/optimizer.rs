// SPDX-License-Identifier: Apache-2.0

//! Plan execution: group seekers by the combiner they feed, rank each group
//! by cost class, run it sequentially while narrowing the candidate tables of
//! later seekers, then apply the combiner.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::combiners::{combine, CombinerKind};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::plan::{NodeSpec, PlanGraph};
use crate::ranking::RankedTables;
use crate::seekers::{seek_with_stats, Restriction, ScanStats, SeekerSpec};

/// Seekers feeding one combiner, plus any upstream combiners it consumes.
/// `combiner` is `None` for a seeker wired straight to the terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionGroup {
    pub seekers: Vec<String>,
    pub upstream: Vec<String>,
    pub combiner: Option<String>,
}

/// How seekers are ordered inside a group when optimizing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SeekerOrder {
    /// Cost class, then query size, then node name.
    #[default]
    CostClass,
    /// Declaration order of the combiner's inputs.
    Declaration,
    /// Listed names first, in list order; the rest by cost class.
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOptions {
    pub optimize: bool,
    pub order: SeekerOrder,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            optimize: true,
            order: SeekerOrder::CostClass,
        }
    }
}

impl ExecOptions {
    pub fn unoptimized() -> Self {
        ExecOptions {
            optimize: false,
            order: SeekerOrder::Declaration,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SeekerTrace {
    pub name: String,
    pub kind: &'static str,
    /// `"in"` or `"not_in"` when a restriction was applied.
    pub restriction: Option<&'static str>,
    pub restriction_size: usize,
    pub postings_scanned: u64,
    pub rows_fetched: u64,
    pub results: usize,
    pub skipped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupTrace {
    pub group: usize,
    pub combiner: Option<String>,
    pub combiner_kind: Option<&'static str>,
    pub optimized: bool,
    pub order: Vec<String>,
    pub seekers: Vec<SeekerTrace>,
    pub short_circuited: bool,
    pub output_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecTrace {
    pub groups: Vec<GroupTrace>,
}

impl ExecTrace {
    pub fn stats(&self) -> ScanStats {
        let mut total = ScanStats::default();
        for s in self.groups.iter().flat_map(|g| &g.seekers) {
            total.add(ScanStats {
                postings_scanned: s.postings_scanned,
                rows_fetched: s.rows_fetched,
            });
        }
        total
    }

    /// One JSON object per group.
    pub fn json_lines(&self) -> Vec<String> {
        self.groups
            .iter()
            .map(|g| serde_json::to_string(g).expect("trace serializes"))
            .collect()
    }
}

/// Execution groups in topological order of their combiners.
pub fn group_plan(graph: &PlanGraph) -> Result<Vec<ExecutionGroup>> {
    graph.validate()?;
    let nodes = graph.nodes();
    let mut groups = Vec::new();
    for i in graph.topo_order()? {
        let node = &nodes[i];
        let is_seeker = |name: &String| matches!(graph.node(name).map(|n| &n.spec), Some(NodeSpec::Seeker(_)));
        match &node.spec {
            NodeSpec::Combiner(_) => {
                let (seekers, upstream): (Vec<String>, Vec<String>) = node.inputs.iter().cloned().partition(is_seeker);
                groups.push(ExecutionGroup {
                    seekers,
                    upstream,
                    combiner: Some(node.name.clone()),
                });
            }
            NodeSpec::Terminal if is_seeker(&node.inputs[0]) => groups.push(ExecutionGroup {
                seekers: vec![node.inputs[0].clone()],
                upstream: Vec::new(),
                combiner: None,
            }),
            _ => {}
        }
    }
    Ok(groups)
}

/// Sorts `(name, spec)` pairs by cost class, query size, then name.
pub fn rank_group(seekers: &mut [(String, SeekerSpec)]) {
    seekers.sort_by(|(an, a), (bn, b)| {
        (a.kind.cost_class(), a.query_size(), an).cmp(&(b.kind.cost_class(), b.query_size(), bn))
    });
}

/// Narrows a seeker's candidate tables given the tables produced by the
/// seekers that already ran in its group. `prior` is `None` for the first
/// seeker. For a difference group the caller passes the subtrahend's tables
/// only when the subtrahend ran first.
pub fn rewrite_restriction(spec: SeekerSpec, combiner: CombinerKind, prior: Option<&BTreeSet<u32>>) -> SeekerSpec {
    let Some(prior) = prior else { return spec };
    match combiner {
        CombinerKind::Intersection => spec.with_restriction(Some(Restriction::In(prior.clone()))),
        CombinerKind::Difference => spec.with_restriction(Some(Restriction::NotIn(prior.clone()))),
        CombinerKind::Union | CombinerKind::Counter => spec,
    }
}

fn table_set(r: &RankedTables) -> BTreeSet<u32> {
    r.iter().map(|e| e.table_id).collect()
}

fn apply_order(seekers: &mut [(String, SeekerSpec)], order: &SeekerOrder) {
    match order {
        SeekerOrder::Declaration => {}
        SeekerOrder::CostClass => rank_group(seekers),
        SeekerOrder::Explicit(names) => {
            rank_group(seekers);
            seekers.sort_by_key(|(n, _)| names.iter().position(|x| x == n).unwrap_or(usize::MAX));
        }
    }
}

struct Runner<'a> {
    graph: &'a PlanGraph,
    index: &'a Index,
    /// Unrestricted seeker outputs, reused when not optimizing.
    cache: HashMap<String, (RankedTables, ScanStats)>,
}

impl Runner<'_> {
    fn run_seeker(&self, name: &str, spec: &SeekerSpec) -> Result<(RankedTables, ScanStats)> {
        let mut stats = ScanStats::default();
        let out = seek_with_stats(self.index, spec, &mut stats).map_err(|e| e.at_node(name))?;
        Ok((out, stats))
    }

    fn run_unrestricted(&mut self, name: &str, spec: &SeekerSpec) -> Result<(RankedTables, ScanStats, bool)> {
        if let Some((r, s)) = self.cache.get(name) {
            return Ok((r.clone(), *s, true));
        }
        let (r, s) = self.run_seeker(name, spec)?;
        self.cache.insert(name.to_string(), (r.clone(), s));
        Ok((r, s, false))
    }

    fn seeker_specs(&self, names: &[String]) -> Result<Vec<(String, SeekerSpec)>> {
        names.iter().map(|n| Ok((n.clone(), self.graph.seeker_spec(n)?))).collect()
    }

    fn run_group(
        &mut self,
        group: &ExecutionGroup,
        trace: &mut GroupTrace,
        done: &HashMap<String, RankedTables>,
        options: &ExecOptions,
    ) -> Result<RankedTables> {
        let mut seekers = self.seeker_specs(&group.seekers)?;
        let combiner = group.combiner.as_ref().and_then(|c| self.graph.combiner_spec(c));
        trace.combiner = group.combiner.clone();
        trace.combiner_kind = combiner.map(|c| c.kind.as_str());
        trace.optimized = options.optimize;
        if options.optimize {
            apply_order(&mut seekers, &options.order);
        }
        trace.order = seekers.iter().map(|(n, _)| n.clone()).collect();

        let Some(combiner) = combiner else {
            let (name, spec) = &seekers[0];
            let (out, stats) = self.run_seeker(name, spec)?;
            trace.seekers.push(seeker_trace(name, spec, stats, out.len()));
            return Ok(out);
        };
        let combiner_name = group.combiner.as_deref().unwrap();
        let node = self.graph.node(combiner_name).expect("validated");
        let upstream: Vec<RankedTables> = group.upstream.iter().map(|u| done[u].clone()).collect();

        let mut outputs: HashMap<String, RankedTables> = HashMap::new();
        // running intersection of table sets, or the subtrahend's tables
        let mut prior: Option<BTreeSet<u32>> = None;
        for (pos, (name, spec)) in seekers.iter().enumerate() {
            if !options.optimize {
                let (out, stats, cached) = self.run_unrestricted(name, spec)?;
                let mut t = seeker_trace(name, spec, stats, out.len());
                if cached {
                    t.postings_scanned = 0;
                    t.rows_fetched = 0;
                }
                trace.seekers.push(t);
                outputs.insert(name.clone(), out);
                continue;
            }
            if trace.short_circuited {
                let mut t = seeker_trace(name, spec, ScanStats::default(), 0);
                t.skipped = true;
                trace.seekers.push(t);
                continue;
            }
            let rewritten = rewrite_restriction(spec.clone(), combiner.kind, prior.as_ref());
            let (out, stats) = self.run_seeker(name, &rewritten)?;
            trace.seekers.push(seeker_trace(name, &rewritten, stats, out.len()));
            let tables = table_set(&out);
            match combiner.kind {
                CombinerKind::Intersection => {
                    let next = match prior.take() {
                        None => tables,
                        Some(p) => p.intersection(&tables).copied().collect(),
                    };
                    trace.short_circuited = next.is_empty() && pos + 1 < seekers.len();
                    prior = Some(next);
                }
                CombinerKind::Difference if pos == 0 && node.inputs.get(1) == Some(name) => {
                    prior = Some(tables);
                }
                _ => {}
            }
            outputs.insert(name.clone(), out);
        }

        if trace.short_circuited {
            return Ok(RankedTables::new());
        }
        let inputs: Vec<RankedTables> = if combiner.kind == CombinerKind::Difference {
            node.inputs
                .iter()
                .map(|n| outputs.get(n).or_else(|| done.get(n)).cloned().expect("inputs executed"))
                .collect()
        } else {
            upstream
                .into_iter()
                .chain(seekers.iter().map(|(n, _)| outputs.remove(n).expect("executed")))
                .collect()
        };
        combine(combiner.kind, &inputs, combiner.k).map_err(|e| e.at_node(combiner_name))
    }
}

fn seeker_trace(name: &str, spec: &SeekerSpec, stats: ScanStats, results: usize) -> SeekerTrace {
    let (restriction, restriction_size) = match &spec.restriction {
        None => (None, 0),
        Some(Restriction::In(s)) => (Some("in"), s.len()),
        Some(Restriction::NotIn(s)) => (Some("not_in"), s.len()),
    };
    SeekerTrace {
        name: name.to_string(),
        kind: spec.kind.as_str(),
        restriction,
        restriction_size,
        postings_scanned: stats.postings_scanned,
        rows_fetched: stats.rows_fetched,
        results,
        skipped: false,
    }
}

/// Runs a plan and returns the terminal's ranked tables with a per-group trace.
pub fn execute_plan(graph: &PlanGraph, index: &Index, options: &ExecOptions) -> Result<(RankedTables, ExecTrace)> {
    let groups = group_plan(graph)?;
    let mut runner = Runner {
        graph,
        index,
        cache: HashMap::new(),
    };
    let mut done: HashMap<String, RankedTables> = HashMap::new();
    let mut trace = ExecTrace::default();
    let mut terminal_result = None;
    for (i, group) in groups.iter().enumerate() {
        let mut gt = GroupTrace {
            group: i,
            ..GroupTrace::default()
        };
        let out = runner.run_group(group, &mut gt, &done, options)?;
        gt.output_size = out.len();
        trace.groups.push(gt);
        match &group.combiner {
            Some(c) => {
                done.insert(c.clone(), out);
            }
            None => terminal_result = Some(out),
        }
    }
    let terminal = graph.terminal().ok_or(Error::Plan(crate::error::PlanError::TerminalCount(0)))?;
    let result = match terminal_result {
        Some(r) => r,
        None => done.remove(&terminal.inputs[0]).unwrap_or_default(),
    };
    Ok((result, trace))
}
