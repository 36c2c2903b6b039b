// SPDX-License-Identifier: Apache-2.0

//! JSON plan files.
//!
//! ```json
//! {"nodes": [
//!   {"name": "input", "kind": "input", "params": {"columns": {"q": "query.csv:city"}}, "inputs": []},
//!   {"name": "join", "kind": "seeker", "seeker": "sc", "params": {"k": 10, "query": ["q"]}, "inputs": ["input"]},
//!   {"name": "terminal", "kind": "terminal", "params": {}, "inputs": ["join"]}
//! ]}
//! ```
//!
//! Input columns are inline lists or `file.csv:column` references. Seeker
//! `query` entries name an upstream input column or give a literal list.
//! Correlation seekers also take `h` (sample rows, integer or `"unlimited"`)
//! and `m` (minimum support).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ColumnRef, ColumnSource, InputSpec, NodeSpec, PlanGraph, PlanNode, QueryArg, SeekerNode};
use crate::combiners::{CombinerKind, CombinerSpec};
use crate::error::PlanError;
use crate::seekers::{SeekerKind, DEFAULT_MIN_SUPPORT, DEFAULT_SAMPLE};

const DEFAULT_K: usize = 10;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    nodes: Vec<NodeJson>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindTag {
    Input,
    Seeker,
    Combiner,
    Terminal,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeJson {
    name: String,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seeker: Option<SeekerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    combiner: Option<CombinerKind>,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    inputs: Vec<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<Vec<QueryJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    columns: Option<BTreeMap<String, SourceJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<SampleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum QueryJson {
    Column(String),
    Values(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SourceJson {
    Values(Vec<String>),
    Ref(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SampleJson {
    Rows(u32),
    Word(String),
}

fn invalid(node: &str, message: impl Into<String>) -> PlanError {
    PlanError::Invalid {
        node: node.to_string(),
        message: message.into(),
    }
}

fn node_from_json(n: NodeJson) -> Result<PlanNode, PlanError> {
    let name = n.name;
    let p = n.params;
    let reject = |present: bool, field: &str| -> Result<(), PlanError> {
        if present {
            Err(invalid(&name, format!("field `{field}` does not apply to this node kind")))
        } else {
            Ok(())
        }
    };
    reject(n.seeker.is_some() && !matches!(n.kind, KindTag::Seeker), "seeker")?;
    reject(n.combiner.is_some() && !matches!(n.kind, KindTag::Combiner), "combiner")?;
    let spec = match n.kind {
        KindTag::Input => {
            reject(p.k.is_some() || p.query.is_some() || p.h.is_some() || p.m.is_some(), "params")?;
            let mut input = InputSpec::new();
            for (col, src) in p.columns.unwrap_or_default() {
                let source = match src {
                    SourceJson::Values(v) => ColumnSource::Inline(v),
                    SourceJson::Ref(r) => ColumnSource::File(ColumnRef::parse(&r)?),
                };
                input.columns.insert(col, source);
            }
            NodeSpec::Input(input)
        }
        KindTag::Seeker => {
            reject(p.columns.is_some(), "params.columns")?;
            let kind = n.seeker.ok_or_else(|| invalid(&name, "seeker node needs a `seeker` kind"))?;
            if kind != SeekerKind::Corr {
                reject(p.h.is_some() || p.m.is_some(), "params.h/m")?;
            }
            let query = p
                .query
                .ok_or_else(|| invalid(&name, "seeker node needs `params.query`"))?
                .into_iter()
                .map(|q| match q {
                    QueryJson::Column(c) => QueryArg::Column(c),
                    QueryJson::Values(v) => QueryArg::Values(v),
                })
                .collect();
            let sample = match p.h {
                None => Some(DEFAULT_SAMPLE),
                Some(SampleJson::Rows(h)) => Some(h),
                Some(SampleJson::Word(w)) if w == "unlimited" => None,
                Some(SampleJson::Word(w)) => return Err(invalid(&name, format!("bad h `{w}`"))),
            };
            NodeSpec::Seeker(SeekerNode {
                kind,
                query,
                k: p.k.unwrap_or(DEFAULT_K),
                sample,
                min_support: p.m.unwrap_or(DEFAULT_MIN_SUPPORT),
            })
        }
        KindTag::Combiner => {
            reject(p.query.is_some() || p.columns.is_some() || p.h.is_some() || p.m.is_some(), "params")?;
            let kind = n.combiner.ok_or_else(|| invalid(&name, "combiner node needs a `combiner` kind"))?;
            let k = p.k.unwrap_or(DEFAULT_K);
            NodeSpec::Combiner(CombinerSpec::new(kind, k).map_err(|e| invalid(&name, e.to_string()))?)
        }
        KindTag::Terminal => {
            reject(p.k.is_some() || p.query.is_some() || p.columns.is_some() || p.h.is_some() || p.m.is_some(), "params")?;
            NodeSpec::Terminal
        }
    };
    Ok(PlanNode {
        name,
        spec,
        inputs: n.inputs,
    })
}

fn node_to_json(n: &PlanNode) -> NodeJson {
    let mut out = NodeJson {
        name: n.name.clone(),
        kind: KindTag::Terminal,
        seeker: None,
        combiner: None,
        params: Params::default(),
        inputs: n.inputs.clone(),
    };
    match &n.spec {
        NodeSpec::Input(input) => {
            out.kind = KindTag::Input;
            out.params.columns = Some(
                input
                    .columns
                    .iter()
                    .map(|(k, v)| {
                        let src = match v {
                            ColumnSource::Inline(v) => SourceJson::Values(v.clone()),
                            ColumnSource::File(r) => SourceJson::Ref(r.to_string()),
                        };
                        (k.clone(), src)
                    })
                    .collect(),
            );
        }
        NodeSpec::Seeker(s) => {
            out.kind = KindTag::Seeker;
            out.seeker = Some(s.kind);
            out.params.k = Some(s.k);
            out.params.query = Some(
                s.query
                    .iter()
                    .map(|q| match q {
                        QueryArg::Column(c) => QueryJson::Column(c.clone()),
                        QueryArg::Values(v) => QueryJson::Values(v.clone()),
                    })
                    .collect(),
            );
            if s.kind == SeekerKind::Corr {
                out.params.h = Some(match s.sample {
                    Some(h) => SampleJson::Rows(h),
                    None => SampleJson::Word("unlimited".into()),
                });
                out.params.m = Some(s.min_support);
            }
        }
        NodeSpec::Combiner(c) => {
            out.kind = KindTag::Combiner;
            out.combiner = Some(c.kind);
            out.params.k = Some(c.k);
        }
        NodeSpec::Terminal => {}
    }
    out
}

impl PlanGraph {
    /// Parses and validates a plan file.
    pub fn parse_json(text: &str) -> Result<PlanGraph, PlanError> {
        let file: PlanFile = serde_json::from_str(text).map_err(|e| PlanError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let nodes = file.nodes.into_iter().map(node_from_json).collect::<Result<Vec<_>, _>>()?;
        let graph = PlanGraph::from_nodes_unchecked(nodes);
        graph.validate()?;
        Ok(graph)
    }

    /// Canonical JSON rendering (pretty-printed, fixed key order).
    pub fn to_json(&self) -> String {
        let file = PlanFile {
            nodes: self.nodes.iter().map(node_to_json).collect(),
        };
        serde_json::to_string_pretty(&file).expect("plan serializes")
    }
}
