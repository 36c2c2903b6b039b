// SPDX-License-Identifier: Apache-2.0

//! Discovery plans: a DAG of input, seeker, combiner and terminal nodes.

mod builders;
mod json;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::{Path, PathBuf};

pub use builders::{
    build_augmentation_plan, build_corr_plan, build_join_plan, build_keyword_plan, build_mc_join_plan,
    build_union_plan, union_k_prime,
};

use crate::combiners::CombinerSpec;
use crate::error::{PlanError, Result};
use crate::seekers::{SeekerKind, SeekerSpec, DEFAULT_MIN_SUPPORT, DEFAULT_SAMPLE};

/// `path.csv:ColumnName`, split at the last colon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRef {
    pub path: PathBuf,
    pub column: String,
}

impl ColumnRef {
    pub fn parse(reference: &str) -> Result<ColumnRef, PlanError> {
        let bad = |message: &str| PlanError::ColumnRef {
            reference: reference.to_string(),
            message: message.to_string(),
        };
        let (path, column) = reference.rsplit_once(':').ok_or_else(|| bad("expected `file.csv:column`"))?;
        if path.is_empty() || column.is_empty() {
            return Err(bad("expected `file.csv:column`"));
        }
        Ok(ColumnRef {
            path: PathBuf::from(path),
            column: column.to_string(),
        })
    }

    /// Reads the referenced column's raw values; relative paths resolve
    /// against `base`.
    pub fn load(&self, base: &Path) -> Result<Vec<String>, PlanError> {
        let (header, rows) = read_query_csv(&base.join(&self.path), &self.to_string())?;
        let idx = header.iter().position(|h| h == &self.column).ok_or_else(|| PlanError::ColumnRef {
            reference: self.to_string(),
            message: "no such column in header".into(),
        })?;
        Ok(rows.into_iter().map(|mut r| if idx < r.len() { r.swap_remove(idx) } else { String::new() }).collect())
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.path.display(), self.column)
    }
}

/// Reads a query CSV file as header plus raw rows.
pub fn read_query_csv(path: &Path, label: &str) -> Result<(Vec<String>, Vec<Vec<String>>), PlanError> {
    let err = |message: String| PlanError::ColumnRef {
        reference: label.to_string(),
        message,
    };
    let bytes = std::fs::read(path).map_err(|e| err(e.to_string()))?;
    let raw = crate::ingest::parse_csv_bytes(label, &bytes).map_err(err)?;
    Ok((raw.header, raw.rows))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSource {
    Inline(Vec<String>),
    File(ColumnRef),
}

/// Named query columns available to downstream seekers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputSpec {
    pub columns: BTreeMap<String, ColumnSource>,
}

impl InputSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(mut self, name: impl Into<String>, values: Vec<String>) -> Self {
        self.columns.insert(name.into(), ColumnSource::Inline(values));
        self
    }

    pub fn file_column(mut self, name: impl Into<String>, reference: ColumnRef) -> Self {
        self.columns.insert(name.into(), ColumnSource::File(reference));
        self
    }
}

/// A query argument of a seeker: a column of an upstream input or literal values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryArg {
    Column(String),
    Values(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeekerNode {
    pub kind: SeekerKind,
    pub query: Vec<QueryArg>,
    pub k: usize,
    pub sample: Option<u32>,
    pub min_support: u64,
}

impl SeekerNode {
    pub fn new(kind: SeekerKind, query: Vec<QueryArg>, k: usize) -> Self {
        SeekerNode {
            kind,
            query,
            k,
            sample: Some(DEFAULT_SAMPLE),
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }

    pub fn on_columns(kind: SeekerKind, columns: &[&str], k: usize) -> Self {
        Self::new(kind, columns.iter().map(|c| QueryArg::Column(c.to_string())).collect(), k)
    }

    fn check(&self, node: &str) -> Result<(), PlanError> {
        let got = self.query.len();
        let ok = match self.kind {
            SeekerKind::Sc | SeekerKind::Keyword => got == 1,
            SeekerKind::Corr => got == 2,
            SeekerKind::Mc => got >= 2,
        };
        if !ok {
            return Err(PlanError::Arity {
                node: node.to_string(),
                message: format!("{} seeker cannot take {got} query column(s)", self.kind),
            });
        }
        if self.k == 0 || self.sample == Some(0) {
            return Err(PlanError::Invalid {
                node: node.to_string(),
                message: "k and h must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeSpec {
    Input(InputSpec),
    Seeker(SeekerNode),
    Combiner(CombinerSpec),
    Terminal,
}

impl NodeSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NodeSpec::Input(_) => "input",
            NodeSpec::Seeker(_) => "seeker",
            NodeSpec::Combiner(_) => "combiner",
            NodeSpec::Terminal => "terminal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    pub name: String,
    pub spec: NodeSpec,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlanGraph {
    nodes: Vec<PlanNode>,
}

impl PlanGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<&PlanNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<PlanNode>) -> Self {
        PlanGraph { nodes }
    }

    /// Appends a node wired to existing upstream nodes.
    pub fn add(&mut self, name: &str, spec: NodeSpec, upstream: &[&str]) -> Result<&mut Self, PlanError> {
        if self.node(name).is_some() {
            return Err(PlanError::DuplicateName(name.to_string()));
        }
        if upstream.contains(&name) {
            return Err(PlanError::Cycle(name.to_string()));
        }
        if let Some(missing) = upstream.iter().find(|u| self.node(u).is_none()) {
            return Err(PlanError::UnknownUpstream {
                node: name.to_string(),
                upstream: missing.to_string(),
            });
        }
        let node = PlanNode {
            name: name.to_string(),
            spec,
            inputs: upstream.iter().map(|s| s.to_string()).collect(),
        };
        check_local(&node)?;
        let by_name: HashMap<&str, &PlanNode> = self.nodes.iter().map(|n| (n.name.as_str(), n)).collect();
        check_upstream_kinds(&node, &by_name)?;
        self.nodes.push(node);
        Ok(self)
    }

    /// Checks every structural invariant of a runnable plan.
    pub fn validate(&self) -> Result<(), PlanError> {
        let mut by_name: HashMap<&str, &PlanNode> = HashMap::new();
        for n in &self.nodes {
            if by_name.insert(&n.name, n).is_some() {
                return Err(PlanError::DuplicateName(n.name.clone()));
            }
        }
        for n in &self.nodes {
            if n.inputs.contains(&n.name) {
                return Err(PlanError::Cycle(n.name.clone()));
            }
            if let Some(missing) = n.inputs.iter().find(|u| !by_name.contains_key(u.as_str())) {
                return Err(PlanError::UnknownUpstream {
                    node: n.name.clone(),
                    upstream: missing.clone(),
                });
            }
        }
        self.topo_order()?;
        for n in &self.nodes {
            check_local(n)?;
            check_upstream_kinds(n, &by_name)?;
        }
        let terminals: Vec<&PlanNode> = self.nodes.iter().filter(|n| matches!(n.spec, NodeSpec::Terminal)).collect();
        if terminals.len() != 1 {
            return Err(PlanError::TerminalCount(terminals.len()));
        }
        if !self.nodes.iter().any(|n| matches!(n.spec, NodeSpec::Input(_))) {
            return Err(PlanError::NoInput);
        }
        // reverse reachability from the terminal
        let mut reaches = std::collections::HashSet::new();
        let mut queue = VecDeque::from([terminals[0].name.as_str()]);
        while let Some(name) = queue.pop_front() {
            if reaches.insert(name) {
                queue.extend(by_name[name].inputs.iter().map(String::as_str));
            }
        }
        if let Some(n) = self
            .nodes
            .iter()
            .find(|n| matches!(n.spec, NodeSpec::Seeker(_) | NodeSpec::Combiner(_)) && !reaches.contains(n.name.as_str()))
        {
            return Err(PlanError::Unreachable(n.name.clone()));
        }
        Ok(())
    }

    /// Node indices in dependency order (declaration order among peers).
    pub fn topo_order(&self) -> Result<Vec<usize>, PlanError> {
        let index: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut downstream: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for u in &n.inputs {
                if let Some(&j) = index.get(u.as_str()) {
                    indegree[i] += 1;
                    downstream[j].push(i);
                }
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &d in &downstream[i] {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    ready.insert(d);
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck = (0..self.nodes.len()).find(|&i| indegree[i] > 0).unwrap();
            return Err(PlanError::Cycle(self.nodes[stuck].name.clone()));
        }
        Ok(order)
    }

    /// Replaces file column references with their loaded values.
    pub fn resolve_files(&mut self, base: &Path) -> Result<(), PlanError> {
        for n in &mut self.nodes {
            if let NodeSpec::Input(input) = &mut n.spec {
                for source in input.columns.values_mut() {
                    if let ColumnSource::File(r) = source {
                        *source = ColumnSource::Inline(r.load(base)?);
                    }
                }
            }
        }
        Ok(())
    }

    /// Materializes the seeker spec of node `name` from its upstream inputs.
    pub fn seeker_spec(&self, name: &str) -> Result<SeekerSpec> {
        let node = self.node(name).ok_or_else(|| PlanError::UnknownUpstream {
            node: name.to_string(),
            upstream: name.to_string(),
        })?;
        let NodeSpec::Seeker(seeker) = &node.spec else {
            return Err(PlanError::Invalid {
                node: name.to_string(),
                message: "not a seeker".into(),
            }
            .into());
        };
        let mut columns = Vec::with_capacity(seeker.query.len());
        for arg in &seeker.query {
            columns.push(match arg {
                QueryArg::Values(v) => v.clone(),
                QueryArg::Column(c) => self.input_column(node, c)?,
            });
        }
        let spec = SeekerSpec::new(seeker.kind, columns, seeker.k)
            .map_err(|e| e.at_node(name))?
            .with_sample(seeker.sample)
            .with_min_support(seeker.min_support);
        Ok(spec)
    }

    fn input_column(&self, node: &PlanNode, column: &str) -> Result<Vec<String>, PlanError> {
        for up in &node.inputs {
            if let Some(NodeSpec::Input(input)) = self.node(up).map(|n| &n.spec) {
                match input.columns.get(column) {
                    Some(ColumnSource::Inline(v)) => return Ok(v.clone()),
                    Some(ColumnSource::File(r)) => return r.load(Path::new(".")),
                    None => {}
                }
            }
        }
        Err(PlanError::UnknownColumn {
            node: node.name.clone(),
            column: column.to_string(),
        })
    }

    pub fn combiner_spec(&self, name: &str) -> Option<CombinerSpec> {
        match self.node(name)?.spec {
            NodeSpec::Combiner(c) => Some(c),
            _ => None,
        }
    }

    pub fn terminal(&self) -> Option<&PlanNode> {
        self.nodes.iter().find(|n| matches!(n.spec, NodeSpec::Terminal))
    }
}

fn arity_error(node: &PlanNode, message: impl Into<String>) -> PlanError {
    PlanError::Arity {
        node: node.name.clone(),
        message: message.into(),
    }
}

/// Constraints that depend only on the node itself.
fn check_local(node: &PlanNode) -> Result<(), PlanError> {
    let n = node.inputs.len();
    match &node.spec {
        NodeSpec::Input(_) if n != 0 => Err(arity_error(node, "input nodes take no upstream")),
        NodeSpec::Seeker(s) => {
            if n == 0 {
                return Err(arity_error(node, "seeker needs an input node upstream"));
            }
            s.check(&node.name)
        }
        NodeSpec::Combiner(c) => {
            if c.k == 0 {
                return Err(PlanError::Invalid {
                    node: node.name.clone(),
                    message: "k must be positive".into(),
                });
            }
            c.kind.check_arity(n).map_err(|e| arity_error(node, e.to_string()))
        }
        NodeSpec::Terminal if n != 1 => Err(arity_error(node, "terminal takes exactly one upstream")),
        _ => Ok(()),
    }
}

fn check_upstream_kinds(node: &PlanNode, by_name: &HashMap<&str, &PlanNode>) -> Result<(), PlanError> {
    for up in &node.inputs {
        let Some(u) = by_name.get(up.as_str()) else { continue };
        let ok = match (&node.spec, &u.spec) {
            (_, NodeSpec::Terminal) => false,
            (NodeSpec::Seeker(_), NodeSpec::Input(_)) => true,
            (NodeSpec::Seeker(_), _) => false,
            (NodeSpec::Combiner(_) | NodeSpec::Terminal, NodeSpec::Seeker(_) | NodeSpec::Combiner(_)) => true,
            _ => false,
        };
        if !ok {
            return Err(PlanError::Invalid {
                node: node.name.clone(),
                message: format!("{} node cannot consume {} node `{up}`", node.spec.kind_name(), u.spec.kind_name()),
            });
        }
    }
    if let NodeSpec::Seeker(s) = &node.spec {
        for arg in &s.query {
            if let QueryArg::Column(c) = arg {
                let known = node.inputs.iter().any(|up| {
                    matches!(by_name.get(up.as_str()).map(|n| &n.spec), Some(NodeSpec::Input(i)) if i.columns.contains_key(c))
                });
                if !known {
                    return Err(PlanError::UnknownColumn {
                        node: node.name.clone(),
                        column: c.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}
