// SPDX-License-Identifier: Apache-2.0

//! Python bindings: `blend.Index`, `blend.Plan`, `blend.Entry` and `blend.combine`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use blend_core::combiners::combine as core_combine;
use blend_core::optimizer::{execute_plan, ExecOptions};
use blend_core::plan::{
    build_augmentation_plan, build_corr_plan, build_join_plan, build_keyword_plan, build_mc_join_plan,
    build_union_plan,
};
use blend_core::seekers::{seek, DEFAULT_MIN_SUPPORT};
use blend_core::{
    CombinerKind, Error, Normalization, PlanError, PlanGraph, RankedEntry, RankedTables, RawTable, Restriction,
    SeekerKind, SeekerSpec, UNLIMITED,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(blend, BlendError, PyException);
create_exception!(blend, PlanValidationError, BlendError);

fn err(e: Error) -> PyErr {
    match e {
        Error::Plan(p) => plan_err(p),
        other => BlendError::new_err(other.to_string()),
    }
}

fn plan_err(e: PlanError) -> PyErr {
    PlanValidationError::new_err(e.to_string())
}

/// `None` means no limit.
fn limit(k: Option<usize>) -> usize {
    k.unwrap_or(UNLIMITED)
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

#[pyclass(frozen, from_py_object, module = "blend")]
#[derive(Clone)]
struct Entry(RankedEntry);

#[pymethods]
impl Entry {
    #[getter]
    fn table_id(&self) -> u32 {
        self.0.table_id
    }

    #[getter]
    fn score(&self) -> f64 {
        self.0.score
    }

    /// Candidate column ids behind the score.
    #[getter]
    fn columns(&self) -> Vec<u32> {
        self.0.detail.columns()
    }

    #[getter]
    fn detail(&self) -> String {
        self.0.detail.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Entry(table_id={}, score={}, detail='{}')", self.0.table_id, self.0.score, self.0.detail)
    }

    fn __eq__(&self, other: &Entry) -> bool {
        self.0 == other.0
    }
}

fn entries(r: RankedTables) -> Vec<Entry> {
    r.into_entries().into_iter().map(Entry).collect()
}

fn ranked(list: Vec<Entry>) -> RankedTables {
    RankedTables::from_ordered(list.into_iter().map(|e| e.0).collect())
}

#[pyclass(frozen, module = "blend")]
struct Index(blend_core::Index);

#[pymethods]
impl Index {
    /// Indexes every .csv file under `lake`; returns `(index, report)`.
    #[staticmethod]
    #[pyo3(signature = (lake, normalize = "lower"))]
    fn build<'py>(py: Python<'py>, lake: PathBuf, normalize: &str) -> PyResult<(Index, Bound<'py, PyDict>)> {
        let policy: Normalization = parse(normalize)?;
        let (index, report) = py.detach(|| blend_core::Index::build_from_dir(&lake, policy)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("tables", report.tables)?;
        d.set_item("cells", report.cells)?;
        d.set_item("signatures", report.signatures)?;
        d.set_item("distinct_values", report.distinct_values)?;
        d.set_item("warnings", report.warnings)?;
        Ok((Index(index), d))
    }

    /// In-memory tables as `(path, header, rows)`; ids follow path order.
    #[staticmethod]
    #[pyo3(signature = (tables, normalize = "lower"))]
    fn from_tables(tables: Vec<(String, Vec<String>, Vec<Vec<String>>)>, normalize: &str) -> PyResult<Index> {
        let policy: Normalization = parse(normalize)?;
        let raw: Vec<RawTable> = tables
            .into_iter()
            .map(|(path, header, rows)| RawTable { path, header, rows })
            .collect();
        Ok(Index(blend_core::Index::build_from_tables(&raw, policy)))
    }

    #[staticmethod]
    fn open(dir: PathBuf) -> PyResult<Index> {
        blend_core::Index::open(&dir).map(Index).map_err(err)
    }

    /// Returns the number of bytes written.
    #[pyo3(signature = (dir, force = false))]
    fn save(&self, dir: PathBuf, force: bool) -> PyResult<u64> {
        self.0.save(&dir, force).map_err(err)
    }

    fn dump(&self) -> String {
        self.0.dump_string()
    }

    #[getter]
    fn table_count(&self) -> usize {
        self.0.table_count()
    }

    #[getter]
    fn cell_count(&self) -> usize {
        self.0.cell_count()
    }

    #[getter]
    fn normalization(&self) -> String {
        self.0.normalization().to_string()
    }

    fn table_path(&self, table_id: u32) -> PyResult<String> {
        Ok(self.0.table(table_id).map_err(err)?.path.clone())
    }

    /// Runs one seeker. `kind` is sc, keyword, mc or corr; `columns` holds
    /// one list per query column (key then target for corr). At most one of
    /// `only`/`exclude` restricts the candidate tables.
    #[pyo3(signature = (kind, columns, k = None, sample = None, min_support = DEFAULT_MIN_SUPPORT, only = None, exclude = None))]
    #[allow(clippy::too_many_arguments)]
    fn seek(
        &self,
        py: Python<'_>,
        kind: &str,
        columns: Vec<Vec<String>>,
        k: Option<usize>,
        sample: Option<u32>,
        min_support: u64,
        only: Option<BTreeSet<u32>>,
        exclude: Option<BTreeSet<u32>>,
    ) -> PyResult<Vec<Entry>> {
        let restriction = match (only, exclude) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("pass at most one of only/exclude")),
            (Some(s), None) => Some(Restriction::In(s)),
            (None, Some(s)) => Some(Restriction::NotIn(s)),
            (None, None) => None,
        };
        let spec = SeekerSpec::new(parse::<SeekerKind>(kind)?, columns, limit(k))
            .map_err(err)?
            .with_sample(sample)
            .with_min_support(min_support)
            .with_restriction(restriction);
        py.detach(|| seek(&self.0, &spec)).map(entries).map_err(err)
    }
}

/// Merges ranked lists with intersection, union, difference or counter.
#[pyfunction]
#[pyo3(signature = (kind, inputs, k = None))]
fn combine(kind: &str, inputs: Vec<Vec<Entry>>, k: Option<usize>) -> PyResult<Vec<Entry>> {
    let inputs: Vec<RankedTables> = inputs.into_iter().map(ranked).collect();
    core_combine(parse::<CombinerKind>(kind)?, &inputs, limit(k)).map(entries).map_err(err)
}

#[pyclass(frozen, module = "blend")]
struct Plan(PlanGraph);

#[pymethods]
impl Plan {
    /// Parses a JSON plan; `file.csv:column` references resolve against `base`.
    #[staticmethod]
    #[pyo3(signature = (text, base = None))]
    fn from_json(text: &str, base: Option<PathBuf>) -> PyResult<Plan> {
        let mut g = PlanGraph::parse_json(text).map_err(plan_err)?;
        g.resolve_files(&base.unwrap_or_else(|| PathBuf::from("."))).map_err(plan_err)?;
        g.validate().map_err(plan_err)?;
        Ok(Plan(g))
    }

    #[staticmethod]
    fn join(column: Vec<String>, k: usize) -> PyResult<Plan> {
        build_join_plan(column, k).map(Plan).map_err(err)
    }

    #[staticmethod]
    fn keyword(values: Vec<String>, k: usize) -> PyResult<Plan> {
        build_keyword_plan(values, k).map(Plan).map_err(err)
    }

    #[staticmethod]
    fn mc_join(columns: Vec<Vec<String>>, k: usize) -> PyResult<Plan> {
        build_mc_join_plan(columns, k).map(Plan).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (key, target, k, sample = None, min_support = DEFAULT_MIN_SUPPORT))]
    fn correlation(key: Vec<String>, target: Vec<String>, k: usize, sample: Option<u32>, min_support: u64) -> PyResult<Plan> {
        build_corr_plan(key, target, k, sample, min_support).map(Plan).map_err(err)
    }

    /// `table` is a list of `(column_name, values)`.
    #[staticmethod]
    #[pyo3(signature = (table, k, k_prime = None))]
    fn union(table: Vec<(String, Vec<String>)>, k: usize, k_prime: Option<usize>) -> PyResult<Plan> {
        build_union_plan(&table, k, k_prime).map(Plan).map_err(err)
    }

    #[staticmethod]
    fn augmentation(examples: Vec<Vec<String>>, query: Vec<String>, k: usize) -> PyResult<Plan> {
        build_augmentation_plan(examples, query, k).map(Plan).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// Returns `(entries, trace)` where trace holds one JSON line per group.
    #[pyo3(signature = (index, optimize = true))]
    fn run(&self, py: Python<'_>, index: &Index, optimize: bool) -> PyResult<(Vec<Entry>, Vec<String>)> {
        let opts = if optimize {
            ExecOptions::default()
        } else {
            ExecOptions::unoptimized()
        };
        let (out, trace) = py.detach(|| execute_plan(&self.0, &index.0, &opts)).map_err(err)?;
        Ok((entries(out), trace.json_lines()))
    }
}

#[pymodule]
fn blend(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Index>()?;
    m.add_class::<Plan>()?;
    m.add_class::<Entry>()?;
    m.add_function(wrap_pyfunction!(combine, m)?)?;
    m.add("BlendError", m.py().get_type::<BlendError>())?;
    m.add("PlanValidationError", m.py().get_type::<PlanValidationError>())?;
    Ok(())
}
