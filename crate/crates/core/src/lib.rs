// SPDX-License-Identifier: Apache-2.0

//! Unified data-lake discovery engine.
//!
//! A lake of CSV tables is flattened into one cell relation (value, table,
//! column, row, row signature, quadrant flag) with two access paths: value to
//! postings and table to rows. Four top-K *seekers* run against it, four
//! *combiners* merge their outputs, and a small rule-based optimizer executes
//! user plans built from both.

pub mod combiners;
pub mod error;
pub mod index;
pub mod ingest;
pub mod optimizer;
pub mod plan;
pub mod ranking;
pub mod seekers;

pub use combiners::{CombinerKind, CombinerSpec};
pub use error::{Error, PlanError, Result};
pub use index::{cell_signature, subsumes, CellRecord, Index, Quadrant, RowSignature};
pub use ingest::{normalize_value, Normalization, NormalizedValue, RawTable, TableCatalogEntry};
pub use optimizer::{execute_plan, ExecOptions, ExecTrace};
pub use plan::PlanGraph;
pub use ranking::{Detail, RankedEntry, RankedTables, UNLIMITED};
pub use seekers::{Restriction, SeekerKind, SeekerSpec};
