// SPDX-License-Identifier: Apache-2.0

//! Reference oracles and seeded synthetic lakes used to check the engine.

pub mod lake;
pub mod oracle;
pub mod queries;
pub mod scale;

pub use queries::{lake_queries, Query};
pub use lake::{gen_lake, GroundTruth, Profile, ToyLake, ToyTable};
pub use oracle::{
    oracle_corr, oracle_counter, oracle_intersection, oracle_keyword, oracle_mc, oracle_sc,
    oracle_sequential_intersection, pearson, OracleError, OracleLake,
};
