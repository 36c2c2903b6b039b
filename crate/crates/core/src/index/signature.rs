// SPDX-License-Identifier: Apache-2.0

//! Row super keys: a 128-bit Bloom-style signature per row, formed by OR-ing
//! per-value signatures. Containment of a query tuple's values in a row
//! implies bit subsumption of the signatures, never the other way around.

use xxhash_rust::xxh3::xxh3_64_with_seed;

pub const SIGNATURE_BITS: u32 = 128;
pub const HASHES_PER_VALUE: usize = 3;
pub const SIGNATURE_HASH: &str = "xxh3_64";

/// Fixed seeds, one per bit position. Part of the on-disk format.
pub const SIGNATURE_SEEDS: [u64; HASHES_PER_VALUE] =
    [0x9E37_79B9_7F4A_7C15, 0xC2B2_AE3D_27D4_EB4F, 0x1656_67B1_9E37_79F9];

/// Signature of one normalized cell value: up to three bits set.
pub fn cell_signature(value: &str) -> u128 {
    SIGNATURE_SEEDS.iter().fold(0u128, |acc, &seed| {
        let bit = xxh3_64_with_seed(value.as_bytes(), seed) % u64::from(SIGNATURE_BITS);
        acc | (1u128 << bit)
    })
}

/// OR of the value signatures.
pub fn combined_signature<'a>(values: impl IntoIterator<Item = &'a str>) -> u128 {
    values.into_iter().fold(0, |acc, v| acc | cell_signature(v))
}

/// `true` iff every bit of `query_bits` is also set in `candidate_bits`.
#[inline]
pub fn subsumes(query_bits: u128, candidate_bits: u128) -> bool {
    query_bits & candidate_bits == query_bits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowSignature {
    pub table_id: u32,
    pub row_id: u32,
    pub bits: u128,
}
