use serde::{Deserialize, Serialize};

pub const COMMITMENT_BITS: u64 = 256;
pub const OPENING_BITS: u64 = 468;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadBreakdown {
    pub n_leaders: u64,
    pub commitment_bits: u64,
    pub opening_bits: u64,
    /// Named fields of one opening record and their sizes.
    pub opening_fields: Vec<(String, u64)>,
    pub opening_field_sum: u64,
    pub per_leader_bits: u64,
    pub total_bits: u64,
}

pub fn block_overhead_bits(n_leaders: u64) -> u64 {
    (COMMITMENT_BITS + OPENING_BITS) * n_leaders
}

impl OverheadBreakdown {
    pub fn new(n_leaders: u64) -> Self {
        let opening_fields: Vec<(String, u64)> = [("i", 16), ("j", 16), ("sigma", 256), ("address", 160)]
            .into_iter()
            .map(|(n, b)| (n.to_string(), b))
            .collect();
        OverheadBreakdown {
            n_leaders,
            commitment_bits: COMMITMENT_BITS,
            opening_bits: OPENING_BITS,
            opening_field_sum: opening_fields.iter().map(|(_, b)| b).sum(),
            opening_fields,
            per_leader_bits: COMMITMENT_BITS + OPENING_BITS,
            total_bits: block_overhead_bits(n_leaders),
        }
    }
}
