//! Monte Carlo batches, the reference-trial replication report and the
//! search over dynamics conventions.
//!
//! Seeds: trial `i` of a batch runs on `derive_seed(master_seed, i)`. Inside
//! a trial, geometry and memories draw from a ChaCha8 stream seeded with the
//! trial seed, the j-th recall (1-based) is seeded with
//! `derive_seed(trial_seed, j)`, and the Hopfield baseline uses stream 1 of
//! the trial seed. Any trial can therefore be re-run on its own.

mod batch;
mod config;
mod replicate;
mod variants;

pub use batch::{
    aggregate, geometry_digest, run_batch, run_trial, statistics_json, write_records_jsonl,
    write_trials_csv, BaselineRecord, BaselineStatistics, BatchOutput, RunRecord, Statistics,
    TrialOutcome, TrialRecord,
};
pub use config::{ExperimentConfig, Mode};
pub use replicate::{
    replay_reference_trial, ChecklistItem, CurationNote, ItemStatus, ReplicationReport, Tier,
    TraceRow,
};
pub use variants::{evaluate_variant, variant_search, CheckResult, VariantGrid, VariantScore};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based child seed: `splitmix64(base + (index + 1) * GOLDEN_GAMMA)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
