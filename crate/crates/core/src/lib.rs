//! Cyclic association rule mining over time-unit databases, with
//! incremental maintenance of the mined state when batches are appended.

pub mod bench;
pub mod bitset;
pub mod error;
pub mod generator;
pub mod index;
pub mod io;
pub mod iupcar;
pub mod miner;
pub mod model;
pub mod rules;

pub use error::{Error, Result};
pub use index::VerticalIndex;
pub use iupcar::{
    apply_increment, classify, compute_min_fpc, frequent_itemsets, initial_mine, merge_entry,
    ItemsetStateEntry, ItemsetStatus, MergeOutcome, MergeSide, MiningState, SideCounts, UpdateCase,
    UpdateReport,
};
pub use miner::{
    candidate_extensions, cyclic_support, mine_interleaved, mine_interleaved_with_stats, mine_pcar,
    mine_sequential, CyclicSupportResult, InterleavedStats, PartitionPlan,
};
pub use model::{
    ingest, occurrence_bitmap, CycleConfig, FpcMode, Item, Itemset, MinSupport, OccurrenceBitmap,
    ThresholdConfig, TimeUnit, TransactionDatabase,
};
pub use rules::{generate_rules, rules_from_state, ConfidenceMode, CyclicRule, SupportSource};
