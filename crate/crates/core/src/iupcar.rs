//! Incremental maintenance of frequent cyclic itemsets.
//!
//! Mining the initial database classifies every itemset as frequent cyclic
//! (FC), frequent pseudo-cyclic (FPC, below MinSup but still hopeful) or
//! non-frequent cyclic (NFC). FC and FPC itemsets are persisted in a
//! [`MiningState`]. When a batch is appended, only the batch is scanned;
//! each touched itemset's stored side and increment side are combined by
//! the weighting model in [`merge_entry`].
//!
//! Two counts describe an itemset on one side: its cyclic support (best
//! offset class) decides the FC boundary against MinSup, and its presence
//! count (units containing it) decides the FPC/NFC boundary against MinFPC
//! and carries the weight.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::index::VerticalIndex;
use crate::miner::{best_offset, mine_partitioned, Counted, PartitionPlan, Targets};
use crate::model::{
    CycleConfig, FpcMode, Itemset, MinSupport, ThresholdConfig, TransactionDatabase,
};

pub const FORMAT_VERSION: u32 = 1;

/// Partitions used by [`initial_mine`] and [`apply_increment`] when
/// counting.
pub const DEFAULT_PARTITIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemsetStatus {
    Fc,
    Fpc,
    Nfc,
}

impl fmt::Display for ItemsetStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItemsetStatus::Fc => "FC",
            ItemsetStatus::Fpc => "FPC",
            ItemsetStatus::Nfc => "NFC",
        })
    }
}

impl FromStr for ItemsetStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FC" => Ok(ItemsetStatus::Fc),
            "FPC" => Ok(ItemsetStatus::Fpc),
            "NFC" => Ok(ItemsetStatus::Nfc),
            _ => Err(Error::InvalidConfig(format!("unknown status '{s}'"))),
        }
    }
}

/// MinFPC = ((min_sup / T) + min_sup) / T with T = db_units + inc_units.
pub fn compute_min_fpc(min_sup: u64, db_units: u64, inc_units: u64) -> Result<Ratio<u64>> {
    let total = db_units + inc_units;
    if total == 0 {
        return Err(Error::ZeroSizes);
    }
    let overflow = || Error::InvalidConfig("MinFPC does not fit in 64-bit fractions".into());
    let numer = min_sup.checked_mul(total + 1).ok_or_else(overflow)?;
    let denom = total.checked_mul(total).ok_or_else(overflow)?;
    Ok(Ratio::new(numer, denom))
}

/// Counts of one itemset within one side (stored history or increment).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideCounts {
    /// Occurrences in the best offset class.
    pub cyclic: u64,
    /// Units containing the itemset.
    pub presence: u64,
    pub units: u64,
}

fn meets_fpc(presence: u64, units: u64, min_fpc: Ratio<u64>, mode: FpcMode) -> bool {
    if presence == 0 {
        return false;
    }
    let (n, d) = (*min_fpc.numer() as u128, *min_fpc.denom() as u128);
    match mode {
        FpcMode::Relative => presence as u128 * d >= n * units as u128,
        FpcMode::PaperLiteral => presence as u128 * d >= n,
    }
}

pub fn classify(
    counts: SideCounts,
    min_sup: u64,
    min_fpc: Ratio<u64>,
    mode: FpcMode,
) -> ItemsetStatus {
    if counts.cyclic >= min_sup {
        ItemsetStatus::Fc
    } else if meets_fpc(counts.presence, counts.units, min_fpc, mode) {
        ItemsetStatus::Fpc
    } else {
        ItemsetStatus::Nfc
    }
}

/// Smallest presence count that can classify FPC over `units`.
fn presence_floor(min_fpc: Ratio<u64>, units: u64, mode: FpcMode) -> u64 {
    let (n, d) = (*min_fpc.numer() as u128, *min_fpc.denom() as u128);
    let scaled = match mode {
        FpcMode::Relative => n * units as u128,
        FpcMode::PaperLiteral => n,
    };
    (scaled.div_ceil(d) as u64).max(1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemsetStateEntry {
    pub itemset: Itemset,
    pub status: ItemsetStatus,
    pub weight: Ratio<u64>,
    pub abs_support: u64,
    pub history_units: u64,
    /// Best cyclic offset last observed for the itemset.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiningState {
    pub entries: BTreeMap<Itemset, ItemsetStateEntry>,
    pub db_units: u64,
    pub cycle: CycleConfig,
    /// `min_sup` is always stored resolved to [`MinSupport::Count`].
    pub thresholds: ThresholdConfig,
    pub format_version: u32,
}

impl MiningState {
    pub fn min_sup(&self) -> u64 {
        self.thresholds.min_sup.resolve(self.db_units)
    }

    pub fn count_by_status(&self, status: ItemsetStatus) -> usize {
        self.entries.values().filter(|e| e.status == status).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.db_units == 0 {
            return Err(Error::corrupt(0, "db_units is zero"));
        }
        for (i, e) in self.entries.values().enumerate() {
            let bad = |reason: &str| Err(Error::corrupt(i, format!("{}: {reason}", e.itemset)));
            if e.itemset.is_empty() {
                return bad("empty itemset");
            }
            if e.status == ItemsetStatus::Nfc {
                return bad("NFC entries are not stored");
            }
            if e.weight > Ratio::from_integer(1) {
                return bad("weight above 1");
            }
            if e.history_units == 0 || e.abs_support > e.history_units {
                return bad("abs_support exceeds history_units");
            }
            if e.offset >= self.cycle.length() as usize {
                return bad("offset outside cycle");
            }
        }
        Ok(())
    }
}

fn side_counts(c: &Counted, units: u64) -> SideCounts {
    SideCounts {
        cyclic: best_offset(&c.offset_counts).0,
        presence: c.presence,
        units,
    }
}

/// Classifies every itemset of the initial database and keeps FC and FPC.
///
/// MinFPC needs an increment size before any increment exists; the
/// configured `expected_increment_size` stands in for it.
pub fn initial_mine(
    db: &TransactionDatabase,
    cycle: CycleConfig,
    thresholds: &ThresholdConfig,
) -> Result<MiningState> {
    thresholds.validate()?;
    let units = db.unit_count() as u64;
    let min_sup = thresholds.min_sup.resolve(units);
    let min_fpc = compute_min_fpc(min_sup, units, thresholds.expected_increment_size)?;
    let mode = thresholds.fpc_mode;

    let index = VerticalIndex::build(db);
    let plan = PartitionPlan::new(db.unit_count(), DEFAULT_PARTITIONS.min(db.unit_count()))?;
    let targets = Targets {
        cyclic: min_sup,
        presence: presence_floor(min_fpc, units, mode),
    };

    let mut entries = BTreeMap::new();
    for c in mine_partitioned(&index, cycle, targets, &plan) {
        let status = classify(side_counts(&c, units), min_sup, min_fpc, mode);
        if status == ItemsetStatus::Nfc {
            continue;
        }
        entries.insert(
            c.itemset.clone(),
            ItemsetStateEntry {
                offset: best_offset(&c.offset_counts).1,
                itemset: c.itemset,
                status,
                weight: Ratio::new(c.presence, units),
                abs_support: c.presence,
                history_units: units,
            },
        );
    }
    Ok(MiningState {
        entries,
        db_units: units,
        cycle,
        thresholds: ThresholdConfig {
            min_sup: MinSupport::Count(min_sup),
            ..*thresholds
        },
        format_version: FORMAT_VERSION,
    })
}

/// One side of a merge: a status with the presence count behind it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeSide {
    pub status: ItemsetStatus,
    pub abs_support: u64,
    pub units: u64,
}

impl MergeSide {
    /// An itemset missing from the stored state.
    pub fn implicit_nfc(units: u64) -> Self {
        MergeSide {
            status: ItemsetStatus::Nfc,
            abs_support: 0,
            units,
        }
    }

    pub fn relative(&self) -> Ratio<u64> {
        Ratio::new(self.abs_support, self.units)
    }
}

/// The nine combinations of increment-side and stored-side status.
///
/// Letters follow the usual layout: rows are the increment status, columns
/// the stored status, and A, E, J form the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UpdateCase {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    J,
}

impl UpdateCase {
    pub const ALL: [UpdateCase; 9] = [
        UpdateCase::A,
        UpdateCase::B,
        UpdateCase::C,
        UpdateCase::D,
        UpdateCase::E,
        UpdateCase::F,
        UpdateCase::G,
        UpdateCase::H,
        UpdateCase::J,
    ];

    pub fn of(increment: ItemsetStatus, stored: ItemsetStatus) -> Self {
        use ItemsetStatus::*;
        match (increment, stored) {
            (Fc, Fc) => UpdateCase::A,
            (Fc, Fpc) => UpdateCase::B,
            (Fc, Nfc) => UpdateCase::C,
            (Fpc, Fc) => UpdateCase::D,
            (Fpc, Fpc) => UpdateCase::E,
            (Fpc, Nfc) => UpdateCase::F,
            (Nfc, Fc) => UpdateCase::G,
            (Nfc, Fpc) => UpdateCase::H,
            (Nfc, Nfc) => UpdateCase::J,
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, UpdateCase::A | UpdateCase::E | UpdateCase::J)
    }
}

impl fmt::Display for UpdateCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winner {
    Both,
    Stored,
    Increment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeOutcome {
    pub status: ItemsetStatus,
    pub weight: Ratio<u64>,
    pub abs_support: u64,
    pub history_units: u64,
    pub case: UpdateCase,
    pub winner: Winner,
}

/// Weighting model.
///
/// Same status on both sides keeps the status and pools the counts:
/// `(old + new) / (|DB| + |db|)`. Otherwise the side with the larger
/// relative support imposes its status and the weight is the difference of
/// the two relative supports; the increment wins ties.
pub fn merge_entry(old: MergeSide, inc: MergeSide) -> MergeOutcome {
    let case = UpdateCase::of(inc.status, old.status);
    let total = old.units + inc.units;
    if old.status == inc.status {
        let abs = old.abs_support + inc.abs_support;
        return MergeOutcome {
            status: old.status,
            weight: Ratio::new(abs, total),
            abs_support: abs,
            history_units: total,
            case,
            winner: Winner::Both,
        };
    }
    let (old_rel, new_rel) = (old.relative(), inc.relative());
    let (status, weight, winner) = if old_rel > new_rel {
        (old.status, old_rel - new_rel, Winner::Stored)
    } else {
        (inc.status, new_rel - old_rel, Winner::Increment)
    };
    // Rebase so the next increment sees a count consistent with the weight.
    let abs = (weight * Ratio::from_integer(total)).round().to_integer();
    MergeOutcome {
        status,
        weight,
        abs_support: abs,
        history_units: total,
        case,
        winner,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub itemset: Itemset,
    pub case: UpdateCase,
    pub before: ItemsetStatus,
    pub increment: ItemsetStatus,
    pub after: ItemsetStatus,
    pub weight: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateReport {
    pub min_fpc: Ratio<u64>,
    pub increment_units: u64,
    /// Transactions of the increment read while updating.
    pub increment_reads: u64,
    pub cases: BTreeMap<UpdateCase, u64>,
    /// One per touched itemset, in itemset order.
    pub transitions: Vec<Transition>,
}

impl UpdateReport {
    pub fn case_count(&self, case: UpdateCase) -> u64 {
        self.cases.get(&case).copied().unwrap_or(0)
    }

    pub fn transition(&self, x: &Itemset) -> Option<&Transition> {
        self.transitions
            .binary_search_by(|t| t.itemset.cmp(x))
            .ok()
            .map(|i| &self.transitions[i])
    }

    pub fn is_diagonal_only(&self) -> bool {
        self.transitions.iter().all(|t| t.case.is_diagonal())
    }
}

/// Folds an appended batch into the state without touching the data the
/// state summarizes.
///
/// The increment's units are numbered from `state.db_units` so offsets
/// continue the stored timeline. Stored entries are re-evaluated against
/// MinFPC recomputed with the real increment size, then every stored
/// itemset and every itemset that is FC or FPC within the increment goes
/// through [`merge_entry`]. Results classified NFC are dropped.
pub fn apply_increment(
    state: &MiningState,
    inc: &TransactionDatabase,
    cycle: CycleConfig,
) -> Result<(MiningState, UpdateReport)> {
    if cycle != state.cycle {
        return Err(Error::CycleMismatch {
            state: state.cycle.length(),
            increment: cycle.length(),
        });
    }
    if inc.unit_count() == 0 {
        return Err(Error::EmptyDatabase);
    }
    let old_units = state.db_units;
    let inc_units = inc.unit_count() as u64;
    let min_sup = state.min_sup();
    let mode = state.thresholds.fpc_mode;
    let min_fpc = compute_min_fpc(min_sup, old_units, inc_units)?;

    let reads_before = inc.reads();
    let index = VerticalIndex::build_with_origin(inc, old_units);
    let plan = PartitionPlan::new(inc.unit_count(), DEFAULT_PARTITIONS.min(inc.unit_count()))?;
    let targets = Targets {
        cyclic: min_sup,
        presence: presence_floor(min_fpc, inc_units, mode),
    };

    // Increment side: hopeful itemsets of the batch, then stored itemsets.
    let mut inc_side: BTreeMap<Itemset, (SideCounts, usize)> = BTreeMap::new();
    for c in mine_partitioned(&index, cycle, targets, &plan) {
        let counts = side_counts(&c, inc_units);
        if classify(counts, min_sup, min_fpc, mode) != ItemsetStatus::Nfc {
            inc_side.insert(c.itemset.clone(), (counts, best_offset(&c.offset_counts).1));
        }
    }
    for x in state.entries.keys() {
        if !inc_side.contains_key(x) {
            let offsets = index.offset_counts(x, cycle);
            let (cyclic, offset) = best_offset(&offsets);
            let presence = index
                .tx_bits(x)
                .map_or(0, |tx| index.unit_presence(&tx).count_ones());
            let counts = SideCounts {
                cyclic,
                presence,
                units: inc_units,
            };
            inc_side.insert(x.clone(), (counts, offset));
        }
    }

    let mut entries = BTreeMap::new();
    let mut report = UpdateReport {
        min_fpc,
        increment_units: inc_units,
        increment_reads: 0,
        cases: BTreeMap::new(),
        transitions: Vec::with_capacity(inc_side.len()),
    };
    for (itemset, (counts, inc_offset)) in inc_side {
        let stored = state.entries.get(&itemset);
        let old = match stored {
            Some(e) => {
                let status = if e.status == ItemsetStatus::Fc
                    || meets_fpc(e.abs_support, e.history_units, min_fpc, mode)
                {
                    e.status
                } else {
                    ItemsetStatus::Nfc
                };
                MergeSide {
                    status,
                    abs_support: e.abs_support,
                    units: e.history_units,
                }
            }
            None => MergeSide::implicit_nfc(old_units),
        };
        let new = MergeSide {
            status: classify(counts, min_sup, min_fpc, mode),
            abs_support: counts.presence,
            units: inc_units,
        };
        let out = merge_entry(old, new);
        *report.cases.entry(out.case).or_default() += 1;
        report.transitions.push(Transition {
            itemset: itemset.clone(),
            case: out.case,
            before: old.status,
            increment: new.status,
            after: out.status,
            weight: out.weight,
        });
        if out.status == ItemsetStatus::Nfc {
            continue;
        }
        let offset = match (stored, out.winner) {
            (Some(e), Winner::Both | Winner::Stored) => e.offset,
            _ => inc_offset,
        };
        entries.insert(
            itemset.clone(),
            ItemsetStateEntry {
                itemset,
                status: out.status,
                weight: out.weight,
                abs_support: out.abs_support,
                history_units: out.history_units,
                offset,
            },
        );
    }
    report.increment_reads = inc.reads() - reads_before;

    let next = MiningState {
        entries,
        db_units: old_units + inc_units,
        cycle: state.cycle,
        thresholds: state.thresholds,
        format_version: state.format_version,
    };
    Ok((next, report))
}

/// FC entries with their weights, in itemset order.
pub fn frequent_itemsets(state: &MiningState) -> Vec<(Itemset, Ratio<u64>)> {
    state
        .entries
        .values()
        .filter(|e| e.status == ItemsetStatus::Fc)
        .map(|e| (e.itemset.clone(), e.weight))
        .collect()
}
