//! Cyclic association rules from frequent cyclic itemsets.

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::index::VerticalIndex;
use crate::iupcar::{ItemsetStatus, MiningState};
use crate::miner::{best_offset, CyclicSupportResult};
use crate::model::{CycleConfig, Itemset};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub support: u64,
    pub confidence: Ratio<u64>,
    pub offset: usize,
}

impl CyclicRule {
    /// Tab-separated record with the confidence as an exact fraction.
    pub fn to_record(&self) -> String {
        let ids = |x: &Itemset| x.ids().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        format!(
            "{}\t{}\t{}\t{}/{}\t{}",
            ids(&self.antecedent),
            ids(&self.consequent),
            self.support,
            self.confidence.numer(),
            self.confidence.denom(),
            self.offset
        )
    }
}

/// `{1} => {2} (sup=2, conf=1.0000, offset=1)`
impl fmt::Display for CyclicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {} (sup={}, conf={}, offset={})",
            self.antecedent,
            self.consequent,
            self.support,
            decimal_4dp(self.confidence),
            self.offset
        )
    }
}

/// Rounds half up to four decimals without going through floats.
fn decimal_4dp(x: Ratio<u64>) -> String {
    let (n, d) = (*x.numer() as u128, *x.denom() as u128);
    let scaled = (n * 20_000 + d) / (2 * d);
    format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConfidenceMode {
    /// Count of the rule itemset at its best offset over the antecedent's
    /// count at that same offset.
    #[default]
    PerOffset,
    /// Cyclic support of the rule itemset over the antecedent's own cyclic
    /// support.
    CyclicRatio,
}

/// Where rule generation looks up subset counts.
pub trait SupportSource {
    /// Occurrences of `x` in offset class `offset`, when known.
    fn count_at(&self, x: &Itemset, offset: usize) -> Option<u64>;
    /// Overall support of `x`, when known.
    fn total(&self, x: &Itemset) -> Option<u64>;
}

/// Exact per-offset counts from a database index.
pub struct IndexSource<'a> {
    pub index: &'a VerticalIndex,
    pub cycle: CycleConfig,
}

impl SupportSource for IndexSource<'_> {
    fn count_at(&self, x: &Itemset, offset: usize) -> Option<u64> {
        self.index.offset_counts(x, self.cycle).get(offset).copied()
    }

    fn total(&self, x: &Itemset) -> Option<u64> {
        Some(best_offset(&self.index.offset_counts(x, self.cycle)).0)
    }
}

/// Counts from a mining state, optionally backed by the latest increment
/// for itemsets the state does not hold. Per-offset counts are not kept in
/// the state, so only totals are available.
pub struct StateSource<'a> {
    pub state: &'a MiningState,
    pub increment: Option<&'a VerticalIndex>,
}

impl SupportSource for StateSource<'_> {
    fn count_at(&self, _x: &Itemset, _offset: usize) -> Option<u64> {
        None
    }

    fn total(&self, x: &Itemset) -> Option<u64> {
        match self.state.entries.get(x) {
            Some(e) => Some(e.abs_support),
            None => self.increment.map(|idx| {
                idx.tx_bits(x)
                    .map_or(0, |tx| idx.unit_presence(&tx).count_ones())
            }),
        }
    }
}

/// Emits `X => Z \ X` for every frequent `Z` and non-empty proper subset
/// `X` whose confidence reaches `min_conf`. Rules come out sorted by
/// antecedent, then consequent.
///
/// A split whose antecedent count is zero or smaller than the numerator is
/// not a well-formed rule and is skipped; that only happens with sources
/// whose counts come from different histories.
pub fn generate_rules(
    frequent: &[CyclicSupportResult],
    source: &dyn SupportSource,
    min_conf: Ratio<u64>,
    mode: ConfidenceMode,
) -> Result<Vec<CyclicRule>> {
    let mut rules = Vec::new();
    for z in frequent {
        if z.support == 0 {
            continue;
        }
        for x in z.itemset.proper_subsets() {
            let missing = || Error::MissingSupport(x.to_string());
            let (numer, denom) = match mode {
                ConfidenceMode::PerOffset => (
                    z.support,
                    source.count_at(&x, z.best_offset).ok_or_else(missing)?,
                ),
                ConfidenceMode::CyclicRatio => (z.support, source.total(&x).ok_or_else(missing)?),
            };
            if denom == 0 || numer > denom {
                continue;
            }
            let confidence = Ratio::new(numer, denom);
            if confidence >= min_conf {
                rules.push(CyclicRule {
                    consequent: z.itemset.difference(&x),
                    antecedent: x,
                    support: z.support,
                    confidence,
                    offset: z.best_offset,
                });
            }
        }
    }
    rules.sort_by(|a, b| (&a.antecedent, &a.consequent).cmp(&(&b.antecedent, &b.consequent)));
    Ok(rules)
}

/// Rules over the FC entries of a state.
pub fn rules_from_state(
    state: &MiningState,
    min_conf: Ratio<u64>,
    increment: Option<&VerticalIndex>,
) -> Result<Vec<CyclicRule>> {
    let frequent: Vec<CyclicSupportResult> = state
        .entries
        .values()
        .filter(|e| e.status == ItemsetStatus::Fc)
        .map(|e| CyclicSupportResult {
            itemset: e.itemset.clone(),
            support: e.abs_support,
            best_offset: e.offset,
        })
        .collect();
    let source = StateSource { state, increment };
    generate_rules(&frequent, &source, min_conf, ConfidenceMode::CyclicRatio)
}
