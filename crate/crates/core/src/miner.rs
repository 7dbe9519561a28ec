//! Cyclic support and the Sequential, Interleaved and PCAR miners.
//!
//! Cyclic support of an itemset for cycle length `l` is the largest number
//! of units it occupies within a single offset class `i mod l`. All three
//! miners return the same itemsets and supports; they differ in how much
//! counting they do to get there.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::index::VerticalIndex;
use crate::model::{occurrence_bitmap, CycleConfig, Itemset, ThresholdConfig, TransactionDatabase};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicSupportResult {
    pub itemset: Itemset,
    pub support: u64,
    pub best_offset: usize,
}

/// Maximum of per-offset counts; ties go to the smallest offset.
pub fn best_offset(counts: &[u64]) -> (u64, usize) {
    counts.iter().enumerate().fold(
        (0, 0),
        |(best, at), (o, &c)| if c > best { (c, o) } else { (best, at) },
    )
}

pub fn cyclic_support(
    x: &Itemset,
    db: &TransactionDatabase,
    cycle: CycleConfig,
) -> CyclicSupportResult {
    let counts = occurrence_bitmap(x, db).offset_counts(cycle);
    let (support, best_offset) = best_offset(&counts);
    CyclicSupportResult {
        itemset: x.clone(),
        support,
        best_offset,
    }
}

/// Joins k-itemsets sharing their first k-1 items and keeps the joins whose
/// every k-subset is present.
pub fn candidate_extensions<'a>(
    frequent_k: impl IntoIterator<Item = &'a Itemset>,
) -> BTreeSet<Itemset> {
    let sorted: BTreeSet<&Itemset> = frequent_k.into_iter().collect();
    let level: Vec<&Itemset> = sorted.into_iter().collect();
    join_pairs(&level)
        .into_iter()
        .map(|(i, j)| join(level[i], level[j]))
        .filter(|c| {
            c.drop_one_subsets()
                .all(|s| level.binary_search(&&s).is_ok())
        })
        .collect()
}

/// Index pairs (i, j), i < j, of a sorted level sharing a (k-1)-prefix.
fn join_pairs(level: &[&Itemset]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut start = 0;
    while start < level.len() {
        let k = level[start].len();
        let prefix = &level[start].items()[..k.saturating_sub(1)];
        let mut end = start + 1;
        while end < level.len() && level[end].len() == k && &level[end].items()[..k - 1] == prefix {
            end += 1;
        }
        for i in start..end {
            for j in i + 1..end {
                pairs.push((i, j));
            }
        }
        start = end;
    }
    pairs
}

fn join(a: &Itemset, b: &Itemset) -> Itemset {
    let mut items = a.items().to_vec();
    items.push(*b.items().last().expect("non-empty itemset"));
    Itemset::from_sorted_unchecked(items)
}

fn into_results(mut found: Vec<(Itemset, Vec<u64>)>) -> Vec<CyclicSupportResult> {
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found
        .into_iter()
        .map(|(itemset, counts)| {
            let (support, best_offset) = best_offset(&counts);
            CyclicSupportResult {
                itemset,
                support,
                best_offset,
            }
        })
        .collect()
}

/// Two phases: itemsets frequent by plain unit presence, then the cyclic
/// filter on that candidate pool.
pub fn mine_sequential(
    db: &TransactionDatabase,
    cycle: CycleConfig,
    thresholds: &ThresholdConfig,
) -> Vec<CyclicSupportResult> {
    let min_sup = thresholds.min_sup.resolve(db.unit_count() as u64);
    let index = VerticalIndex::build(db);

    let mut large: Vec<(Itemset, Bitset)> = Vec::new();
    let mut level: Vec<(Itemset, Bitset)> = index
        .items()
        .map(|i| (Itemset::new([i]), index.item_bits(i).unwrap().clone()))
        .filter(|(_, tx)| index.unit_presence(tx).count_ones() >= min_sup)
        .collect();
    while !level.is_empty() {
        let refs: Vec<&Itemset> = level.iter().map(|(x, _)| x).collect();
        let mut next = Vec::new();
        for (i, j) in join_pairs(&refs) {
            let cand = join(refs[i], refs[j]);
            if !cand
                .drop_one_subsets()
                .all(|s| refs.binary_search(&&s).is_ok())
            {
                continue;
            }
            let tx = level[i].1.and(&level[j].1);
            if index.unit_presence(&tx).count_ones() >= min_sup {
                next.push((cand, tx));
            }
        }
        large.append(&mut level);
        level = next;
    }

    let found = large
        .into_iter()
        .filter_map(|(x, tx)| {
            let mut counts = vec![0; cycle.length() as usize];
            index.add_offset_counts(&tx, 0..index.unit_count(), cycle, &mut counts);
            (best_offset(&counts).0 >= min_sup).then_some((x, counts))
        })
        .collect();
    into_results(found)
}

/// Instrumentation collected by [`mine_interleaved_with_stats`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterleavedStats {
    /// Candidates whose units were scanned.
    pub candidates_counted: u64,
    /// Candidates dropped before counting because no offset survived the
    /// intersection of their subsets' live offsets.
    pub candidates_cycle_pruned: u64,
    /// (candidate, unit) presence checks performed.
    pub unit_visits: u64,
    /// (candidate, unit) pairs never checked because the unit's offset was
    /// not live.
    pub units_skipped: u64,
    /// Offset classes retired mid-scan.
    pub offsets_eliminated: u64,
    /// Candidates counted per level, starting at 1-itemsets.
    pub per_level: Vec<u64>,
}

pub fn mine_interleaved(
    db: &TransactionDatabase,
    cycle: CycleConfig,
    thresholds: &ThresholdConfig,
) -> Vec<CyclicSupportResult> {
    mine_interleaved_with_stats(db, cycle, thresholds).0
}

/// Level-wise mining with cycle pruning, cycle skipping and cycle
/// elimination over a fixed cycle length.
pub fn mine_interleaved_with_stats(
    db: &TransactionDatabase,
    cycle: CycleConfig,
    thresholds: &ThresholdConfig,
) -> (Vec<CyclicSupportResult>, InterleavedStats) {
    let min_sup = thresholds.min_sup.resolve(db.unit_count() as u64);
    let index = VerticalIndex::build(db);
    let l = cycle.length() as usize;
    let n = index.unit_count();
    let class_sizes = index.class_sizes(0..n, cycle);
    let mut stats = InterleavedStats::default();

    let mut found: Vec<(Itemset, Vec<u64>)> = Vec::new();
    let mut candidates: Vec<(Itemset, Vec<bool>)> = index
        .items()
        .map(|i| (Itemset::new([i]), vec![true; l]))
        .collect();

    while !candidates.is_empty() {
        let mut live_level: BTreeMap<Itemset, Vec<bool>> = BTreeMap::new();
        let mut counted = 0;
        for (x, mut live) in candidates {
            if !live.contains(&true) {
                stats.candidates_cycle_pruned += 1;
                continue;
            }
            counted += 1;
            let mut counts = vec![0u64; l];
            let mut remaining = class_sizes.clone();
            for (o, alive) in live.iter_mut().enumerate() {
                if *alive && remaining[o] < min_sup {
                    *alive = false;
                    stats.offsets_eliminated += 1;
                }
            }
            let mut live_left = live.iter().filter(|b| **b).count();
            for u in 0..n {
                if live_left == 0 {
                    stats.units_skipped += (n - u) as u64;
                    break;
                }
                let o = index.offset_of_unit(u, cycle);
                remaining[o] -= 1;
                if !live[o] {
                    stats.units_skipped += 1;
                    continue;
                }
                stats.unit_visits += 1;
                if index.unit_contains(&x, u) {
                    counts[o] += 1;
                }
                if counts[o] + remaining[o] < min_sup {
                    live[o] = false;
                    live_left -= 1;
                    stats.offsets_eliminated += 1;
                }
            }
            if live.contains(&true) {
                found.push((x.clone(), counts));
                live_level.insert(x, live);
            }
        }
        stats.candidates_counted += counted;
        stats.per_level.push(counted);

        let level: Vec<&Itemset> = live_level.keys().collect();
        candidates = join_pairs(&level)
            .into_iter()
            .filter_map(|(i, j)| {
                let cand = join(level[i], level[j]);
                let mut live = vec![true; l];
                for s in cand.drop_one_subsets() {
                    let sub_live = live_level.get(&s)?;
                    for (a, b) in live.iter_mut().zip(sub_live) {
                        *a &= *b;
                    }
                }
                Some((cand, live))
            })
            .collect();
    }
    (into_results(found), stats)
}

/// Contiguous unit ranges whose sizes differ by at most one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    pub partition_count: usize,
    pub boundaries: Vec<Range<usize>>,
}

impl PartitionPlan {
    pub fn new(units: usize, partitions: usize) -> Result<Self> {
        if partitions == 0 || partitions > units {
            return Err(Error::PartitionCountOutOfRange { partitions, units });
        }
        let base = units / partitions;
        let extra = units % partitions;
        let mut boundaries = Vec::with_capacity(partitions);
        let mut start = 0;
        for p in 0..partitions {
            let len = base + usize::from(p < extra);
            boundaries.push(start..start + len);
            start += len;
        }
        Ok(PartitionPlan {
            partition_count: partitions,
            boundaries,
        })
    }
}

/// Keep rule for the partitioned engine: an itemset is retained when its
/// cyclic support reaches `cyclic` or its unit presence reaches `presence`.
/// Both predicates are anti-monotone, so their union is too.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Targets {
    pub cyclic: u64,
    pub presence: u64,
}

impl Targets {
    fn reachable(&self, counts: &[u64], presence: u64, remaining: &[u64]) -> bool {
        let rem_total: u64 = remaining.iter().sum();
        presence + rem_total >= self.presence
            || counts
                .iter()
                .zip(remaining)
                .any(|(c, r)| c + r >= self.cyclic)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Counted {
    pub itemset: Itemset,
    pub offset_counts: Vec<u64>,
    pub presence: u64,
}

/// Partition-by-partition level-wise counting with remaining-capacity
/// pruning. Candidates that cannot reach either target with the units
/// still ahead are dropped before the next partition is read.
pub(crate) fn mine_partitioned(
    index: &VerticalIndex,
    cycle: CycleConfig,
    targets: Targets,
    plan: &PartitionPlan,
) -> Vec<Counted> {
    struct Cand {
        itemset: Itemset,
        tx: Bitset,
        counts: Vec<u64>,
        presence: u64,
    }

    let l = cycle.length() as usize;
    let n = index.unit_count();
    // remaining_after[p] = per-offset unit counts after partition p
    let remaining_after: Vec<Vec<u64>> = plan
        .boundaries
        .iter()
        .map(|r| index.class_sizes(r.end..n, cycle))
        .collect();

    let count_level = |mut cands: Vec<Cand>| -> Vec<Cand> {
        for (p, range) in plan.boundaries.iter().enumerate() {
            let rem = &remaining_after[p];
            cands.retain_mut(|c| {
                c.presence += index.add_offset_counts(&c.tx, range.clone(), cycle, &mut c.counts);
                targets.reachable(&c.counts, c.presence, rem)
            });
        }
        cands
    };

    let floor = targets.cyclic.min(targets.presence);
    let mut out = Vec::new();
    let mut level = count_level(
        index
            .items()
            .map(|i| Cand {
                itemset: Itemset::new([i]),
                tx: index.item_bits(i).unwrap().clone(),
                counts: vec![0; l],
                presence: 0,
            })
            .collect(),
    );
    while !level.is_empty() {
        let refs: Vec<&Itemset> = level.iter().map(|c| &c.itemset).collect();
        let next: Vec<Cand> = join_pairs(&refs)
            .into_iter()
            .filter_map(|(i, j)| {
                // Transactions bound units, which bound every offset count.
                if level[i].tx.and_count(&level[j].tx) < floor {
                    return None;
                }
                let itemset = join(refs[i], refs[j]);
                if !itemset
                    .drop_one_subsets()
                    .all(|s| refs.binary_search(&&s).is_ok())
                {
                    return None;
                }
                Some(Cand {
                    itemset,
                    tx: level[i].tx.and(&level[j].tx),
                    counts: vec![0; l],
                    presence: 0,
                })
            })
            .collect();
        out.extend(level.into_iter().map(|c| Counted {
            itemset: c.itemset,
            offset_counts: c.counts,
            presence: c.presence,
        }));
        level = count_level(next);
    }
    out.sort_by(|a, b| a.itemset.cmp(&b.itemset));
    out
}

pub fn mine_pcar(
    db: &TransactionDatabase,
    cycle: CycleConfig,
    thresholds: &ThresholdConfig,
    partitions: usize,
) -> Result<Vec<CyclicSupportResult>> {
    let plan = PartitionPlan::new(db.unit_count(), partitions)?;
    let min_sup = thresholds.min_sup.resolve(db.unit_count() as u64);
    let index = VerticalIndex::build(db);
    let targets = Targets {
        cyclic: min_sup,
        presence: u64::MAX,
    };
    let found = mine_partitioned(&index, cycle, targets, &plan)
        .into_iter()
        .map(|c| (c.itemset, c.offset_counts))
        .collect();
    Ok(into_results(found))
}

/// Result list as a map, for comparisons across miners.
pub fn support_map(results: &[CyclicSupportResult]) -> HashMap<Itemset, (u64, usize)> {
    results
        .iter()
        .map(|r| (r.itemset.clone(), (r.support, r.best_offset)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{ingest, MinSupport};
    use num_rational::Ratio;

    fn thresholds(min_sup: u64) -> ThresholdConfig {
        ThresholdConfig::new(MinSupport::Count(min_sup), Ratio::new(1, 2), 4).unwrap()
    }

    fn l(n: u32) -> CycleConfig {
        CycleConfig::new(n).unwrap()
    }

    #[test]
    fn cyclic_support_of_ab_and_ad() {
        let db = initial_db();
        let ab = cyclic_support(&set(&[A, B]), &db, l(2));
        assert_eq!((ab.support, ab.best_offset), (2, 1));
        let ad = cyclic_support(&set(&[A, D]), &db, l(2));
        assert_eq!(ad.support, 1);
    }

    #[test]
    fn cycle_length_one_is_presence_count() {
        let db = initial_db();
        let ab = cyclic_support(&set(&[A, B]), &db, l(1));
        assert_eq!((ab.support, ab.best_offset), (3, 0));
    }

    #[test]
    fn ties_pick_smallest_offset() {
        assert_eq!(best_offset(&[2, 3, 3]), (3, 1));
        assert_eq!(best_offset(&[0, 0]), (0, 0));
    }

    #[test]
    fn candidate_extension_examples() {
        let ab_ac_bc = [set(&[1, 2]), set(&[1, 3]), set(&[2, 3])];
        assert_eq!(
            candidate_extensions(&ab_ac_bc),
            BTreeSet::from([set(&[1, 2, 3])])
        );
        assert!(candidate_extensions(&[set(&[1, 2]), set(&[3, 4])]).is_empty());
        let singles = [set(&[1]), set(&[2]), set(&[3])];
        assert_eq!(
            candidate_extensions(&singles),
            BTreeSet::from([set(&[1, 2]), set(&[1, 3]), set(&[2, 3])])
        );
        // ABD needs AD and BD as well
        assert!(candidate_extensions(&[set(&[1, 2]), set(&[1, 4])]).is_empty());
    }

    #[test]
    fn sequential_on_initial_database() {
        let db = initial_db();
        let out = mine_sequential(&db, l(2), &thresholds(2));
        let ab = out.iter().find(|r| r.itemset == set(&[A, B])).unwrap();
        assert_eq!(ab.support, 2);
        assert!(mine_sequential(&db, l(2), &thresholds(7)).is_empty());
    }

    #[test]
    fn miners_agree_on_initial_database() {
        let db = initial_db();
        for min_sup in 1..=4 {
            let t = thresholds(min_sup);
            let seq = mine_sequential(&db, l(2), &t);
            assert_eq!(mine_interleaved(&db, l(2), &t), seq);
            for p in 1..=6 {
                assert_eq!(mine_pcar(&db, l(2), &t, p).unwrap(), seq);
            }
        }
    }

    #[test]
    fn interleaved_skips_units() {
        let db = initial_db();
        let (_, stats) = mine_interleaved_with_stats(&db, l(2), &thresholds(2));
        assert!(stats.candidates_counted > 0);
        assert!(stats.unit_visits < 6 * stats.candidates_counted);
        assert!(stats.units_skipped > 0);
    }

    #[test]
    fn interleaved_short_circuits_when_everything_is_eliminated() {
        let db = initial_db();
        let (out, stats) = mine_interleaved_with_stats(&db, l(2), &thresholds(4));
        assert!(out.is_empty());
        assert_eq!(stats.per_level, vec![4]);
        // Offsets die before the scan ends.
        assert!(stats.unit_visits < 4 * 6);
    }

    #[test]
    fn pcar_partition_range() {
        let db = initial_db();
        assert!(matches!(
            mine_pcar(&db, l(2), &thresholds(2), 0),
            Err(Error::PartitionCountOutOfRange { .. })
        ));
        assert!(mine_pcar(&db, l(2), &thresholds(2), 7).is_err());
        let out = mine_pcar(&db, l(2), &thresholds(2), 3).unwrap();
        let ab = out.iter().find(|r| r.itemset == set(&[A, B])).unwrap();
        assert_eq!(ab.support, 2);
    }

    #[test]
    fn partition_plan_is_balanced() {
        let plan = PartitionPlan::new(10, 3).unwrap();
        assert_eq!(plan.boundaries, vec![0..4, 4..7, 7..10]);
        let plan = PartitionPlan::new(5, 5).unwrap();
        assert!(plan.boundaries.iter().all(|r| r.len() == 1));
    }

    #[test]
    fn grouped_units_mine_consistently() {
        let db = ingest(
            vec![
                vec![1, 2],
                vec![3],
                vec![1, 3],
                vec![2, 3],
                vec![1, 2, 3],
                vec![1],
            ],
            2,
        )
        .unwrap();
        let t = thresholds(1);
        let seq = mine_sequential(&db, l(2), &t);
        assert_eq!(mine_interleaved(&db, l(2), &t), seq);
        assert_eq!(mine_pcar(&db, l(2), &t, 2).unwrap(), seq);
        // 1 and 3 share a transaction in units 1 and 2, never in unit 0
        let x = seq.iter().find(|r| r.itemset == set(&[1, 3])).unwrap();
        assert_eq!((x.support, x.best_offset), (1, 0));
    }
}
