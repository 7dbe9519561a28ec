//! Items, itemsets, time-unit databases and mining thresholds.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Ratio;

use crate::bitset::Bitset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item(pub u32);

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of items kept in strictly ascending order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Itemset(Vec<Item>);

impl Itemset {
    /// Builds the canonical form: sorted, duplicates removed.
    pub fn new(items: impl IntoIterator<Item = Item>) -> Self {
        let mut v: Vec<Item> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Itemset(v)
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        Self::new(ids.into_iter().map(Item))
    }

    pub(crate) fn from_sorted_unchecked(items: Vec<Item>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Itemset(items)
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|i| i.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: Item) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        let mut theirs = other.0.iter();
        'outer: for a in &self.0 {
            for b in theirs.by_ref() {
                if b == a {
                    continue 'outer;
                }
                if b > a {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn difference(&self, other: &Itemset) -> Itemset {
        Itemset(
            self.0
                .iter()
                .copied()
                .filter(|i| !other.contains(*i))
                .collect(),
        )
    }

    /// All subsets obtained by removing exactly one item.
    pub fn drop_one_subsets(&self) -> impl Iterator<Item = Itemset> + '_ {
        (0..self.0.len()).map(move |skip| {
            Itemset(
                self.0
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, x)| *x)
                    .collect(),
            )
        })
    }

    /// Non-empty proper subsets, in ascending bitmask order of positions.
    pub fn proper_subsets(&self) -> Vec<Itemset> {
        let n = self.0.len();
        if n < 2 {
            return Vec::new();
        }
        assert!(n < 64, "itemset too large for subset enumeration");
        (1..(1u64 << n) - 1)
            .map(|mask| {
                Itemset(
                    (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| self.0[i])
                        .collect(),
                )
            })
            .collect()
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<u32> for Itemset {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        Itemset::from_ids(iter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeUnit {
    pub index: u64,
    pub transactions: Vec<Itemset>,
}

impl TimeUnit {
    /// Presence rule: the itemset is contained in at least one transaction.
    pub fn contains(&self, x: &Itemset) -> bool {
        self.transactions.iter().any(|t| x.is_subset_of(t))
    }
}

/// Ordered sequence of time units.
///
/// Unit indices are global positions on the timeline: a standalone database
/// starts at 0, an increment is rebased with [`TransactionDatabase::with_origin`]
/// so that offsets stay continuous with the data it extends.
///
/// The database keeps a counter of transactions read by scans. It is the
/// only mutable part and does not take part in equality.
#[derive(Debug)]
pub struct TransactionDatabase {
    units: Vec<TimeUnit>,
    grouping: usize,
    reads: AtomicU64,
}

impl Clone for TransactionDatabase {
    fn clone(&self) -> Self {
        TransactionDatabase {
            units: self.units.clone(),
            grouping: self.grouping,
            reads: AtomicU64::new(0),
        }
    }
}

impl PartialEq for TransactionDatabase {
    fn eq(&self, other: &Self) -> bool {
        self.units == other.units && self.grouping == other.grouping
    }
}

impl Eq for TransactionDatabase {}

impl TransactionDatabase {
    pub fn units(&self) -> &[TimeUnit] {
        &self.units
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn grouping(&self) -> usize {
        self.grouping
    }

    /// Global index of the first unit.
    pub fn origin(&self) -> u64 {
        self.units.first().map_or(0, |u| u.index)
    }

    pub fn transaction_count(&self) -> usize {
        self.units.iter().map(|u| u.transactions.len()).sum()
    }

    pub fn transactions(&self) -> impl Iterator<Item = &Itemset> {
        self.units.iter().flat_map(|u| u.transactions.iter())
    }

    /// Renumbers units to start at `origin`.
    pub fn with_origin(mut self, origin: u64) -> Self {
        for (i, u) in self.units.iter_mut().enumerate() {
            u.index = origin + i as u64;
        }
        self
    }

    /// Transaction records in ingestion order, each canonicalized.
    pub fn to_records(&self) -> Vec<Vec<u32>> {
        self.transactions().map(|t| t.ids().collect()).collect()
    }

    /// Splits at a unit boundary: the first `at` units and the rest, the
    /// suffix keeping its global indices.
    pub fn split_at(&self, at: usize) -> Result<(TransactionDatabase, TransactionDatabase)> {
        if at == 0 || at >= self.units.len() {
            return Err(Error::InvalidConfig(format!(
                "split point {at} must leave both sides non-empty (units: {})",
                self.units.len()
            )));
        }
        let make = |units: &[TimeUnit]| TransactionDatabase {
            units: units.to_vec(),
            grouping: self.grouping,
            reads: AtomicU64::new(0),
        };
        Ok((make(&self.units[..at]), make(&self.units[at..])))
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn reset_reads(&self) {
        self.reads.store(0, Ordering::Relaxed);
    }

    pub(crate) fn record_reads(&self, n: u64) {
        self.reads.fetch_add(n, Ordering::Relaxed);
    }
}

/// Groups consecutive records `grouping` at a time into time units.
pub fn ingest<R, I>(records: R, grouping: usize) -> Result<TransactionDatabase>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = u32>,
{
    ingest_numbered(
        records
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i + 1, Itemset::from_ids(r))),
        grouping,
    )
}

pub(crate) fn ingest_numbered(
    records: impl IntoIterator<Item = (usize, Itemset)>,
    grouping: usize,
) -> Result<TransactionDatabase> {
    if grouping == 0 {
        return Err(Error::InvalidConfig("grouping must be at least 1".into()));
    }
    let mut units: Vec<TimeUnit> = Vec::new();
    for (line, tx) in records {
        if tx.is_empty() {
            return Err(Error::MalformedTransaction {
                line,
                reason: "transaction has no items".into(),
            });
        }
        match units.last_mut() {
            Some(u) if u.transactions.len() < grouping => u.transactions.push(tx),
            _ => units.push(TimeUnit {
                index: units.len() as u64,
                transactions: vec![tx],
            }),
        }
    }
    if units.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    Ok(TransactionDatabase {
        units,
        grouping,
        reads: AtomicU64::new(0),
    })
}

/// Presence of an itemset across the units of one database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccurrenceBitmap {
    bits: Bitset,
    origin: u64,
}

impl OccurrenceBitmap {
    pub(crate) fn from_bitset(bits: Bitset, origin: u64) -> Self {
        OccurrenceBitmap { bits, origin }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    pub fn bits(&self) -> &Bitset {
        &self.bits
    }

    pub fn presence_count(&self) -> u64 {
        self.bits.count_ones()
    }

    /// Occurrence counts per offset class, using global unit indices.
    pub fn offset_counts(&self, cycle: CycleConfig) -> Vec<u64> {
        let l = cycle.length() as u64;
        let mut counts = vec![0u64; l as usize];
        for i in self.bits.ones() {
            counts[((self.origin + i as u64) % l) as usize] += 1;
        }
        counts
    }
}

impl fmt::Display for OccurrenceBitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.bits.len() {
            f.write_str(if self.bits.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Direct scan: bit i is set iff `x` is contained in a transaction of unit i.
pub fn occurrence_bitmap(x: &Itemset, db: &TransactionDatabase) -> OccurrenceBitmap {
    db.record_reads(db.transaction_count() as u64);
    let bits = db.units().iter().map(|u| u.contains(x)).collect();
    OccurrenceBitmap::from_bitset(bits, db.origin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CycleConfig {
    length: u32,
}

impl CycleConfig {
    pub fn new(length: u32) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidConfig(
                "cycle length must be at least 1".into(),
            ));
        }
        Ok(CycleConfig { length })
    }

    pub fn length(self) -> u32 {
        self.length
    }

    #[inline]
    pub fn offset_of(self, unit_index: u64) -> usize {
        (unit_index % self.length as u64) as usize
    }
}

/// Support threshold as an absolute count or as a fraction of units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinSupport {
    Count(u64),
    Fraction(Ratio<u64>),
}

impl MinSupport {
    /// Absolute count against `units`, rounded up and never below 1.
    pub fn resolve(self, units: u64) -> u64 {
        match self {
            MinSupport::Count(n) => n.max(1),
            MinSupport::Fraction(f) => {
                let scaled = Ratio::from_integer(units) * f;
                scaled.ceil().to_integer().max(1)
            }
        }
    }
}

/// Accepts `"3"` (count), `"0.25"` (fraction) or `"25%"`.
impl std::str::FromStr for MinSupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("invalid min_sup '{s}'"));
        let s = s.trim();
        if let Some(pct) = s.strip_suffix('%') {
            let p = parse_decimal(pct).ok_or_else(bad)?;
            let f = p / Ratio::from_integer(100);
            if f == Ratio::from_integer(0) || f > Ratio::from_integer(1) {
                return Err(bad());
            }
            return Ok(MinSupport::Fraction(f));
        }
        if let Ok(n) = s.parse::<u64>() {
            return if n == 0 {
                Err(bad())
            } else {
                Ok(MinSupport::Count(n))
            };
        }
        let f = parse_decimal(s).ok_or_else(bad)?;
        if f == Ratio::from_integer(0) || f >= Ratio::from_integer(1) {
            return Err(bad());
        }
        Ok(MinSupport::Fraction(f))
    }
}

/// Parses a non-negative decimal such as `0.25` into an exact fraction.
pub fn parse_decimal(s: &str) -> Option<Ratio<u64>> {
    let s = s.trim();
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
        return None;
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let denom = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().ok()?
    };
    let numer = int.checked_mul(denom)?.checked_add(frac)?;
    Some(Ratio::new(numer, denom))
}

/// How the FPC/NFC boundary is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FpcMode {
    /// Relative support (occurrences / units) against MinFPC.
    #[default]
    Relative,
    /// Absolute occurrence count against MinFPC, as in the original worked
    /// example where `1 >= 0.2` makes AD pseudo-cyclic.
    PaperLiteral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThresholdConfig {
    pub min_sup: MinSupport,
    pub min_conf: Ratio<u64>,
    pub expected_increment_size: u64,
    pub fpc_mode: FpcMode,
}

impl ThresholdConfig {
    pub fn new(
        min_sup: MinSupport,
        min_conf: Ratio<u64>,
        expected_increment_size: u64,
    ) -> Result<Self> {
        let cfg = ThresholdConfig {
            min_sup,
            min_conf,
            expected_increment_size,
            fpc_mode: FpcMode::Relative,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_fpc_mode(mut self, mode: FpcMode) -> Self {
        self.fpc_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Ratio::from_integer(0);
        let one = Ratio::from_integer(1);
        if self.min_conf <= zero || self.min_conf > one {
            return Err(Error::InvalidConfig(format!(
                "min_conf {} outside (0, 1]",
                self.min_conf
            )));
        }
        match self.min_sup {
            MinSupport::Count(0) => {
                return Err(Error::InvalidConfig("min_sup must be positive".into()))
            }
            MinSupport::Fraction(f) if f <= zero || f > one => {
                return Err(Error::InvalidConfig(format!(
                    "min_sup fraction {f} outside (0, 1]"
                )))
            }
            _ => {}
        }
        if self.expected_increment_size == 0 {
            return Err(Error::InvalidConfig(
                "expected increment size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn ingest_initial_database() {
        let db = initial_db();
        assert_eq!(db.unit_count(), 6);
        assert_eq!(db.units()[2].transactions[0], set(&[A, B, C, D]));
        assert!(db
            .units()
            .iter()
            .enumerate()
            .all(|(i, u)| u.index == i as u64));
    }

    #[test]
    fn ingest_empty() {
        let none: Vec<Vec<u32>> = vec![];
        assert!(matches!(ingest(none, 1), Err(Error::EmptyDatabase)));
    }

    #[test]
    fn ingest_grouping_leaves_ragged_tail() {
        let db = ingest((0..7).map(|i| vec![i]), 2).unwrap();
        let sizes: Vec<usize> = db.units().iter().map(|u| u.transactions.len()).collect();
        assert_eq!(sizes, vec![2, 2, 2, 1]);
    }

    #[test]
    fn ingest_rejects_empty_record() {
        let err = ingest(vec![vec![1], vec![], vec![2]], 1).unwrap_err();
        assert!(matches!(err, Error::MalformedTransaction { line: 2, .. }));
    }

    #[test]
    fn ingest_canonicalizes() {
        let db = ingest(vec![vec![3, 1, 3, 2]], 1).unwrap();
        assert_eq!(db.to_records(), vec![vec![1, 2, 3]]);
    }

    #[test]
    fn bitmaps_on_initial_database() {
        let db = initial_db();
        assert_eq!(occurrence_bitmap(&set(&[A, B]), &db).to_string(), "011100");
        // A and D co-occur only in the third transaction.
        assert_eq!(occurrence_bitmap(&set(&[A, D]), &db).to_string(), "001000");
        assert_eq!(occurrence_bitmap(&set(&[99]), &db).to_string(), "000000");
    }

    #[test]
    fn presence_with_grouped_units() {
        // unit 0 = {1,2} + {3}: 1 and 3 never share a transaction
        let db = ingest(vec![vec![1, 2], vec![3], vec![1, 3]], 2).unwrap();
        assert_eq!(occurrence_bitmap(&set(&[1, 3]), &db).to_string(), "01");
        assert_eq!(occurrence_bitmap(&set(&[3]), &db).to_string(), "11");
    }

    #[test]
    fn subset_and_difference() {
        assert!(set(&[1, 3]).is_subset_of(&set(&[1, 2, 3])));
        assert!(!set(&[1, 4]).is_subset_of(&set(&[1, 2, 3])));
        assert!(Itemset::default().is_subset_of(&set(&[1])));
        assert_eq!(set(&[1, 2, 3]).difference(&set(&[2])), set(&[1, 3]));
        assert_eq!(set(&[1, 2, 3]).proper_subsets().len(), 6);
        assert!(set(&[1]).proper_subsets().is_empty());
    }

    #[test]
    fn min_support_parsing_and_resolution() {
        assert_eq!("2".parse::<MinSupport>().unwrap(), MinSupport::Count(2));
        let half = "50%".parse::<MinSupport>().unwrap();
        assert_eq!(half, MinSupport::Fraction(Ratio::new(1, 2)));
        assert_eq!(half.resolve(6), 3);
        assert_eq!("0.25".parse::<MinSupport>().unwrap().resolve(10), 3);
        assert_eq!("100%".parse::<MinSupport>().unwrap().resolve(6), 6);
        assert!("0".parse::<MinSupport>().is_err());
        assert!("1.5".parse::<MinSupport>().is_err());
        assert!("abc".parse::<MinSupport>().is_err());
    }

    #[test]
    fn threshold_validation() {
        let ok = ThresholdConfig::new(MinSupport::Count(2), Ratio::new(1, 2), 4);
        assert!(ok.is_ok());
        assert!(ThresholdConfig::new(MinSupport::Count(2), Ratio::new(101, 100), 4).is_err());
        assert!(ThresholdConfig::new(MinSupport::Count(2), Ratio::from_integer(0), 4).is_err());
        assert!(ThresholdConfig::new(MinSupport::Count(2), Ratio::new(1, 2), 0).is_err());
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("0.5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_decimal("1"), Some(Ratio::from_integer(1)));
        assert_eq!(parse_decimal(".25"), Some(Ratio::new(1, 4)));
        assert_eq!(parse_decimal("-1"), None);
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn cycle_config() {
        assert!(CycleConfig::new(0).is_err());
        let c = CycleConfig::new(3).unwrap();
        assert_eq!(c.offset_of(7), 1);
    }
}
