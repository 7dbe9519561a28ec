//! Vertical layout of a database: one transaction bitset per item.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::bitset::Bitset;
use crate::model::{CycleConfig, Item, Itemset, OccurrenceBitmap, TransactionDatabase};

/// Built by a single pass over the database. All counting afterwards works
/// on the bitsets, so the database's read counter grows by exactly its
/// transaction count per index built.
#[derive(Debug, Clone)]
pub struct VerticalIndex {
    items: BTreeMap<Item, Bitset>,
    /// Unit position (0-based, local) of each transaction.
    tx_unit: Vec<usize>,
    /// First transaction of each unit, plus a trailing sentinel.
    unit_start: Vec<usize>,
    origin: u64,
}

impl VerticalIndex {
    pub fn build(db: &TransactionDatabase) -> Self {
        Self::build_with_origin(db, db.origin())
    }

    /// As [`VerticalIndex::build`], numbering units from `origin` instead of
    /// the database's own indices.
    pub fn build_with_origin(db: &TransactionDatabase, origin: u64) -> Self {
        let tx_total = db.transaction_count();
        db.record_reads(tx_total as u64);

        let mut items: BTreeMap<Item, Bitset> = BTreeMap::new();
        let mut tx_unit = Vec::with_capacity(tx_total);
        let mut unit_start = Vec::with_capacity(db.unit_count() + 1);
        for (pos, unit) in db.units().iter().enumerate() {
            unit_start.push(tx_unit.len());
            for tx in &unit.transactions {
                let t = tx_unit.len();
                tx_unit.push(pos);
                for &item in tx.items() {
                    items
                        .entry(item)
                        .or_insert_with(|| Bitset::new(tx_total))
                        .set(t);
                }
            }
        }
        unit_start.push(tx_unit.len());
        VerticalIndex {
            items,
            tx_unit,
            unit_start,
            origin,
        }
    }

    pub fn unit_count(&self) -> usize {
        self.unit_start.len() - 1
    }

    pub fn origin(&self) -> u64 {
        self.origin
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.items.keys().copied()
    }

    pub fn item_bits(&self, item: Item) -> Option<&Bitset> {
        self.items.get(&item)
    }

    /// Transactions containing every item of `x`. `None` if some item never
    /// occurs.
    pub fn tx_bits(&self, x: &Itemset) -> Option<Bitset> {
        let mut iter = x.items().iter();
        let first = iter.next()?;
        let mut acc = self.items.get(first)?.clone();
        for item in iter {
            acc.and_with(self.items.get(item)?);
        }
        Some(acc)
    }

    #[inline]
    pub fn offset_of_unit(&self, pos: usize, cycle: CycleConfig) -> usize {
        cycle.offset_of(self.origin + pos as u64)
    }

    /// Per-offset unit counts of a transaction bitset restricted to the
    /// local unit range, added into `counts`. Returns the number of units
    /// found.
    pub fn add_offset_counts(
        &self,
        tx: &Bitset,
        units: Range<usize>,
        cycle: CycleConfig,
        counts: &mut [u64],
    ) -> u64 {
        let mut last = usize::MAX;
        let mut found = 0;
        for t in tx.ones_in(self.unit_start[units.start], self.unit_start[units.end]) {
            let u = self.tx_unit[t];
            if u != last {
                last = u;
                found += 1;
                counts[self.offset_of_unit(u, cycle)] += 1;
            }
        }
        found
    }

    pub fn offset_counts(&self, x: &Itemset, cycle: CycleConfig) -> Vec<u64> {
        let mut counts = vec![0; cycle.length() as usize];
        if let Some(tx) = self.tx_bits(x) {
            self.add_offset_counts(&tx, 0..self.unit_count(), cycle, &mut counts);
        }
        counts
    }

    /// Projects a transaction bitset onto units.
    pub fn unit_presence(&self, tx: &Bitset) -> Bitset {
        let mut out = Bitset::new(self.unit_count());
        for t in tx.ones() {
            out.set(self.tx_unit[t]);
        }
        out
    }

    pub fn occurrence_bitmap(&self, x: &Itemset) -> OccurrenceBitmap {
        let bits = match self.tx_bits(x) {
            Some(tx) => self.unit_presence(&tx),
            None => Bitset::new(self.unit_count()),
        };
        OccurrenceBitmap::from_bitset(bits, self.origin)
    }

    /// Whether `x` is contained in some transaction of unit `pos`.
    pub fn unit_contains(&self, x: &Itemset, pos: usize) -> bool {
        let bits: Option<Vec<&Bitset>> = x.items().iter().map(|i| self.items.get(i)).collect();
        let Some(bits) = bits else {
            return false;
        };
        (self.unit_start[pos]..self.unit_start[pos + 1]).any(|t| bits.iter().all(|b| b.get(t)))
    }

    /// Number of units at each offset within `units`.
    pub fn class_sizes(&self, units: Range<usize>, cycle: CycleConfig) -> Vec<u64> {
        let mut sizes = vec![0; cycle.length() as usize];
        for u in units {
            sizes[self.offset_of_unit(u, cycle)] += 1;
        }
        sizes
    }
}
