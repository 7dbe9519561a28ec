//! Synthetic databases with planted cyclic patterns.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ingest, Itemset, TransactionDatabase};

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedPattern {
    pub itemset: Itemset,
    pub offset: u32,
    pub cycle_length: u32,
    pub probability: f64,
}

impl PlantedPattern {
    /// Parses `ids@offset/length:probability`, e.g. `1,2@1/2:0.9`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("invalid planted pattern '{s}'"));
        let (ids, rest) = s.split_once('@').ok_or_else(bad)?;
        let (cycle, prob) = rest.split_once(':').ok_or_else(bad)?;
        let (offset, length) = cycle.split_once('/').ok_or_else(bad)?;
        let ids = ids
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(PlantedPattern {
            itemset: Itemset::from_ids(ids),
            offset: offset.parse().map_err(|_| bad())?,
            cycle_length: length.parse().map_err(|_| bad())?,
            probability: prob.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub units: usize,
    /// Items are drawn from `0..items`.
    pub items: u32,
    pub planted: Vec<PlantedPattern>,
    /// Independent probability of each item appearing in a unit as noise.
    pub noise: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.units == 0 {
            return bad("generator needs at least one unit".into());
        }
        if self.items == 0 {
            return bad("generator needs at least one item".into());
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise rate {} outside [0, 1]", self.noise));
        }
        for p in &self.planted {
            if p.itemset.is_empty() || p.itemset.ids().any(|i| i >= self.items) {
                return bad(format!("planted itemset {} outside item range", p.itemset));
            }
            if p.cycle_length == 0 || p.offset >= p.cycle_length {
                return bad(format!(
                    "planted offset {} must be below cycle length {}",
                    p.offset, p.cycle_length
                ));
            }
            if !(0.0..=1.0).contains(&p.probability) {
                return bad(format!(
                    "firing probability {} outside [0, 1]",
                    p.probability
                ));
            }
        }
        Ok(())
    }
}

/// One transaction per unit. Planted itemsets fire only on units of their
/// own offset class. A unit left empty gets one random item outside every
/// planted itemset (any item if all are planted).
pub fn generate(spec: &GeneratorSpec) -> Result<TransactionDatabase> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let planted_items: BTreeSet<u32> = spec.planted.iter().flat_map(|p| p.itemset.ids()).collect();
    let fillers: Vec<u32> = (0..spec.items)
        .filter(|i| !planted_items.contains(i))
        .collect();

    let mut records = Vec::with_capacity(spec.units);
    for u in 0..spec.units {
        let mut tx = BTreeSet::new();
        for p in &spec.planted {
            if u as u64 % p.cycle_length as u64 == p.offset as u64 && rng.gen_bool(p.probability) {
                tx.extend(p.itemset.ids());
            }
        }
        if spec.noise > 0.0 {
            for item in 0..spec.items {
                if rng.gen_bool(spec.noise) {
                    tx.insert(item);
                }
            }
        }
        if tx.is_empty() {
            let item = if fillers.is_empty() {
                rng.gen_range(0..spec.items)
            } else {
                fillers[rng.gen_range(0..fillers.len())]
            };
            tx.insert(item);
        }
        records.push(tx);
    }
    ingest(records, 1)
}
