//! Full rerun versus incremental update on a prefix/suffix split.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::iupcar::{apply_increment, frequent_itemsets, initial_mine};
use crate::miner::mine_pcar;
use crate::model::{
    CycleConfig, FpcMode, Itemset, MinSupport, ThresholdConfig, TransactionDatabase,
};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Share of units (from the end) used as the increment.
    pub inc_fraction: Ratio<u64>,
    pub cycle: CycleConfig,
    pub min_sups: Vec<MinSupport>,
    pub min_conf: Ratio<u64>,
    pub partitions: usize,
    pub runs: usize,
    pub fpc_mode: FpcMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchReport {
    pub algorithm: &'static str,
    pub min_sup: u64,
    /// Median over the configured runs.
    pub wall_time: Duration,
    /// Transactions read per run from the data being processed.
    pub transactions_read: u64,
    /// Transactions of the initial split read per run (zero for updates).
    pub original_reads: u64,
    pub fc_count: usize,
    pub checksum: String,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub min_sup: u64,
    pub db_units: usize,
    pub inc_units: usize,
    pub rerun: BenchReport,
    pub update: BenchReport,
    pub initial_mine_time: Duration,
    /// Itemsets FC in exactly one of the two results.
    pub fc_difference: usize,
    /// Every touched itemset kept its class on both sides.
    pub diagonal_only: bool,
}

impl BenchRow {
    /// Checksums must agree when the update only saw diagonal cases and the
    /// combined data created no new crossings; otherwise a difference is
    /// expected and only reported.
    pub fn checksums_match(&self) -> bool {
        self.rerun.checksum == self.update.checksum
    }
}

/// Unit index at which the suffix holds `fraction` of the units, rounded to
/// the nearest unit and kept inside `1..units`.
pub fn split_point(units: usize, fraction: Ratio<u64>) -> Result<usize> {
    if units < 2 {
        return Err(Error::InvalidConfig(
            "need at least two units to split".into(),
        ));
    }
    if fraction <= Ratio::from_integer(0) || fraction >= Ratio::from_integer(1) {
        return Err(Error::InvalidConfig(format!(
            "increment fraction {fraction} outside (0, 1)"
        )));
    }
    let inc = (Ratio::from_integer(units as u64) * fraction)
        .round()
        .to_integer() as usize;
    Ok((units - inc.clamp(1, units - 1)).clamp(1, units - 1))
}

/// SHA-256 over the sorted FC itemsets, one `{a,b}` per line.
pub fn checksum<'a>(fc: impl IntoIterator<Item = &'a Itemset>) -> String {
    let sorted: BTreeSet<&Itemset> = fc.into_iter().collect();
    let mut hasher = Sha256::new();
    for x in sorted {
        hasher.update(x.to_string().as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn median(mut times: Vec<Duration>) -> Duration {
    times.sort();
    times[times.len() / 2]
}

fn timed<T>(runs: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, Duration)> {
    let mut times = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        last = Some(f()?);
        times.push(start.elapsed());
    }
    Ok((last.expect("at least one run"), median(times)))
}

pub fn run_bench(full: &TransactionDatabase, config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let at = split_point(full.unit_count(), config.inc_fraction)?;
    let (db, inc) = full.split_at(at)?;
    let units = full.unit_count() as u64;

    let mut rows = Vec::with_capacity(config.min_sups.len());
    for &min_sup in &config.min_sups {
        // Fractions resolve once against the whole dataset so both sides
        // use the same absolute threshold.
        let abs = min_sup.resolve(units);
        let thresholds = ThresholdConfig::new(
            MinSupport::Count(abs),
            config.min_conf,
            inc.unit_count() as u64,
        )?
        .with_fpc_mode(config.fpc_mode);

        full.reset_reads();
        let (rerun_out, rerun_time) = timed(config.runs, || {
            mine_pcar(
                full,
                config.cycle,
                &thresholds,
                config.partitions.min(full.unit_count()),
            )
        })?;
        let rerun_reads = full.reads() / config.runs.max(1) as u64;
        let rerun_fc: BTreeSet<Itemset> = rerun_out.into_iter().map(|r| r.itemset).collect();

        let start = Instant::now();
        let mined = initial_mine(&db, config.cycle, &thresholds)?;
        let initial_time = start.elapsed();
        db.reset_reads();
        inc.reset_reads();
        let ((state, report), update_time) =
            timed(config.runs, || apply_increment(&mined, &inc, config.cycle))?;
        let runs = config.runs.max(1) as u64;
        let update_reads = inc.reads() / runs;
        let original_reads = db.reads() / runs;
        let update_fc: BTreeSet<Itemset> = frequent_itemsets(&state)
            .into_iter()
            .map(|(x, _)| x)
            .collect();

        rows.push(BenchRow {
            min_sup: abs,
            db_units: db.unit_count(),
            inc_units: inc.unit_count(),
            rerun: BenchReport {
                algorithm: "pcar-rerun",
                min_sup: abs,
                wall_time: rerun_time,
                transactions_read: rerun_reads,
                original_reads: rerun_reads,
                fc_count: rerun_fc.len(),
                checksum: checksum(&rerun_fc),
            },
            update: BenchReport {
                algorithm: "iupcar-update",
                min_sup: abs,
                wall_time: update_time,
                transactions_read: update_reads,
                original_reads,
                fc_count: update_fc.len(),
                checksum: checksum(&update_fc),
            },
            initial_mine_time: initial_time,
            fc_difference: rerun_fc.symmetric_difference(&update_fc).count(),
            diagonal_only: report.is_diagonal_only(),
        });
    }
    Ok(rows)
}
