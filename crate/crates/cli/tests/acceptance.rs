//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cyclic_core::bench::{run_bench, BenchConfig};
use cyclic_core::generator::{generate, GeneratorSpec, PlantedPattern};
use cyclic_core::io::{load_state, save_state, write_transactions};
use cyclic_core::iupcar::FORMAT_VERSION;
use cyclic_core::miner::support_map;
use cyclic_core::{
    apply_increment, compute_min_fpc, cyclic_support, ingest, initial_mine, merge_entry,
    mine_interleaved, mine_pcar, mine_sequential, rules_from_state, CycleConfig, CyclicRule,
    FpcMode, Itemset, ItemsetStateEntry, ItemsetStatus, MergeSide, MinSupport, MiningState,
    ThresholdConfig, TransactionDatabase, VerticalIndex,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn r(n: u64, d: u64) -> Ratio<u64> {
    Ratio::new(n, d)
}

fn set(ids: &[u32]) -> Itemset {
    Itemset::from_ids(ids.iter().copied())
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// A=1 B=2 C=3 D=4
fn table2() -> TransactionDatabase {
    ingest(
        vec![
            vec![2],
            vec![1, 2],
            vec![1, 2, 3, 4],
            vec![1, 2, 3],
            vec![3],
            vec![1],
        ],
        1,
    )
    .unwrap()
}

fn random_records(rng: &mut ChaCha8Rng, max_units: usize, items: u32) -> Vec<Vec<u32>> {
    let units = rng.gen_range(1..=max_units);
    (0..units)
        .map(|_| {
            let mut tx: Vec<u32> = (0..items).filter(|_| rng.gen_bool(0.45)).collect();
            if tx.is_empty() {
                tx.push(rng.gen_range(0..items));
            }
            tx
        })
        .collect()
}

fn golden_example() -> Outcome {
    let start = Instant::now();
    let t = ThresholdConfig::new(MinSupport::Count(2), r(1, 2), 4).unwrap();
    let state =
        initial_mine(&table2(), CycleConfig::new(2).unwrap(), &t).map_err(|e| e.to_string())?;
    let status = |x: &Itemset| {
        state
            .entries
            .get(x)
            .map_or(ItemsetStatus::Nfc, |e| e.status)
    };
    let got = (
        status(&set(&[1, 2])),
        status(&set(&[1, 3])),
        status(&set(&[1, 4])),
    );
    let elapsed = start.elapsed();
    check(
        got == (ItemsetStatus::Fc, ItemsetStatus::Fpc, ItemsetStatus::Nfc),
        format!("AB, AC, AD classified {got:?}"),
    )?;
    check(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("AB=FC AC=FPC AD=NFC in {elapsed:?}"))
}

fn merge_scenarios() -> Outcome {
    use ItemsetStatus::*;
    let side = |status, abs_support, units| MergeSide {
        status,
        abs_support,
        units,
    };
    let stored = side(Fc, 3, 6);
    let cases = [
        (side(Fc, 2, 4), Fc),
        (side(Fpc, 1, 4), Fc),
        (side(Fpc, 3, 4), Fpc),
        (side(Nfc, 1, 4), Fc),
        (side(Nfc, 3, 4), Nfc),
    ];
    let weights = [r(1, 2), r(1, 4), r(1, 4), r(1, 4), r(1, 4)];
    for (i, ((inc, want), w)) in cases.iter().zip(weights).enumerate() {
        let out = merge_entry(stored, *inc);
        let label = (b'a' + i as u8) as char;
        check(
            out.status == *want && out.weight == w,
            format!(
                "scenario {label}: got {} {}, want {want} {w}",
                out.status, out.weight
            ),
        )?;
    }
    Ok("weights 1/2 1/4 1/4 1/4 1/4, statuses FC FC FPC FC NFC".into())
}

fn min_fpc_formula() -> Outcome {
    let v = compute_min_fpc(2, 6, 4).map_err(|e| e.to_string())?;
    check(v == r(22, 100), format!("compute_min_fpc(2,6,4) = {v}"))?;
    Ok(format!("compute_min_fpc(2,6,4) = {v} = 0.22"))
}

fn miner_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dbs = 1200;
    let mut runs = 0;
    for n in 0..dbs {
        let items = rng.gen_range(1..=6);
        let db = ingest(random_records(&mut rng, 12, items), 1).unwrap();
        let cycle = CycleConfig::new(rng.gen_range(1..=3)).unwrap();
        let t = ThresholdConfig::new(MinSupport::Count(rng.gen_range(1..=4)), r(1, 2), 1).unwrap();
        let seq = support_map(&mine_sequential(&db, cycle, &t));
        check(
            seq == support_map(&mine_interleaved(&db, cycle, &t)),
            format!("database {n}: interleaved differs"),
        )?;
        for parts in 1..=3usize.min(db.unit_count()) {
            let pcar = mine_pcar(&db, cycle, &t, parts).map_err(|e| e.to_string())?;
            check(
                seq == support_map(&pcar),
                format!("database {n}: pcar with {parts} partitions differs"),
            )?;
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "{dbs} databases, {runs} pcar runs, 0 mismatches in {elapsed:?}"
    ))
}

fn diagonal_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = 1200;
    let mut checked = 0;
    for n in 0..pairs {
        let items = rng.gen_range(1..=6);
        let db = ingest(random_records(&mut rng, 12, items), 1).unwrap();
        let inc = ingest(random_records(&mut rng, 8, items), 1).unwrap();
        let cycle = CycleConfig::new(rng.gen_range(1..=3)).unwrap();
        let t = ThresholdConfig::new(
            MinSupport::Count(rng.gen_range(1..=3)),
            r(1, 2),
            inc.unit_count() as u64,
        )
        .unwrap();
        let state = initial_mine(&db, cycle, &t).map_err(|e| e.to_string())?;
        let (next, report) = apply_increment(&state, &inc, cycle).map_err(|e| e.to_string())?;
        for tr in &report.transitions {
            if tr.before == tr.increment {
                checked += 1;
                check(
                    tr.after == tr.before,
                    format!(
                        "pair {n}: {} was {} on both sides, became {}",
                        tr.itemset, tr.before, tr.after
                    ),
                )?;
            }
        }
        for x in next.entries.keys() {
            check(
                report.transition(x).is_some(),
                format!("pair {n}: {x} stored without a merge"),
            )?;
        }
    }
    Ok(format!(
        "{pairs} pairs, {checked} same-status merges, 0 violations"
    ))
}

fn anti_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pairs = 0;
    for n in 0..500 {
        let items = rng.gen_range(1..=6);
        let db = ingest(random_records(&mut rng, 12, items), 1).unwrap();
        let cycle = CycleConfig::new(rng.gen_range(1..=3)).unwrap();
        for _ in 0..10 {
            let y: Vec<u32> = (0..items).filter(|_| rng.gen_bool(0.5)).collect();
            if y.is_empty() {
                continue;
            }
            let y = Itemset::from_ids(y);
            let x: Vec<u32> = y.ids().filter(|_| rng.gen_bool(0.5)).collect();
            if x.is_empty() {
                continue;
            }
            let x = Itemset::from_ids(x);
            let (sx, sy) = (
                cyclic_support(&x, &db, cycle),
                cyclic_support(&y, &db, cycle),
            );
            check(
                sy.support <= sx.support,
                format!(
                    "database {n}: sup({y}) = {} > sup({x}) = {}",
                    sy.support, sx.support
                ),
            )?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} subset pairs, 0 violations"))
}

/// 5000 units over 60 items with three planted cycles of length 4.
fn synthetic() -> TransactionDatabase {
    let planted = ["3,7@1/4:0.9", "10,11,12@2/4:0.8", "20,21@0/4:0.7"]
        .iter()
        .map(|p| PlantedPattern::parse(p).unwrap())
        .collect();
    generate(&GeneratorSpec {
        units: 5000,
        items: 60,
        planted,
        noise: 0.08,
        seed: 2024,
    })
    .unwrap()
}

fn zero_rescan(full: &TransactionDatabase) -> Outcome {
    let config = BenchConfig {
        inc_fraction: r(1, 10),
        cycle: CycleConfig::new(4).unwrap(),
        min_sups: vec![MinSupport::Fraction(r(1, 100))],
        min_conf: r(1, 2),
        partitions: 4,
        runs: 3,
        fpc_mode: FpcMode::Relative,
    };
    let row = run_bench(full, &config)
        .map_err(|e| e.to_string())?
        .remove(0);
    let (u, p) = (row.update.wall_time, row.rerun.wall_time);
    check(
        row.update.original_reads == 0,
        format!(
            "update read {} original transactions",
            row.update.original_reads
        ),
    )?;
    check(
        row.update.transactions_read == 500,
        format!(
            "update read {} increment transactions",
            row.update.transactions_read
        ),
    )?;
    check(
        u.as_secs_f64() <= 0.7 * p.as_secs_f64(),
        format!(
            "update {u:?} vs rerun {p:?} (ratio {:.2})",
            u.as_secs_f64() / p.as_secs_f64()
        ),
    )?;
    Ok(format!(
        "original reads 0, increment reads 500, update {u:?} vs rerun {p:?} (ratio {:.2})",
        u.as_secs_f64() / p.as_secs_f64()
    ))
}

fn min_sup_trend(full: &TransactionDatabase) -> Outcome {
    let sweep = [r(1, 400), r(1, 200), r(1, 100), r(1, 50), r(1, 25)];
    let config = BenchConfig {
        inc_fraction: r(1, 10),
        cycle: CycleConfig::new(4).unwrap(),
        min_sups: sweep.iter().map(|&f| MinSupport::Fraction(f)).collect(),
        min_conf: r(1, 2),
        partitions: 4,
        runs: 3,
        fpc_mode: FpcMode::Relative,
    };
    let rows = run_bench(full, &config).map_err(|e| e.to_string())?;
    let times: Vec<Duration> = rows.iter().map(|row| row.update.wall_time).collect();
    let shown: Vec<String> = rows
        .iter()
        .map(|row| format!("{}:{:?}", row.min_sup, row.update.wall_time))
        .collect();
    check(
        times.windows(2).all(|w| w[1] <= w[0]),
        format!("update medians not non-increasing: {}", shown.join(" ")),
    )?;
    Ok(shown.join(" "))
}

fn random_state(rng: &mut ChaCha8Rng) -> MiningState {
    let l = rng.gen_range(1..=5);
    let db_units = rng.gen_range(1..=10_000u64);
    let mut entries = std::collections::BTreeMap::new();
    for _ in 0..rng.gen_range(0..40) {
        let ids: BTreeSet<u32> = (0..rng.gen_range(1..=5))
            .map(|_| rng.gen_range(0..1000))
            .collect();
        let itemset = Itemset::from_ids(ids);
        let history_units = rng.gen_range(1..=db_units);
        let abs_support = rng.gen_range(0..=history_units);
        let d = rng.gen_range(1..=1000u64);
        let entry = ItemsetStateEntry {
            itemset: itemset.clone(),
            status: if rng.gen_bool(0.5) {
                ItemsetStatus::Fc
            } else {
                ItemsetStatus::Fpc
            },
            weight: r(rng.gen_range(0..=d), d),
            abs_support,
            history_units,
            offset: rng.gen_range(0..l as usize),
        };
        entries.insert(itemset, entry);
    }
    let mode = if rng.gen_bool(0.5) {
        FpcMode::Relative
    } else {
        FpcMode::PaperLiteral
    };
    let d = rng.gen_range(1..=100u64);
    MiningState {
        entries,
        db_units,
        cycle: CycleConfig::new(l).unwrap(),
        thresholds: ThresholdConfig::new(
            MinSupport::Count(rng.gen_range(1..=500)),
            r(rng.gen_range(1..=d), d),
            rng.gen_range(1..=1000),
        )
        .unwrap()
        .with_fpc_mode(mode),
        format_version: FORMAT_VERSION,
    }
}

fn state_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut entries = 0;
    for n in 0..100 {
        let state = random_state(&mut rng);
        let path = dir.path().join(format!("state-{n}"));
        save_state(&state, &path).map_err(|e| e.to_string())?;
        let back = load_state(&path).map_err(|e| format!("state {n}: {e}"))?;
        check(back == state, format!("state {n} changed on round trip"))?;
        entries += state.entries.len();
    }
    Ok(format!("100 states, {entries} entries, all identical"))
}

fn rule_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut total = 0;
    for n in 0..100 {
        let items = rng.gen_range(2..=6);
        let db = ingest(random_records(&mut rng, 12, items), 1).unwrap();
        let inc = ingest(random_records(&mut rng, 6, items), 1).unwrap();
        let cycle = CycleConfig::new(rng.gen_range(1..=3)).unwrap();
        let t = ThresholdConfig::new(
            MinSupport::Count(rng.gen_range(1..=3)),
            r(1, 2),
            inc.unit_count() as u64,
        )
        .unwrap();
        let state = initial_mine(&db, cycle, &t).map_err(|e| e.to_string())?;
        let (state, _) = apply_increment(&state, &inc, cycle).map_err(|e| e.to_string())?;
        let index = VerticalIndex::build_with_origin(&inc, db.unit_count() as u64);

        let mut previous: Option<Vec<CyclicRule>> = None;
        for step in 1..=10u64 {
            let min_conf = r(step, 10);
            let rules = rules_from_state(&state, min_conf, Some(&index))
                .map_err(|e| format!("state {n}: {e}"))?;
            for rule in &rules {
                check(
                    rule.confidence > r(0, 1) && rule.confidence <= r(1, 1),
                    format!("state {n}: confidence {} outside (0, 1]", rule.confidence),
                )?;
                check(
                    rule.confidence >= min_conf,
                    format!("state {n}: {rule} below {min_conf}"),
                )?;
            }
            if let Some(prev) = &previous {
                check(
                    rules.iter().all(|x| prev.contains(x)),
                    format!("state {n}: raising min_conf to {min_conf} added rules"),
                )?;
            }
            total += rules.len();
            previous = Some(rules);
        }
    }
    Ok(format!(
        "100 states, {total} rules checked across 10 thresholds"
    ))
}

fn cli_update_reads(full: &TransactionDatabase) -> Result<(), String> {
    // Same accounting through the command-line path.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (db, inc) = full.split_at(4500).map_err(|e| e.to_string())?;
    let write = |name: &str, d: &TransactionDatabase| {
        let path = dir.path().join(name);
        let mut buf = Vec::new();
        write_transactions(d, &mut buf).unwrap();
        std::fs::write(&path, buf).unwrap();
        path
    };
    let (db_path, inc_path) = (write("db.txt", &db), write("inc.txt", &inc));
    let state = dir.path().join("state");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let s = |p: &std::path::Path| p.to_str().unwrap().to_string();
    let code = cyclic_cli::run(
        [
            "iupcar",
            "mine",
            &s(&db_path),
            "--cycle-length",
            "4",
            "--min-sup",
            "1%",
            "--state",
            &s(&state),
        ],
        &mut out,
        &mut err,
    );
    check(code == 0, format!("mine exited {code}"))?;
    out.clear();
    let code = cyclic_cli::run(
        [
            "iupcar",
            "update",
            &s(&inc_path),
            "--state",
            &s(&state),
            "--report",
            "json",
        ],
        &mut out,
        &mut err,
    );
    check(code == 0, format!("update exited {code}"))?;
    let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    check(
        v["transactions_read"] == 500 && v["original_reads"] == 0,
        format!("update report {v}"),
    )
}

fn main() -> ExitCode {
    let full = synthetic();
    let criteria: Vec<Criterion> = vec![
        ("golden classification", Box::new(golden_example)),
        ("merge scenarios a-e", Box::new(merge_scenarios)),
        ("MinFPC formula", Box::new(min_fpc_formula)),
        ("miner equivalence", Box::new(miner_oracle)),
        (
            "same-status merges keep status",
            Box::new(diagonal_property),
        ),
        ("anti-monotonicity", Box::new(anti_monotonicity)),
        (
            "zero rescan and update speed",
            Box::new(|| {
                cli_update_reads(&full)?;
                zero_rescan(&full)
            }),
        ),
        (
            "update time falls as min_sup rises",
            Box::new(|| min_sup_trend(&full)),
        ),
        ("state round trip", Box::new(state_round_trip)),
        ("rule sanity", Box::new(rule_sanity)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
