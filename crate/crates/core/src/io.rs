//! Transaction files and mining-state files.
//!
//! Transactions: one per line, whitespace-separated item ids, `#` starts a
//! comment line.
//!
//! State: a header of `key value` lines followed by one tab-separated
//! record per entry:
//!
//! ```text
//! # cyclic-state
//! version 1
//! db_units 6
//! cycle_length 2
//! min_sup 2
//! min_conf 1/2
//! expected_inc 4
//! fpc_mode relative
//! entries 2
//! 1 2  FC   1/2  3  6  1
//! 1 3  FPC  1/3  2  6  0
//! ```
//!
//! Record fields, tab-separated (spaced out above): item ids, status,
//! weight as `numer/denom`, abs_support, history_units, offset.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::iupcar::{ItemsetStateEntry, ItemsetStatus, MiningState, FORMAT_VERSION};
use crate::model::{
    ingest_numbered, CycleConfig, FpcMode, Itemset, MinSupport, ThresholdConfig,
    TransactionDatabase,
};

const STATE_MAGIC: &str = "# cyclic-state";

pub fn parse_transactions(reader: impl Read, grouping: usize) -> Result<TransactionDatabase> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedTransaction {
            line: line_no,
            reason: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        let ids = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>().map_err(|_| Error::MalformedTransaction {
                    line: line_no,
                    reason: format!("'{tok}' is not an item id"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        records.push((line_no, Itemset::from_ids(ids)));
    }
    ingest_numbered(records, grouping)
}

pub fn load_transactions(path: impl AsRef<Path>) -> Result<TransactionDatabase> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_transactions(file, 1)
}

pub fn write_transactions(db: &TransactionDatabase, mut out: impl Write) -> std::io::Result<()> {
    for tx in db.transactions() {
        let line: Vec<String> = tx.ids().map(|i| i.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn save_transactions(db: &TransactionDatabase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_transactions(db, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn fpc_mode_tag(mode: FpcMode) -> &'static str {
    match mode {
        FpcMode::Relative => "relative",
        FpcMode::PaperLiteral => "paper-literal",
    }
}

pub fn format_state(state: &MiningState) -> String {
    let mut s = String::new();
    let min_conf = state.thresholds.min_conf;
    s.push_str(STATE_MAGIC);
    s.push('\n');
    s.push_str(&format!("version {}\n", state.format_version));
    s.push_str(&format!("db_units {}\n", state.db_units));
    s.push_str(&format!("cycle_length {}\n", state.cycle.length()));
    s.push_str(&format!("min_sup {}\n", state.min_sup()));
    s.push_str(&format!(
        "min_conf {}/{}\n",
        min_conf.numer(),
        min_conf.denom()
    ));
    s.push_str(&format!(
        "expected_inc {}\n",
        state.thresholds.expected_increment_size
    ));
    s.push_str(&format!(
        "fpc_mode {}\n",
        fpc_mode_tag(state.thresholds.fpc_mode)
    ));
    s.push_str(&format!("entries {}\n", state.entries.len()));
    for e in state.entries.values() {
        let ids: Vec<String> = e.itemset.ids().map(|i| i.to_string()).collect();
        s.push_str(&format!(
            "{}\t{}\t{}/{}\t{}\t{}\t{}\n",
            ids.join(" "),
            e.status,
            e.weight.numer(),
            e.weight.denom(),
            e.abs_support,
            e.history_units,
            e.offset
        ));
    }
    s
}

fn parse_fraction(s: &str) -> Option<Ratio<u64>> {
    let (n, d) = s.split_once('/')?;
    let d: u64 = d.parse().ok()?;
    (d != 0).then_some(())?;
    let r = Ratio::new_raw(n.parse().ok()?, d);
    // Only reduced fractions are emitted; anything else is not ours.
    let reduced = r.reduced();
    (reduced.numer() == r.numer() && reduced.denom() == r.denom()).then_some(r)
}

/// Header problems are reported as record 0; entry problems by their
/// 0-based position.
pub fn parse_state(text: &str) -> Result<MiningState> {
    let mut lines = text.lines();
    let header_err = |reason: String| Error::corrupt(0, format!("header: {reason}"));
    if lines.next() != Some(STATE_MAGIC) {
        return Err(header_err("missing magic line".into()));
    }

    let mut field = |key: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| header_err(format!("missing '{key}'")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(header_err(format!("expected '{key}', found '{line}'"))),
        }
    };
    let num = |key: &str, v: String| -> Result<u64> {
        v.parse()
            .map_err(|_| header_err(format!("bad {key} '{v}'")))
    };

    let version = num("version", field("version")?)?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch {
            found: version.min(u32::MAX as u64) as u32,
            expected: FORMAT_VERSION,
        });
    }
    let db_units = num("db_units", field("db_units")?)?;
    let cycle_length = num("cycle_length", field("cycle_length")?)?;
    let min_sup = num("min_sup", field("min_sup")?)?;
    let min_conf_raw = field("min_conf")?;
    let min_conf = parse_fraction(&min_conf_raw)
        .ok_or_else(|| header_err(format!("bad min_conf '{min_conf_raw}'")))?;
    let expected_inc = num("expected_inc", field("expected_inc")?)?;
    let fpc_mode = match field("fpc_mode")?.as_str() {
        "relative" => FpcMode::Relative,
        "paper-literal" => FpcMode::PaperLiteral,
        other => return Err(header_err(format!("bad fpc_mode '{other}'"))),
    };
    let count = num("entries", field("entries")?)? as usize;

    let cycle = u32::try_from(cycle_length)
        .ok()
        .and_then(|l| CycleConfig::new(l).ok())
        .ok_or_else(|| header_err(format!("bad cycle_length {cycle_length}")))?;
    let thresholds = ThresholdConfig::new(MinSupport::Count(min_sup), min_conf, expected_inc)
        .map_err(|e| header_err(e.to_string()))?
        .with_fpc_mode(fpc_mode);

    let mut entries = BTreeMap::new();
    for i in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| Error::corrupt(i, format!("truncated: {i} of {count} records")))?;
        let entry = parse_entry(line).map_err(|reason| Error::corrupt(i, reason))?;
        if let Some((prev, _)) = entries.last_key_value() {
            if entry.itemset <= *prev {
                return Err(Error::corrupt(i, "records out of order"));
            }
        }
        entries.insert(entry.itemset.clone(), entry);
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(Error::corrupt(
            count,
            format!("unexpected trailing line '{extra}'"),
        ));
    }

    let state = MiningState {
        entries,
        db_units,
        cycle,
        thresholds,
        format_version: FORMAT_VERSION,
    };
    state.validate()?;
    Ok(state)
}

fn parse_entry(line: &str) -> std::result::Result<ItemsetStateEntry, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [ids, status, weight, abs, hist, offset] = fields[..] else {
        return Err(format!("expected 6 fields, found {}", fields.len()));
    };
    let ids = ids
        .split(' ')
        .map(|t| t.parse::<u32>().map_err(|_| format!("bad item id '{t}'")))
        .collect::<std::result::Result<Vec<u32>, String>>()?;
    let itemset = Itemset::from_ids(ids.iter().copied());
    if itemset.len() != ids.len() || !ids.windows(2).all(|w| w[0] < w[1]) {
        return Err("itemset is not in canonical order".into());
    }
    let status: ItemsetStatus = status
        .parse()
        .map_err(|_| format!("bad status '{status}'"))?;
    let weight = parse_fraction(weight).ok_or_else(|| format!("bad weight '{weight}'"))?;
    let num = |name: &str, v: &str| v.parse::<u64>().map_err(|_| format!("bad {name} '{v}'"));
    Ok(ItemsetStateEntry {
        itemset,
        status,
        weight,
        abs_support: num("abs_support", abs)?,
        history_units: num("history_units", hist)?,
        offset: num("offset", offset)? as usize,
    })
}

pub fn save_state(state: &MiningState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_state(state)).map_err(|e| Error::io(path, e))
}

pub fn load_state(path: impl AsRef<Path>) -> Result<MiningState> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_state(&text)
}
