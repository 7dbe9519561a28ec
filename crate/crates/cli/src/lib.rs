//! `iupcar` command-line driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclic_core::bench::{run_bench, BenchConfig, BenchReport};
use cyclic_core::generator::{generate, GeneratorSpec, PlantedPattern};
use cyclic_core::io::{load_state, load_transactions, save_state, save_transactions};
use cyclic_core::model::parse_decimal;
use cyclic_core::{
    apply_increment, initial_mine, rules_from_state, CycleConfig, Error, FpcMode, ItemsetStatus,
    MinSupport, MiningState, ThresholdConfig, UpdateCase, UpdateReport, VerticalIndex,
};
use num_rational::Ratio;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGS: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_STATE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "iupcar",
    version,
    about = "Mine and incrementally maintain cyclic association rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine a transaction file and write the initial state.
    Mine(MineArgs),
    /// Fold an appended batch into a saved state.
    Update(UpdateArgs),
    /// Print the cyclic rules held by a state.
    Rules(RulesArgs),
    /// Compare a full rerun against an incremental update.
    Bench(BenchArgs),
    /// Write a synthetic transaction file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Transaction file, one transaction per line.
    input: PathBuf,
    #[arg(long)]
    cycle_length: u32,
    /// Count (`2`), fraction (`0.1`) or percentage (`10%`) of units.
    #[arg(long)]
    min_sup: String,
    #[arg(long, default_value = "0.5")]
    min_conf: String,
    /// Increment size assumed when computing MinFPC; defaults to 10% of
    /// the units, rounded up.
    #[arg(long)]
    expected_inc: Option<u64>,
    /// Compare absolute counts against MinFPC.
    #[arg(long)]
    paper_literal: bool,
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    report: ReportFormat,
}

#[derive(Args, Debug)]
struct UpdateArgs {
    /// Transaction file holding the appended batch.
    input: PathBuf,
    #[arg(long)]
    state: PathBuf,
    /// Where to write the updated state; defaults to `--state`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Must match the state when given.
    #[arg(long)]
    cycle_length: Option<u32>,
    #[arg(long, value_enum, default_value_t)]
    report: ReportFormat,
}

#[derive(Args, Debug)]
struct RulesArgs {
    #[arg(long)]
    state: PathBuf,
    /// Defaults to the threshold stored in the state.
    #[arg(long)]
    min_conf: Option<String>,
    /// Latest increment, for subsets the state no longer holds.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    report: ReportFormat,
}

#[derive(Args, Debug)]
struct BenchArgs {
    input: PathBuf,
    #[arg(long)]
    cycle_length: u32,
    /// Comma-separated sweep, e.g. `1%,2%,4%`.
    #[arg(long, value_delimiter = ',', required = true)]
    min_sup: Vec<String>,
    /// Share of units used as the increment.
    #[arg(long, default_value = "10%")]
    inc_fraction: String,
    #[arg(long, default_value = "0.5")]
    min_conf: String,
    #[arg(long, default_value_t = 4)]
    partitions: usize,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long)]
    paper_literal: bool,
    #[arg(long, value_enum, default_value_t)]
    report: ReportFormat,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    units: usize,
    #[arg(long)]
    items: u32,
    /// `ids@offset/length:probability`, e.g. `1,2@1/2:0.9`; repeatable.
    #[arg(long)]
    plant: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn args(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ARGS,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) | Error::PartitionCountOutOfRange { .. } | Error::ZeroSizes => {
                EXIT_ARGS
            }
            Error::EmptyDatabase | Error::MalformedTransaction { .. } | Error::IoFailure { .. } => {
                EXIT_DATA
            }
            Error::CycleMismatch { .. }
            | Error::MissingSupport(_)
            | Error::VersionMismatch { .. }
            | Error::CorruptState { .. } => EXIT_STATE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn state_failure(e: Error) -> Failure {
    Failure {
        code: EXIT_STATE,
        ..Failure::from(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGS } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a, out),
        Command::Update(a) => cmd_update(a, out),
        Command::Rules(a) => cmd_rules(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Gen(a) => cmd_gen(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn parse_min_conf(s: &str) -> std::result::Result<Ratio<u64>, Failure> {
    let c = parse_decimal(s).ok_or_else(|| Failure::args(format!("invalid min_conf '{s}'")))?;
    if c == Ratio::from_integer(0) || c > Ratio::from_integer(1) {
        return Err(Failure::args(format!("min_conf {s} outside (0, 1]")));
    }
    Ok(c)
}

/// `10%` or `0.1`.
fn parse_fraction(s: &str) -> std::result::Result<Ratio<u64>, Failure> {
    let bad = || Failure::args(format!("invalid fraction '{s}'"));
    match s.strip_suffix('%') {
        Some(p) => Ok(parse_decimal(p).ok_or_else(bad)? / Ratio::from_integer(100)),
        None => parse_decimal(s).ok_or_else(bad),
    }
}

fn fpc_mode(paper_literal: bool) -> FpcMode {
    if paper_literal {
        FpcMode::PaperLiteral
    } else {
        FpcMode::Relative
    }
}

fn ratio_str(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn emit(out: &mut dyn Write, v: &Value) -> CmdResult {
    writeln!(out, "{v}").map_err(|e| Failure::args(e.to_string()))
}

fn io_err(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    }
}

fn state_summary(state: &MiningState) -> Value {
    json!({
        "db_units": state.db_units,
        "cycle_length": state.cycle.length(),
        "min_sup": state.min_sup(),
        "fc": state.count_by_status(ItemsetStatus::Fc),
        "fpc": state.count_by_status(ItemsetStatus::Fpc),
    })
}

fn cmd_mine(a: MineArgs, out: &mut dyn Write) -> CmdResult {
    let cycle = CycleConfig::new(a.cycle_length)?;
    let min_sup: MinSupport = a.min_sup.parse()?;
    let min_conf = parse_min_conf(&a.min_conf)?;
    let db = load_transactions(&a.input)?;
    let units = db.unit_count() as u64;
    let expected_inc = a.expected_inc.unwrap_or_else(|| units.div_ceil(10).max(1));
    let thresholds = ThresholdConfig::new(min_sup, min_conf, expected_inc)?
        .with_fpc_mode(fpc_mode(a.paper_literal));
    let state = initial_mine(&db, cycle, &thresholds)?;
    save_state(&state, &a.state)?;

    match a.report {
        ReportFormat::Json => {
            let mut v = state_summary(&state);
            v["transactions_read"] = json!(db.reads());
            v["state"] = json!(a.state.display().to_string());
            emit(out, &v)
        }
        ReportFormat::Text => writeln!(
            out,
            "units {} min_sup {} FC {} FPC {}\nstate written to {}",
            state.db_units,
            state.min_sup(),
            state.count_by_status(ItemsetStatus::Fc),
            state.count_by_status(ItemsetStatus::Fpc),
            a.state.display()
        )
        .map_err(io_err),
    }
}

fn load(path: &Path) -> std::result::Result<MiningState, Failure> {
    load_state(path).map_err(state_failure)
}

fn update_json(report: &UpdateReport, state: &MiningState, original_reads: u64) -> Value {
    let cases: serde_json::Map<String, Value> = UpdateCase::ALL
        .iter()
        .map(|c| (c.to_string(), json!(report.case_count(*c))))
        .collect();
    let mut v = state_summary(state);
    v["cases"] = Value::Object(cases);
    v["min_fpc"] = json!(ratio_str(report.min_fpc));
    v["increment_units"] = json!(report.increment_units);
    v["transactions_read"] = json!(report.increment_reads);
    v["original_reads"] = json!(original_reads);
    v
}

fn cmd_update(a: UpdateArgs, out: &mut dyn Write) -> CmdResult {
    let state = load(&a.state)?;
    let cycle = match a.cycle_length {
        Some(l) => CycleConfig::new(l)?,
        None => state.cycle,
    };
    let inc = load_transactions(&a.input)?;
    let (next, report) = apply_increment(&state, &inc, cycle)?;
    save_state(&next, a.out.as_ref().unwrap_or(&a.state))?;

    // The original transactions are never opened here; the state is all
    // that is read of them.
    let original_reads = 0;
    match a.report {
        ReportFormat::Json => emit(out, &update_json(&report, &next, original_reads)),
        ReportFormat::Text => {
            let tallies: Vec<String> = UpdateCase::ALL
                .iter()
                .map(|c| format!("{c}={}", report.case_count(*c)))
                .collect();
            writeln!(
                out,
                "cases {}\nmin_fpc {}\ntransactions_read {} original_reads {}\nunits {} FC {} FPC {}",
                tallies.join(" "),
                ratio_str(report.min_fpc),
                report.increment_reads,
                original_reads,
                next.db_units,
                next.count_by_status(ItemsetStatus::Fc),
                next.count_by_status(ItemsetStatus::Fpc),
            )
            .map_err(io_err)
        }
    }
}

fn cmd_rules(a: RulesArgs, out: &mut dyn Write) -> CmdResult {
    let min_conf = a.min_conf.as_deref().map(parse_min_conf).transpose()?;
    let state = load(&a.state)?;
    let min_conf = min_conf.unwrap_or(state.thresholds.min_conf);
    let inc = a.input.as_ref().map(load_transactions).transpose()?;
    let index = inc
        .as_ref()
        .map(|db| VerticalIndex::build_with_origin(db, state.db_units));
    let rules = rules_from_state(&state, min_conf, index.as_ref())?;

    match a.report {
        ReportFormat::Json => {
            let list: Vec<Value> = rules
                .iter()
                .map(|r| {
                    json!({
                        "antecedent": r.antecedent.ids().collect::<Vec<_>>(),
                        "consequent": r.consequent.ids().collect::<Vec<_>>(),
                        "support": r.support,
                        "confidence": ratio_str(r.confidence),
                        "offset": r.offset,
                    })
                })
                .collect();
            emit(out, &Value::Array(list))
        }
        ReportFormat::Text => {
            for r in &rules {
                writeln!(out, "{r}").map_err(io_err)?;
            }
            Ok(())
        }
    }
}

fn report_json(r: &BenchReport) -> Value {
    json!({
        "algorithm": r.algorithm,
        "min_sup": r.min_sup,
        "wall_time_ms": millis(r.wall_time),
        "transactions_read": r.transactions_read,
        "original_reads": r.original_reads,
        "fc": r.fc_count,
        "checksum": r.checksum,
    })
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> CmdResult {
    let inc_fraction = parse_fraction(&a.inc_fraction)?;
    let min_sups = a
        .min_sup
        .iter()
        .map(|s| s.parse::<MinSupport>())
        .collect::<cyclic_core::Result<Vec<_>>>()?;
    let config = BenchConfig {
        inc_fraction,
        cycle: CycleConfig::new(a.cycle_length)?,
        min_sups,
        min_conf: parse_min_conf(&a.min_conf)?,
        partitions: a.partitions,
        runs: a.runs,
        fpc_mode: fpc_mode(a.paper_literal),
    };
    if config.partitions == 0 {
        return Err(Failure::args("partitions must be at least 1"));
    }
    let full = load_transactions(&a.input)?;
    let rows = run_bench(&full, &config)?;

    match a.report {
        ReportFormat::Json => {
            let list: Vec<Value> = rows
                .iter()
                .map(|row| {
                    json!({
                        "min_sup": row.min_sup,
                        "db_units": row.db_units,
                        "inc_units": row.inc_units,
                        "rerun": report_json(&row.rerun),
                        "update": report_json(&row.update),
                        "initial_mine_ms": millis(row.initial_mine_time),
                        "diagonal_only": row.diagonal_only,
                        "checksums_match": row.checksums_match(),
                        "fc_difference": row.fc_difference,
                    })
                })
                .collect();
            emit(out, &Value::Array(list))
        }
        ReportFormat::Text => {
            writeln!(
                out,
                "min_sup\talgorithm\twall_ms\tread\toriginal_read\tfc\tchecksum"
            )
            .map_err(io_err)?;
            for row in &rows {
                for r in [&row.rerun, &row.update] {
                    writeln!(
                        out,
                        "{}\t{}\t{:.3}\t{}\t{}\t{}\t{}",
                        r.min_sup,
                        r.algorithm,
                        millis(r.wall_time),
                        r.transactions_read,
                        r.original_reads,
                        r.fc_count,
                        &r.checksum[..16]
                    )
                    .map_err(io_err)?;
                }
                let verdict = if row.checksums_match() {
                    "checksums match".to_string()
                } else {
                    format!("FC sets differ by {}", row.fc_difference)
                };
                writeln!(out, "# diagonal_only={} {verdict}", row.diagonal_only).map_err(io_err)?;
            }
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    let planted = a
        .plant
        .iter()
        .map(|p| PlantedPattern::parse(p))
        .collect::<cyclic_core::Result<Vec<_>>>()?;
    let spec = GeneratorSpec {
        units: a.units,
        items: a.items,
        planted,
        noise: a.noise,
        seed: a.seed,
    };
    let db = generate(&spec)?;
    save_transactions(&db, &a.out)?;
    writeln!(
        out,
        "wrote {} units to {}",
        db.unit_count(),
        a.out.display()
    )
    .map_err(io_err)
}
