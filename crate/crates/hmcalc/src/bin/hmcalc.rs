//! Command-line front end: table dumps, word and series evaluation, and the
//! property-check suites. All outputs are deterministic given the same
//! configuration and flags.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use hmcalc::evolve::{self, EvalOpts};
use hmcalc::rational::format_rat;
use hmcalc::taut::render_canonical;
use hmcalc::{check, load_family, FamilyModel, HmError, RTable};

#[derive(Parser)]
#[command(
    name = "hmcalc",
    version,
    about = "Exact intersection calculus for tautological classes on relative Hilbert schemes of nodal curve families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the transfer-coefficient table r(n,j)^k_l.
    Tables(TablesArgs),
    /// Evaluate an operator word against a family configuration.
    Eval(EvalArgs),
    /// Compute the generating series up to given truncation orders.
    Series(SeriesArgs),
    /// Run the property-check suites.
    Check(CheckArgs),
    /// Dot-product a linear-combination table of words with their values.
    Combine(CombineArgs),
}

#[derive(Args)]
struct TablesArgs {
    /// Largest level l to tabulate (at least 2).
    #[arg(long)]
    lmax: u32,
    /// Write the dump to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Family configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Word, e.g. "star:1:L;star:1:L;gamma;gamma".
    #[arg(long)]
    word: String,
    /// Integrate the result to a rational number.
    #[arg(long)]
    integrate: bool,
    /// Emit JSON instead of plain text.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    guard: GuardArgs,
    #[command(flatten)]
    record: RecordArgs,
}

#[derive(Args)]
struct SeriesArgs {
    /// Family configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated class names for the mu directions.
    #[arg(long)]
    classes: String,
    /// Truncation order in gamma.
    #[arg(long)]
    gamma_order: u32,
    /// Comma-separated truncation orders, one per class.
    #[arg(long)]
    mu_orders: String,
    /// Cap on gamma order plus total mu order.
    #[arg(long, default_value_t = 16)]
    max_order: u32,
    /// Write the JSON dump to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    guard: GuardArgs,
    #[command(flatten)]
    record: RecordArgs,
}

#[derive(Args)]
struct CheckArgs {
    /// Suite to run.
    #[arg(long, default_value = "all", value_parser = ["all", "rtable", "dualpath", "classical", "nilpotency"])]
    suite: String,
    /// Weight bound for enumerated monomials.
    #[arg(long, default_value_t = 5)]
    weight: u32,
    /// Node-depth bound for enumerated monomials.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CombineArgs {
    /// Family configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Table file: one "coeff word" pair per line.
    #[arg(long)]
    table: PathBuf,
    #[command(flatten)]
    guard: GuardArgs,
}

#[derive(Args)]
struct GuardArgs {
    /// Term-count guard; overrides the HMCALC_MAX_TERMS environment variable.
    #[arg(long)]
    max_terms: Option<usize>,
}

impl GuardArgs {
    fn opts(&self) -> EvalOpts {
        let cap = self
            .max_terms
            .or_else(|| {
                std::env::var("HMCALC_MAX_TERMS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(1_000_000);
        EvalOpts {
            max_terms: Some(cap),
        }
    }
}

#[derive(Args)]
struct RecordArgs {
    /// Write a replayable run record (JSON) to this file.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunRecord {
    engine_version: String,
    config_digest: String,
    command: Vec<String>,
    output: String,
    timing_ms: u128,
}

fn write_record(
    path: &Option<PathBuf>,
    config_text: &str,
    output: &str,
    started: Instant,
) -> Result<(), HmError> {
    let Some(path) = path else {
        return Ok(());
    };
    let record = RunRecord {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: hex_digest(config_text),
        command: std::env::args().collect(),
        output: output.to_string(),
        timing_ms: started.elapsed().as_millis(),
    };
    let text = serde_json::to_string_pretty(&record)
        .map_err(|e| HmError::Parse(format!("record serialization: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn hex_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn load(path: &PathBuf) -> Result<(String, FamilyModel), HmError> {
    let text = std::fs::read_to_string(path)?;
    let family = load_family(&text)?;
    Ok((text, family))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), HmError> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
        }
        None => {
            print!("{text}");
            std::io::stdout().flush()?;
        }
    }
    Ok(())
}

fn run() -> Result<(), HmError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Tables(args) => {
            if args.lmax < 2 {
                // Precondition failure is a usage error.
                eprintln!("error: --lmax must be at least 2");
                std::process::exit(2);
            }
            let table = RTable::with_lmax(args.lmax)?;
            emit(&args.out, &table.dump())?;
            Ok(())
        }
        Command::Eval(args) => {
            let started = Instant::now();
            let (config_text, family) = load(&args.config)?;
            let word = evolve::parse_word(&args.word)?;
            let rt = RTable::with_lmax(evolve::required_lmax(&word))?;
            let element = evolve::eval_word(&family, &rt, &word, args.guard.opts())?;
            let output;
            if args.json {
                let mut map = serde_json::Map::new();
                map.insert(
                    "element".to_string(),
                    serde_json::Value::String(render_canonical(&element)),
                );
                if args.integrate {
                    let v = evolve::integrate_element(&family, &element)?;
                    map.insert(
                        "integral".to_string(),
                        serde_json::Value::String(format_rat(&v)),
                    );
                }
                let mut s = serde_json::Value::Object(map).to_string();
                s.push('\n');
                output = s;
            } else if args.integrate {
                let v = evolve::integrate_element(&family, &element)?;
                if v == num_traits::Zero::zero()
                    && !element.is_zero()
                    && evolve::off_top_degree(&family, &element)
                {
                    eprintln!(
                        "warning: nonzero element integrates to 0; its degree does not \
                         match the top degree (dimension mismatch)"
                    );
                }
                output = format!("{}\n", format_rat(&v));
            } else {
                output = format!("{}\n", render_canonical(&element));
            }
            print!("{output}");
            std::io::stdout().flush()?;
            write_record(&args.record.record, &config_text, &output, started)?;
            Ok(())
        }
        Command::Series(args) => {
            let started = Instant::now();
            let (config_text, family) = load(&args.config)?;
            let class_names: Vec<String> = args
                .classes
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            let mu_orders: Vec<u32> = args
                .mu_orders
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| HmError::Parse(format!("bad mu order {s:?}")))
                })
                .collect::<Result<_, _>>()?;
            let total: u32 = args.gamma_order + mu_orders.iter().sum::<u32>();
            if total > args.max_order {
                return Err(HmError::OutOfRange(format!(
                    "total order {total} exceeds the cap {} (raise --max-order)",
                    args.max_order
                )));
            }
            let mut classes = Vec::new();
            for name in &class_names {
                classes.push((name.clone(), family.distinguished(name)?));
            }
            let lmax = (mu_orders.iter().sum::<u32>() + 2).max(2);
            let rt = RTable::with_lmax(lmax)?;
            let series = evolve::g_series(
                &family,
                &rt,
                &classes,
                args.gamma_order,
                &mu_orders,
                args.guard.opts(),
            )?;
            let mut output = serde_json::to_string_pretty(&series.to_json())
                .map_err(|e| HmError::Parse(format!("series serialization: {e}")))?;
            output.push('\n');
            emit(&args.out, &output)?;
            write_record(&args.record.record, &config_text, &output, started)?;
            Ok(())
        }
        Command::Check(args) => {
            let reports = check::run_suites(&args.suite, args.weight, args.depth)?;
            let failed = reports.iter().any(|r| !r.passed);
            if args.json {
                let items: Vec<serde_json::Value> = reports
                    .iter()
                    .map(|r| {
                        serde_json::json!({
                            "suite": r.suite,
                            "fixture": r.fixture,
                            "passed": r.passed,
                            "cases": r.cases,
                            "detail": r.detail,
                        })
                    })
                    .collect();
                println!("{}", serde_json::Value::Array(items));
            } else {
                for r in &reports {
                    if r.passed {
                        println!("PASS {} {} ({} cases)", r.suite, r.fixture, r.cases);
                    } else {
                        println!(
                            "FAIL {} {} ({} cases): {}",
                            r.suite, r.fixture, r.cases, r.detail
                        );
                    }
                }
            }
            if failed {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::Combine(args) => {
            let (_config_text, family) = load(&args.config)?;
            let table = std::fs::read_to_string(&args.table)?;
            let v = evolve::combination_number(&family, &table, args.guard.opts())?;
            println!("{}", format_rat(&v));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
