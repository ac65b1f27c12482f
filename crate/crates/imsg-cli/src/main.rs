//! `imsg`: config-driven experiment harness over the semigroup laboratory.
//!
//! Subcommands: `run` executes the tasks in a JSON config and writes one
//! report per task plus a summary; `hasse` renders a saved order report as
//! a Graphviz covering diagram; `fixtures` lists bundled and user-supplied
//! chains.

mod config;
mod error;
mod expr;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use imsg_core::fixtures::{reversible_corpus, FIXTURES_ENV};
use imsg_core::io::{hasse_dot, read_fixture_file};
use imsg_core::poset::OrderReport;

use error::{CliError, CliResult};
use output::TaskRecord;
use tasks::RunContext;

/// Numerical laboratory for collections of finite-state Markov semigroups.
#[derive(Parser)]
#[command(name = "imsg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in a config file and write one report per task.
    Run {
        /// Experiment description (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Directory receiving the reports; overrides the config's
        /// `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed; overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for running independent tasks concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Render a saved order report as a Graphviz covering diagram.
    Hasse {
        /// JSON file holding an order report (bare or task-wrapped).
        #[arg(long)]
        report: PathBuf,
        /// Destination DOT file.
        #[arg(long)]
        out: PathBuf,
    },
    /// List bundled fixtures plus any found through IMSG_FIXTURES.
    Fixtures {
        /// Fail when a fixture file does not parse.
        #[arg(long)]
        strict: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            parallel,
        } => fallible(run(&config, out, seed, parallel)),
        Command::Hasse { report, out } => fallible(hasse(&report, &out)),
        Command::Fixtures { strict } => fallible(fixtures(strict)),
    };
    std::process::exit(code);
}

fn fallible(result: CliResult<i32>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(
    config_path: &Path,
    out: Option<PathBuf>,
    seed_flag: Option<u64>,
    parallel: usize,
) -> CliResult<i32> {
    let started = Instant::now();
    let experiment = config::load(config_path)?;
    let seed = seed_flag.unwrap_or(experiment.seed);
    let out_dir = out.or(experiment.output_dir.clone()).ok_or_else(|| {
        CliError::config(
            "/output_dir",
            "no output directory: set it in the config or pass --out",
        )
    })?;
    let ctx = RunContext {
        fixtures: &experiment.fixtures,
        seed,
        eps_order: experiment.eps_order,
    };

    let execute_one = |planned: &config::PlannedTask| -> CliResult<TaskRecord> {
        let strategy = tasks::lookup(&planned.raw.kind).expect("kind was validated");
        let output = strategy.execute(&planned.raw, &ctx)?;
        Ok(TaskRecord {
            index: planned.index,
            kind: planned.raw.kind.clone(),
            label: planned.label.clone(),
            output,
        })
    };

    let outcomes: Vec<CliResult<TaskRecord>> = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| {
                CliError::Core(imsg_core::Error::Io(format!("starting worker pool: {e}")))
            })?;
        pool.install(|| {
            use rayon::prelude::*;
            experiment.tasks.par_iter().map(execute_one).collect()
        })
    } else {
        experiment.tasks.iter().map(execute_one).collect()
    };
    let mut records = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        records.push(outcome?);
    }

    output::write_reports(&out_dir, &records)?;
    output::write_meta(
        &out_dir,
        config_path,
        seed,
        parallel,
        started.elapsed().as_millis(),
    )?;

    let mut passed = 0usize;
    for record in &records {
        let verdict = if record.output.pass {
            passed += 1;
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "task {:02} [{}] {}: {verdict}",
            record.index + 1,
            record.kind,
            record.label
        );
    }
    println!(
        "passed {passed}/{}; reports in {}",
        records.len(),
        out_dir.display()
    );
    Ok(if passed == records.len() { 0 } else { 1 })
}

fn hasse(report_path: &Path, out: &Path) -> CliResult<i32> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::io(format!("reading {}", report_path.display()), e))?;
    let report = extract_order_report(&text).ok_or_else(|| {
        CliError::Core(imsg_core::Error::Io(format!(
            "{} holds no order report",
            report_path.display()
        )))
    })?;
    let dot = hasse_dot(&report);
    std::fs::write(out, &dot).map_err(|e| CliError::io(format!("writing {}", out.display()), e))?;
    println!(
        "wrote {} ({} classes, {} covering edges)",
        out.display(),
        report.classes.len(),
        report.hasse_edges.len()
    );
    Ok(0)
}

/// Accepts either a bare order report or a task envelope wrapping one.
fn extract_order_report(text: &str) -> Option<OrderReport> {
    if let Ok(report) = serde_json::from_str::<OrderReport>(text) {
        return Some(report);
    }
    let value: serde_json::Value = serde_json::from_str(text).ok()?;
    let inner = value.get("report")?;
    serde_json::from_value(inner.clone()).ok()
}

fn fixtures(strict: bool) -> CliResult<i32> {
    let mut broken = 0usize;
    for fixture in reversible_corpus() {
        println!(
            "{:<24} generator ({} states)  {}  [bundled]",
            fixture.name,
            fixture.generator.size(),
            fixture.description
        );
    }
    println!(
        "{:<24} relation (6 members)  bottom member, four incomparable middles, top member  [bundled]",
        "fan"
    );
    println!(
        "{:<24} family (3 members)  totally ordered two-state chains sharing one payoff  [bundled]",
        "three_chain"
    );
    for (name, description) in [
        ("ornstein_uhlenbeck", "unit diffusion with linear restoring drift"),
        ("quadratic_potential", "the same model built from its potential"),
        ("heat", "driftless unit diffusion"),
        ("laguerre", "degenerate-at-zero diffusion with affine drift"),
    ] {
        println!("{name:<24} diffusion (builder)  {description}  [bundled]");
    }

    if let Ok(dir) = std::env::var(FIXTURES_ENV) {
        if !dir.trim().is_empty() {
            broken += list_fixture_dir(Path::new(&dir));
        }
    }

    if strict && broken > 0 {
        eprintln!("error: {broken} fixture file(s) failed to parse");
        return Ok(1);
    }
    Ok(0)
}

/// Lists user fixtures one file at a time so a corrupted file only
/// annotates its own line. Returns how many files failed to parse.
fn list_fixture_dir(dir: &Path) -> usize {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            println!("{}: unreadable fixture directory: {e}", dir.display());
            return 1;
        }
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut broken = 0;
    for path in paths {
        match read_fixture_file(&path) {
            Ok(fixtures) => {
                for fixture in fixtures {
                    println!(
                        "{:<24} generator ({} states)  {}  [from {}]",
                        fixture.name,
                        fixture.generator.size(),
                        fixture.description,
                        path.display()
                    );
                }
            }
            Err(e) => {
                println!("{}: parse error: {e}", path.display());
                broken += 1;
            }
        }
    }
    broken
}
