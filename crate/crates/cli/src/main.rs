use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stigmergy::harness::Verdict;
use stigmergy::protocols::Mutations;
use stigmergy::scenario::{explore_scenario, run_scenario, write_json, Scenario, ScenarioError};

/// Run a robot messaging scenario and check its trace.
///
/// Exit status is 0 when every property holds, 1 when one is violated and
/// 2 when the scenario cannot be loaded or run.
#[derive(Debug, Parser)]
#[command(name = "stigmergy", version)]
struct Args {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Seed for random_fair schedules, replacing the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of instants to run, replacing the scenario's.
    #[arg(long)]
    horizon: Option<usize>,
    /// Directory for trace.jsonl, verdicts.json and summary.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Check every schedule up to the horizon instead of one run; writes explore.json.
    #[arg(long)]
    explore: bool,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Invalid(ScenarioError),
    Violated,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Invalid(e)
    }
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        if v.passed {
            println!("ok    {:<12} {}", v.property, v.detail);
        } else {
            let at = v.first_violation.map_or(String::new(), |t| format!(" at t={t}"));
            println!("FAIL  {:<12} {}{at}", v.property, v.detail);
        }
    }
}

fn run(args: &Args) -> Result<(), Failure> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(horizon) = args.horizon {
        scenario.horizon = horizon;
    }
    scenario.validate()?;

    if args.explore {
        let report = explore_scenario(&scenario, Mutations::default())?;
        std::fs::create_dir_all(&args.out).map_err(|source| ScenarioError::Write {
            path: args.out.display().to_string(),
            source,
        })?;
        write_json(&args.out.join("explore.json"), &report)?;
        if !args.quiet || !report.verdict.passed {
            print_verdicts(std::slice::from_ref(&report.verdict));
        }
        return if report.verdict.passed { Ok(()) } else { Err(Failure::Violated) };
    }

    let outcome = run_scenario(&scenario)?;
    outcome.write(&args.out)?;
    if !args.quiet || !outcome.passed() {
        print_verdicts(&outcome.verdicts);
        let s = &outcome.summary;
        println!(
            "{}: {} robots, {}/{} messages and {}/{} bits delivered, last delivery {}, moving until t={}",
            s.protocol,
            s.robots,
            s.messages_delivered,
            s.messages,
            s.bits_delivered,
            s.bits_queued,
            s.last_delivery.map_or("none".to_string(), |t| format!("t={t}")),
            s.steps_used,
        );
        println!("wrote {}", args.out.display());
    }
    if outcome.passed() {
        Ok(())
    } else {
        Err(Failure::Violated)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violated) => ExitCode::from(1),
        Err(Failure::Invalid(e)) => {
            eprintln!("stigmergy: {}: {e}", args.scenario.display());
            ExitCode::from(2)
        }
    }
}
