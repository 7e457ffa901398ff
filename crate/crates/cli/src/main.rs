use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use lure_core::escape::{escape_map, escape_verdict};
use lure_core::export::{export_escape_map, export_trace};
use lure_core::plot::{render_escape_map, render_plots};
use lure_core::{run_closed_loop, selfcheck, Error, ScenarioConfig};

/// Two-target, two-attacker engagement simulator and escape analyzer.
#[derive(Parser)]
#[command(name = "lure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop engagement and write CSV, JSON and SVG output.
    Simulate {
        scenario: PathBuf,
        /// Output directory. LURE_OUT_DIR takes precedence when set.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Classify a grid of T2 starting points as escape or capture.
    EscapeMap {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the escape verdict for the scenario's initial positions.
    Verdict { scenario: PathBuf },
    /// Run the numerical self-tests.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

const OUT_ENV: &str = "LURE_OUT_DIR";

fn out_dir(flag: PathBuf) -> PathBuf {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from).unwrap_or(flag)
}

fn simulate(path: &Path, out: &Path) -> lure_core::Result<()> {
    let cfg = ScenarioConfig::load(path)?;
    let start = Instant::now();
    let trace = run_closed_loop(&cfg)?;
    export_trace(&trace, out)?;
    render_plots(&trace, &cfg.mpc.bounds, out)?;
    let end = trace.final_state.t;
    let status = if trace.timed_out { " (timed out)".to_string() } else { String::new() };
    println!("{}: {:?} at t = {end:.2} s{status}", cfg.name, trace.outcome);
    println!(
        "{} steps, min attacker range {:.3} m, {} solver stalls, {} skipped filter updates, {:.2} s wall",
        trace.len(),
        trace.min_attacker_range(),
        trace.solver_stalls,
        trace.skipped_updates,
        start.elapsed().as_secs_f64()
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn map(path: &Path, out: &Path) -> lure_core::Result<()> {
    let cfg = ScenarioConfig::load(path)?;
    let grid = escape_map(&cfg.escape_fixed()?, &cfg.escape_map)?;
    export_escape_map(&grid, out)?;
    render_escape_map(&grid, out)?;
    let total = grid.spec.nx * grid.spec.ny;
    println!("{} of {total} cells escape; wrote {}", grid.count(lure_core::escape::MapCell::Escape), out.display());
    Ok(())
}

fn verdict(path: &Path) -> lure_core::Result<()> {
    let cfg = ScenarioConfig::load(path)?;
    let a = &cfg.agents;
    let gamma = a.speed_ratio().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let v = escape_verdict(a.a1, a.a2, a.t1, a.t2, gamma, gamma).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    println!("{v}");
    Ok(())
}

fn check(seed: u64) -> bool {
    let results = selfcheck::run_all(seed);
    for r in &results {
        let mark = if r.passed() { "ok  " } else { "FAIL" };
        println!("{mark} {:<24} samples {:>7}  worst {:.3e}  tol {:.0e}", r.name, r.samples, r.worst, r.tolerance);
    }
    results.iter().all(|r| r.passed())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { scenario, out } => simulate(&scenario, &out_dir(out)),
        Command::EscapeMap { scenario, out } => map(&scenario, &out_dir(out)),
        Command::Verdict { scenario } => verdict(&scenario),
        Command::Check { seed } => {
            return if check(seed) { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
