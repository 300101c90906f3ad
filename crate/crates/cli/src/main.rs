use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use flock_core::experiments::{self, OracleCase, Suite};
use flock_core::{io, simulator, RunReport};

/// Constraint-driven flocking: run scenarios and check the flock's properties.
#[derive(Parser)]
#[command(name = "flock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file (or every `.toml` file in a directory) and write the trajectory
    /// CSV, event log and report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Velocity disagreement below which the flock counts as being in consensus.
        #[arg(long, default_value_t = experiments::CONSENSUS_TOL)]
        consensus_tol: f64,
    },
    /// Run a built-in property suite.
    Verify {
        #[arg(value_parser = clap::value_parser!(Suite))]
        suite: Suite,
    },
    /// Compare the planner with the closed-form boundary-value solution.
    Oracle {
        #[arg(long, default_value_t = 20)]
        cases: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenario,
            out,
            consensus_tol,
        } => cmd_run(&scenario, &out, consensus_tol),
        Command::Verify { suite } => cmd_verify(suite),
        Command::Oracle { cases, seed } => cmd_oracle(cases, seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_run(scenario: &Path, out: &Path, consensus_tol: f64) -> anyhow::Result<bool> {
    if scenario.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(scenario)
            .with_context(|| format!("reading {}", scenario.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("no .toml scenarios in {}", scenario.display());
        }
        let mut clean = true;
        for file in files {
            let stem = file
                .file_stem()
                .map(|s| s.to_os_string())
                .unwrap_or_default();
            clean &= run_one(&file, &out.join(stem), consensus_tol)?;
        }
        return Ok(clean);
    }
    run_one(scenario, out, consensus_tol)
}

fn run_one(scenario: &Path, out: &Path, consensus_tol: f64) -> anyhow::Result<bool> {
    let spec =
        io::load_scenario(scenario).with_context(|| format!("scenario {}", scenario.display()))?;
    log::info!(
        "running {} ({} agents, {} mode)",
        scenario.display(),
        spec.config.n_agents,
        spec.topology_mode
    );
    let log = simulator::run(&spec)?;
    let report = RunReport::from_log(&log, consensus_tol);
    io::write_run_outputs(out, &log, &report)?;
    print!("{}", io::report_text(&report));
    if report.safety_failures > 0 {
        eprintln!(
            "{}: safety failure, {} pair-steps closer than 2R",
            scenario.display(),
            report.safety_failures
        );
        return Ok(false);
    }
    Ok(true)
}

fn cmd_verify(suite: Suite) -> anyhow::Result<bool> {
    let checks = experiments::run_suite(suite, |c| println!("{c}"))?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(failed == 0)
}

fn cmd_oracle(cases: usize, seed: u64) -> anyhow::Result<bool> {
    let battery = experiments::oracle_battery(cases, seed)?;
    println!(
        "{:<14} {:>14} {:>14} {:>11} {:>14} {:>9}",
        "case", "analytic", "planner", "cost gap", "L-inf error", "status"
    );
    for c in &battery {
        println!(
            "{:<14} {:>14.8} {:>14.8} {:>11.3e} {:>14.3e} {:>9}",
            c.name,
            c.analytic_cost,
            c.planner_cost,
            c.cost_gap,
            c.control_error,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    let summary = experiments::check_oracle(&battery);
    println!(
        "tolerances: cost gap <= {}, control error <= {} u_max",
        OracleCase::COST_TOL,
        OracleCase::CONTROL_TOL
    );
    println!("{summary}");
    Ok(summary.passed)
}
