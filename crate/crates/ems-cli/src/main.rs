//! `ems`: scenario-driven dispatch runs.
//!
//! Exit codes: 0 success, 1 invalid scenario (the message names the
//! offending field), 2 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ems_cli::artifacts::{
    peak_rss_mib, plan_csv, reset_peak_rss, solves_csv, summary_csv, summary_rows, tune_log_csv,
    write_artifact,
};
use ems_cli::scenario::{Scenario, ScenarioFile};
use ems_core::formulation::ObjectiveWeights;
use ems_core::scheduler::{compare_f1, run_fho_with, run_rho_with, DispatchPlan, RunOptions};
use ems_core::tuner::{tune_mission_with, TunerConfig};

/// Reference horizon length used when neither the scenario nor a flag
/// says otherwise.
const DEFAULT_NP: usize = 60;

#[derive(Parser)]
#[command(name = "ems", version, about = "Shipboard energy management: generator/storage dispatch with load shedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report the resolved dimensions.
    Validate { scenario: PathBuf },
    /// Receding-horizon run: re-solve each step, apply the first step.
    Rho(RunArgs),
    /// Fixed-horizon run: one solve over the whole mission, open loop.
    Fho(RunArgs),
    /// Run both drivers and compare service, timing and memory.
    Compare(RunArgs),
    /// Gradient-descent search over the objective weights.
    Tune(TuneArgs),
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Horizon length in steps (default: scenario's rho block, else 60).
    #[arg(long)]
    np: Option<usize>,
    /// Control interval override in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Branch-and-bound relative optimality gap.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    /// Reserved for stochastic scenario features; echoed into the summary.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Objective weights as `w1,w2,w3` (default: scenario's weights block).
    #[arg(long, value_parser = parse_omega)]
    omega: Option<[f64; 3]>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Descent step size.
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    /// Stopping threshold on the composite decrease.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

fn parse_omega(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated values: w1,w2,w3".into());
    }
    let mut out = [0.0; 3];
    for (k, p) in parts.iter().enumerate() {
        out[k] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("weight {}: {e}", k + 1))?;
        if !(out[k].is_finite() && out[k] >= 0.0) {
            return Err(format!("weight {} must be finite and >= 0", k + 1));
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Scenario(e)) => {
            eprintln!("error: invalid scenario: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Scenario(ems_cli::ScenarioError),
    Solver(String),
    Io(std::io::Error),
}

impl From<ems_cli::ScenarioError> for CliError {
    fn from(e: ems_cli::ScenarioError) -> Self {
        CliError::Scenario(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn load(args: &RunArgs) -> Result<(Scenario, ObjectiveWeights, usize, RunOptions), CliError> {
    let file = ScenarioFile::load(&args.scenario)?;
    let sc = file.resolve(args.dt, args.np)?;
    let weights = match args.omega {
        Some([w1, w2, w3]) => ObjectiveWeights::new(w1, w2, w3),
        None => sc.weights,
    };
    let np = sc.np.unwrap_or(DEFAULT_NP);
    let opts = RunOptions {
        milp: ems_core::milp::MilpOptions { gap_tol: args.gap, ..Default::default() },
        events: sc.events.clone(),
        ..RunOptions::default()
    };
    Ok((sc, weights, np, opts))
}

fn solver_err(e: ems_core::scheduler::ScheduleError) -> CliError {
    CliError::Solver(e.to_string())
}

fn report_run(label: &str, plan: &DispatchPlan, sys: &ems_core::domain::SystemSpec, dt: f64) {
    println!(
        "{label}: {} steps, {} solves, operability {:.4}, total solve time {:.3} s, max step {:.3} s (budget {dt} s)",
        plan.controls.len(),
        plan.reports.len(),
        ems_core::scheduler::operability(plan, sys),
        plan.total_wall_time(),
        plan.max_step_wall_time(),
    );
    if !plan.replay_violations.is_empty() {
        println!(
            "{label}: {} constraint violations when replayed against the disturbed system",
            plan.replay_violations.len()
        );
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { scenario } => {
            let file = ScenarioFile::load(&scenario)?;
            let sc = file.resolve(None, None)?;
            println!(
                "ok: {} loads, {} generators, {} ESS, {} steps of {} s (beta {})",
                sc.system.n_loads(),
                sc.system.n_gens(),
                sc.system.n_ess(),
                sc.system.mission_steps,
                sc.system.dt,
                sc.system.beta,
            );
            Ok(())
        }

        Command::Rho(args) => {
            let (sc, weights, np, opts) = load(&args)?;
            let plan =
                run_rho_with(&sc.system, &sc.trace, &weights, np, &opts).map_err(solver_err)?;
            report_run("rho", &plan, &sc.system, sc.system.dt);
            let mut rows = summary_rows("rho", &plan, &sc.system);
            rows.push(("np".into(), np.to_string()));
            rows.push(("seed".into(), args.seed.to_string()));
            write_artifact(&args.out_dir, "plan.csv", &plan_csv(&plan, &sc.system))?;
            write_artifact(&args.out_dir, "solves.csv", &solves_csv(&plan))?;
            write_artifact(&args.out_dir, "summary.csv", &summary_csv(&rows))?;
            println!("artifacts in {}", args.out_dir.display());
            Ok(())
        }

        Command::Fho(args) => {
            let (sc, weights, _np, opts) = load(&args)?;
            let plan = run_fho_with(&sc.system, &sc.trace, &weights, &opts).map_err(solver_err)?;
            report_run("fho", &plan, &sc.system, sc.system.dt);
            let mut rows = summary_rows("fho", &plan, &sc.system);
            rows.push(("seed".into(), args.seed.to_string()));
            write_artifact(&args.out_dir, "plan.csv", &plan_csv(&plan, &sc.system))?;
            write_artifact(&args.out_dir, "solves.csv", &solves_csv(&plan))?;
            write_artifact(&args.out_dir, "summary.csv", &summary_csv(&rows))?;
            println!("artifacts in {}", args.out_dir.display());
            Ok(())
        }

        Command::Compare(args) => {
            let (sc, weights, np, opts) = load(&args)?;

            // Run the heavy fixed-horizon pass first so each driver's peak
            // memory can be read (and reset) separately.
            reset_peak_rss();
            let t0 = Instant::now();
            let fho = run_fho_with(&sc.system, &sc.trace, &weights, &opts).map_err(solver_err)?;
            let fho_wall = t0.elapsed().as_secs_f64();
            let fho_rss = peak_rss_mib();

            let rss_reset_ok = reset_peak_rss();
            let t0 = Instant::now();
            let rho =
                run_rho_with(&sc.system, &sc.trace, &weights, np, &opts).map_err(solver_err)?;
            let rho_wall = t0.elapsed().as_secs_f64();
            let rho_rss = peak_rss_mib();

            report_run("fho", &fho, &sc.system, sc.system.dt);
            report_run("rho", &rho, &sc.system, sc.system.dt);
            let delta_f1 = compare_f1(&fho, &rho, &sc.system);
            println!("delta_f1 (fho vs rho): {:+.6e}", delta_f1);
            println!("wall time: fho {fho_wall:.3} s, rho {rho_wall:.3} s");
            match (fho_rss, rho_rss) {
                (Some(f), Some(r)) if rss_reset_ok => {
                    println!("peak rss: fho {f:.1} MiB, rho {r:.1} MiB");
                }
                (Some(f), Some(r)) => {
                    println!(
                        "peak rss: fho {f:.1} MiB, rho {r:.1} MiB (counter not resettable; rho value includes fho)"
                    );
                }
                _ => println!("peak rss: not available on this platform"),
            }

            let mut rows = summary_rows("fho", &fho, &sc.system);
            rows.extend(summary_rows("rho", &rho, &sc.system));
            rows.push(("delta_f1".into(), format!("{delta_f1}")));
            rows.push(("wall_time_fho_s".into(), format!("{fho_wall}")));
            rows.push(("wall_time_rho_s".into(), format!("{rho_wall}")));
            if let Some(f) = fho_rss {
                rows.push(("peak_rss_fho_mib".into(), format!("{f}")));
            }
            if let Some(r) = rho_rss {
                rows.push(("peak_rss_rho_mib".into(), format!("{r}")));
            }
            rows.push(("np".into(), np.to_string()));
            rows.push(("seed".into(), args.seed.to_string()));
            write_artifact(&args.out_dir, "plan_fho.csv", &plan_csv(&fho, &sc.system))?;
            write_artifact(&args.out_dir, "plan_rho.csv", &plan_csv(&rho, &sc.system))?;
            write_artifact(&args.out_dir, "solves_fho.csv", &solves_csv(&fho))?;
            write_artifact(&args.out_dir, "solves_rho.csv", &solves_csv(&rho))?;
            write_artifact(&args.out_dir, "summary.csv", &summary_csv(&rows))?;
            println!("artifacts in {}", args.out_dir.display());
            Ok(())
        }

        Command::Tune(args) => {
            let (sc, weights, np, opts) = load(&args.run)?;
            let cfg = TunerConfig {
                gamma: args.gamma,
                epsilon: args.epsilon,
                max_iters: args.max_iters,
                initial_omega: weights,
                ..TunerConfig::default()
            };
            let outcome = tune_mission_with(&sc.system, &sc.trace, &cfg, np, &opts)
                .map_err(|e| CliError::Solver(e.to_string()))?;
            let w = outcome.omega.as_array();
            println!(
                "tuned omega = [{:.6}, {:.6}, {:.6}] after {} evaluations (f_bar {:.6}, {})",
                w[0],
                w[1],
                w[2],
                outcome.log.len(),
                outcome.f_bar,
                if outcome.converged { "converged" } else { "iteration cap" },
            );
            write_artifact(&args.run.out_dir, "tune_log.csv", &tune_log_csv(&outcome.log))?;
            println!("artifacts in {}", args.run.out_dir.display());
            Ok(())
        }
    }
}
