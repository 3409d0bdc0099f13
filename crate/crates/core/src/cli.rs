//! The `hybridreach` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{export_slice, export_trajectory, parse_config, parse_fixed, read_result, write_result, RunConfig};
use crate::model::HybridSystem;
use crate::policy::{query, rollout, DisturbancePolicy, RolloutConfig};
use crate::solver::{solve, SolveResult};
use crate::systems::ModelSpec;

pub const THREADS_ENV: &str = "HYBRIDREACH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hybridreach", version, about = "Reachability for hybrid systems on a grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the value functions described by a config and store them.
    Solve {
        config: PathBuf,
        /// Result file; defaults to `output.result` from the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate the closed loop from the config's `rollout.*` start.
    Rollout {
        config: PathBuf,
        #[arg(long)]
        result: PathBuf,
        /// Trajectory CSV; defaults to `output.trajectory`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print value, membership, optimal inputs and best switch at a state.
    Query {
        result: PathBuf,
        /// Comma-separated state.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Mode name or index.
        #[arg(long)]
        mode: String,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Export a 1D or 2D cut of one mode's value function as CSV.
    Slice {
        result: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Pinned dimension as `dim=value`; repeatable.
        #[arg(long = "fix", allow_hyphen_values = true)]
        fix: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Parse a config and check the model against its grid.
    Validate { config: PathBuf },
}

/// Runs the CLI on `args` (including the program name), writing normal
/// output to `out`, and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut String) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(out, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Ok(v) = std::env::var(THREADS_ENV) {
        cfg.solver.threads = v
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?;
    }
    Ok(cfg)
}

fn system_of(result: &SolveResult) -> Result<HybridSystem> {
    ModelSpec::from_params(&result.meta.model, &result.meta.model_params)?.build()
}

fn mode_index(result: &SolveResult, spec: &str) -> Result<usize> {
    if let Some(i) = result.meta.mode_names.iter().position(|n| n == spec) {
        return Ok(i);
    }
    match spec.parse::<usize>() {
        Ok(i) if i < result.mode_count() => Ok(i),
        _ => Err(Error::usage(format!(
            "unknown mode {spec:?}; modes are {}",
            result.meta.mode_names.join(", ")
        ))),
    }
}

fn parse_state(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::usage(format!("bad state component {p:?}"))))
        .collect()
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn dispatch(command: Command, out: &mut String) -> Result<i32> {
    match command {
        Command::Solve { config, output } => {
            let cfg = load_config(&config)?;
            let path = output
                .or(cfg.output.result.clone())
                .ok_or_else(|| Error::usage("no result path: pass -o or set output.result"))?;
            let sys = cfg.model.build()?;
            let result = solve(&sys, &cfg.grid, &cfg.solver)?;
            write_result(&result, &path)?;
            let m = &result.meta;
            let _ = writeln!(
                out,
                "solved {} over {} nodes, {} modes: {} steps of {:e} s in {:.3} s -> {}",
                m.model,
                cfg.grid.len(),
                result.mode_count(),
                m.steps,
                m.dt,
                m.wall_time,
                path.display()
            );
            Ok(0)
        }
        Command::Rollout { config, result, output } => {
            let cfg = load_config(&config)?;
            let spec = cfg.rollout.clone().ok_or_else(|| Error::usage("config has no rollout.x0"))?;
            let path = output
                .or(cfg.output.trajectory.clone())
                .ok_or_else(|| Error::usage("no trajectory path: pass -o or set output.trajectory"))?;
            let res = read_result(&result)?;
            let sys = system_of(&res)?;
            let q0 = mode_index(&res, &spec.mode)?;
            let rc = RolloutConfig {
                dt_sim: spec.dt_sim,
                disturbance: spec.disturbance.parse::<DisturbancePolicy>()?,
                margin: spec.margin,
            };
            let traj = rollout(&res, &sys, &spec.x0, q0, spec.t0, &rc)?;
            export_trajectory(&traj, &path)?;
            let names: Vec<&str> = traj.mode_sequence().iter().map(|&q| res.meta.mode_names[q].as_str()).collect();
            let _ = writeln!(out, "status={}", traj.status);
            let _ = writeln!(out, "modes={}", names.join(">"));
            let _ = writeln!(out, "records={}", traj.records.len());
            Ok(0)
        }
        Command::Query { result, x, mode, t } => {
            let res = read_result(&result)?;
            let sys = system_of(&res)?;
            let q = mode_index(&res, &mode)?;
            let x = parse_state(&x)?;
            let pq = query(&res, &sys, &x, q, t, res.meta.config.role)?;
            let _ = writeln!(out, "value={}", pq.value);
            let _ = writeln!(out, "member={}", pq.value <= 0.0);
            let _ = writeln!(out, "in_invariant={}", pq.in_invariant);
            let _ = writeln!(out, "u_star={}", fmt_vec(&pq.u_star));
            let _ = writeln!(out, "d_star={}", fmt_vec(&pq.d_star));
            match pq.best_switch {
                Some(s) => {
                    let _ = writeln!(out, "best_switch={} ({})", s, sys.switches()[s].name);
                    let _ = writeln!(out, "switch_value={}", pq.switch_value);
                }
                None => {
                    let _ = writeln!(out, "best_switch=none");
                }
            }
            Ok(0)
        }
        Command::Slice { result, mode, t, fix, output } => {
            let res = read_result(&result)?;
            let q = mode_index(&res, &mode)?;
            let mut fixed = Vec::new();
            for f in &fix {
                fixed.extend(parse_fixed(f).map_err(Error::Usage)?);
            }
            export_slice(&res, q, t, &fixed, &output)?;
            let _ = writeln!(out, "wrote {}", output.display());
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let sys = cfg.model.build()?;
            let report = sys.validate(&cfg.grid);
            let _ = write!(out, "{report}");
            if report.is_valid() {
                let _ = writeln!(out, "ok: {} with {} modes on {} nodes", sys.name(), sys.mode_count(), cfg.grid.len());
                Ok(0)
            } else {
                Ok(2)
            }
        }
    }
}
