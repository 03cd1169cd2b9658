//! `rmdo` — benchmark runner and report generator for the `rmdo-core`
//! solvers.
//!
//! Subcommands: `run`, `sweep`, `support`, `nodes-to-target`, `plot`,
//! `enumerate`. Exit codes: 0 on success, 2 on configuration errors, 3 when
//! a requested exploitability target was not reached.
//!
//! Run directories land under `--out-root`, the `RMDO_OUT_ROOT` environment
//! variable, or `./runs`, in that order of precedence.

mod config;
mod report;
mod rundir;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmdo_core::Player;

/// Error channel behind the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, bad input files, or I/O failure — exit code 2.
    Config(String),
    /// A report precondition ("run reached its target") failed — exit code 3.
    TargetNotReached(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn target_not_reached(message: impl Into<String>) -> Self {
        CliError::TargetNotReached(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::TargetNotReached(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::TargetNotReached(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

pub const OUT_ROOT_ENV: &str = "RMDO_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "rmdo",
    version,
    about = "Tabular counterfactual-regret solvers over restricted action populations",
    propagate_version = true
)]
struct Cli {
    /// Directory that holds run directories (default: $RMDO_OUT_ROOT or ./runs).
    #[arg(long, global = true, value_name = "DIR")]
    out_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run described by a TOML config file.
    Run {
        /// Run configuration file (omit when resuming).
        config: Option<PathBuf>,
        /// Resume from an existing run directory's snapshot instead.
        #[arg(long, value_name = "RUN_DIR", conflicts_with = "config")]
        resume: Option<PathBuf>,
        /// Overwrite the output directory if it exists.
        #[arg(long)]
        force: bool,
        /// Suppress the end-of-run summary line.
        #[arg(long)]
        quiet: bool,
        /// Output directory name (under the output root).
        #[arg(long, value_name = "NAME")]
        out: Option<String>,
        /// Override the stop condition's exploitability target.
        #[arg(long, value_name = "EPS")]
        target: Option<f64>,
        /// Override the stop condition's iteration limit.
        #[arg(long, value_name = "N")]
        max_iterations: Option<u64>,
        /// Override the stop condition's reported-node budget.
        #[arg(long, value_name = "N")]
        node_budget: Option<u64>,
    },
    /// Execute the cartesian product of a base run and parameter axes.
    Sweep {
        /// Sweep configuration file.
        config: PathBuf,
        /// Overwrite the sweep directory if it exists.
        #[arg(long)]
        force: bool,
    },
    /// Report how much of the full game's action menus a finished run's
    /// final average policy keeps at positive probability.
    Support {
        /// Run directory.
        dir: PathBuf,
        /// Probabilities at or below this count as unsupported.
        #[arg(long, value_name = "P")]
        threshold: Option<f64>,
        /// Require this exploitability instead of the run's own target.
        #[arg(long, value_name = "EPS")]
        target: Option<f64>,
        /// Restrict the report to one player (1 or 2).
        #[arg(long, value_name = "P")]
        player: Option<u8>,
    },
    /// Tabulate the reported nodes each run needed to reach exploitability
    /// targets; seed variants of one configuration aggregate as mean (std).
    NodesToTarget {
        /// Run directories.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Exploitability target; repeat for more columns.
        #[arg(long = "target", value_name = "EPS", required = true)]
        targets: Vec<f64>,
        /// Also write the table as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Emit plot data: exploitability against reported nodes, log-log.
    Plot {
        /// Run directories, one series each.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Output path prefix; writes <prefix>.csv and <prefix>.json.
        #[arg(long, default_value = "plot", value_name = "PREFIX")]
        out: PathBuf,
        /// Keep at most this many points per series (0 keeps all).
        #[arg(long, default_value_t = 200, value_name = "N")]
        points: usize,
        /// Also render <prefix>.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Print size statistics of a game.
    Enumerate {
        /// Game name (kuhn, large_kuhn, leduc, leduc_dummy, blotto).
        game: String,
        /// Game parameter, as key=value; repeatable.
        #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let root = out_root(cli.out_root);
    match cli.command {
        Command::Run {
            config,
            resume,
            force,
            quiet,
            out,
            target,
            max_iterations,
            node_budget,
        } => {
            let override_stop = |stop: &mut rmdo_core::engine::StopCondition| {
                if let Some(t) = target {
                    stop.target_exploitability = Some(t);
                }
                if let Some(n) = max_iterations {
                    stop.max_iterations = Some(n);
                }
                if let Some(n) = node_budget {
                    stop.node_budget = Some(n);
                }
            };
            match (config, resume) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        CliError::config(format!("cannot read {}: {e}", path.display()))
                    })?;
                    let mut run = config::parse_run_file(&text)
                        .map_err(|e| match e {
                            CliError::Config(m) => {
                                CliError::config(format!("{}: {m}", path.display()))
                            }
                            other => other,
                        })?;
                    override_stop(&mut run.engine.stop);
                    run.engine.validate().map_err(CliError::config)?;
                    if let Some(out) = out {
                        run.out = out;
                    }
                    run.effective
                        .insert("out".into(), toml::Value::String(run.out.clone()));
                    run.effective
                        .insert("engine".into(), config::canonical_value(&run.engine)?);
                    rundir::execute_run(&run, &root, force, quiet)?;
                    Ok(())
                }
                (None, Some(from)) => {
                    let stop = if target.is_some()
                        || max_iterations.is_some()
                        || node_budget.is_some()
                    {
                        let snapshot = rundir::read_snapshot(&from)?;
                        let mut stop = snapshot.config().stop;
                        override_stop(&mut stop);
                        Some(stop)
                    } else {
                        None
                    };
                    rundir::execute_resume(&from, stop, out, &root, force, quiet)?;
                    Ok(())
                }
                (None, None) => Err(CliError::config(
                    "give a run configuration file or --resume <RUN_DIR>",
                )),
                (Some(_), Some(_)) => unreachable!("clap rejects config together with --resume"),
            }
        }
        Command::Sweep { config, force } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                CliError::config(format!("cannot read {}: {e}", config.display()))
            })?;
            let spec = sweep::parse_sweep_file(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::config(format!("{}: {m}", config.display())),
                other => other,
            })?;
            sweep::execute_sweep(&spec, &root, force)?;
            Ok(())
        }
        Command::Support {
            dir,
            threshold,
            target,
            player,
        } => {
            let player = match player {
                None => None,
                Some(1) => Some(Player::One),
                Some(2) => Some(Player::Two),
                Some(other) => {
                    return Err(CliError::config(format!(
                        "--player must be 1 or 2, got {other}"
                    )))
                }
            };
            report::cmd_support(&dir, threshold, target, player)
        }
        Command::NodesToTarget { dirs, targets, csv } => {
            report::cmd_nodes_to_target(&dirs, &targets, csv.as_deref())
        }
        Command::Plot {
            dirs,
            out,
            points,
            svg,
        } => report::cmd_plot(&dirs, &out, points, svg),
        Command::Enumerate { game, params } => report::cmd_enumerate(&game, &params),
    }
}
