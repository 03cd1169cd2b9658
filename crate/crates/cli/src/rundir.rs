//! Run directories: executing a resolved run and reading its artifacts back.
//!
//! Every run directory contains:
//! - `config.toml` — the complete effective configuration (provenance),
//! - `metrics.csv` — one row per evaluation point (schema below),
//! - `expansions.csv` — one row per population-expansion attempt,
//! - `policy.json` — the final window average expanded to the full game,
//! - `snapshot.json` — resumable engine state,
//! - `summary.json` — end-of-run totals.
//!
//! `metrics.csv` columns, fixed in this order: `iteration, nodes_rm,
//! nodes_br, nodes_eval, nodes_reported, exploitability_las,
//! exploitability_oas, window_j, sum_infosets, population_size, wall_ms`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rmdo_core::engine::{Engine, EngineOutput, Snapshot, StopCondition};
use rmdo_core::games::{build_game, GameConfig};
use rmdo_core::runlog::{RunLog, RunRecord, RunSummary};
use serde::{Deserialize, Serialize};

use crate::config::ResolvedRun;
use crate::CliError;

pub const METRICS_HEADER: &str = "iteration,nodes_rm,nodes_br,nodes_eval,nodes_reported,\
exploitability_las,exploitability_oas,window_j,sum_infosets,population_size,wall_ms";

/// `summary.json` contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    pub game: GameConfig,
    pub algorithm: Option<String>,
    pub summary: RunSummary,
}

pub fn metrics_csv(records: &[RunRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.nodes_rm,
            r.nodes_br,
            r.nodes_eval,
            r.nodes_reported,
            r.exploitability_las,
            r.exploitability_oas,
            r.window,
            r.sum_infosets,
            r.population_size,
            r.wall_ms
        );
    }
    out
}

fn expansions_csv(log: &RunLog) -> String {
    let mut out = String::from("iteration,window,trigger,gap,added,population_size\n");
    for e in &log.expansions {
        let trigger = match e.trigger {
            rmdo_core::runlog::ExpansionTrigger::Periodic => "periodic",
            rmdo_core::runlog::ExpansionTrigger::Threshold => "threshold",
            rmdo_core::runlog::ExpansionTrigger::EarlyStop => "early_stop",
        };
        let gap = e.gap.map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.iteration, e.window, trigger, gap, e.added, e.population_size
        );
    }
    out
}

fn io_err(what: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::config(format!("cannot {what} {}: {e}", path.display()))
}

/// Runs a resolved configuration and writes its artifacts under
/// `root/<run.out>`. The engine is constructed (and the configuration
/// thereby validated) before anything is created on disk.
pub fn execute_run(
    run: &ResolvedRun,
    root: &Path,
    force: bool,
    quiet: bool,
) -> Result<PathBuf, CliError> {
    let game = build_game(&run.game).map_err(|e| CliError::config(e.to_string()))?;
    let engine = Engine::new(game, run.engine).map_err(CliError::config)?;
    let dir = root.join(&run.out);
    if dir.exists() && !force {
        return Err(CliError::config(format!(
            "output directory {} already exists (use --force to overwrite)",
            dir.display()
        )));
    }
    let output = engine.run();
    write_artifacts(run, &dir, &output)?;
    if !quiet {
        let s = &output.log.summary;
        println!(
            "{}: {:?} after {} iterations, {} windows, exploitability {:.3e}, {} reported nodes",
            dir.display(),
            s.reason,
            s.iterations,
            s.windows,
            s.final_las,
            s.counter.reported()
        );
    }
    Ok(dir)
}

pub fn write_artifacts(
    run: &ResolvedRun,
    dir: &Path,
    output: &EngineOutput,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err("create", dir, e))?;
    let write = |name: &str, contents: String| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err("write", &path, e))
    };
    write(
        "config.toml",
        toml::to_string_pretty(&run.effective)
            .map_err(|e| CliError::config(format!("serialize config: {e}")))?,
    )?;
    write("metrics.csv", metrics_csv(&output.log.records))?;
    write("expansions.csv", expansions_csv(&output.log))?;
    fn json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
        serde_json::to_string_pretty(v)
            .map_err(|e| CliError::config(format!("serialize artifact: {e}")))
    }
    write("policy.json", json(&output.snapshot.las_policy())?)?;
    write("snapshot.json", json(&output.snapshot)?)?;
    write(
        "summary.json",
        json(&SummaryFile {
            game: run.game.clone(),
            algorithm: run.algorithm.clone(),
            summary: output.log.summary.clone(),
        })?,
    )?;
    Ok(())
}

/// One parsed `metrics.csv` row; only the columns reports consume.
#[derive(Debug, Clone, Copy)]
pub struct MetricsRow {
    pub nodes_reported: u64,
    pub exploitability_las: f64,
}

pub fn read_metrics(dir: &Path) -> Result<Vec<MetricsRow>, CliError> {
    let path = dir.join("metrics.csv");
    let text = fs::read_to_string(&path).map_err(|e| io_err("read", &path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::config(format!("{}: empty metrics file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let index = |name: &str| -> Result<usize, CliError> {
        columns.iter().position(|c| *c == name).ok_or_else(|| {
            CliError::config(format!("{}: missing column {name:?}", path.display()))
        })
    };
    let (c_nodes, c_las) = (index("nodes_reported")?, index("exploitability_las")?);
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let field = |i: usize| -> Result<&str, CliError> {
            fields.get(i).copied().ok_or_else(|| {
                CliError::config(format!("{}: short row at line {}", path.display(), lineno + 2))
            })
        };
        let parse_err = |e: &dyn std::fmt::Display| {
            CliError::config(format!("{}: line {}: {e}", path.display(), lineno + 2))
        };
        rows.push(MetricsRow {
            nodes_reported: field(c_nodes)?.parse().map_err(|e| parse_err(&e))?,
            exploitability_las: field(c_las)?.parse().map_err(|e| parse_err(&e))?,
        });
    }
    Ok(rows)
}

pub fn read_summary(dir: &Path) -> Result<SummaryFile, CliError> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err("read", &path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn read_config(dir: &Path) -> Result<ResolvedRun, CliError> {
    let path = dir.join("config.toml");
    let text = fs::read_to_string(&path).map_err(|e| io_err("read", &path, e))?;
    crate::config::parse_run_file(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn read_snapshot(dir: &Path) -> Result<Snapshot, CliError> {
    let path = dir.join("snapshot.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err("read", &path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn read_policy(dir: &Path) -> Result<rmdo_core::profile::BehaviorPolicy, CliError> {
    let path = dir.join("policy.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err("read", &path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Resumes a run from `from`'s snapshot, optionally replacing the stop
/// condition, and writes the continuation into `root/<out>`.
pub fn execute_resume(
    from: &Path,
    stop: Option<StopCondition>,
    out: Option<String>,
    root: &Path,
    force: bool,
    quiet: bool,
) -> Result<PathBuf, CliError> {
    let mut run = read_config(from)?;
    let snapshot = read_snapshot(from)?;
    let mut engine_cfg = *snapshot.config();
    if let Some(stop) = stop {
        engine_cfg.stop = stop;
    }
    let game = build_game(&run.game).map_err(|e| CliError::config(e.to_string()))?;
    let engine = Engine::resume(game, snapshot, stop).map_err(CliError::config)?;
    run.out = out.unwrap_or_else(|| {
        let base = from
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| run.out.clone());
        format!("{base}.resume")
    });
    run.engine = engine_cfg;
    run.effective.insert(
        "out".into(),
        toml::Value::String(run.out.clone()),
    );
    run.effective.insert(
        "engine".into(),
        crate::config::canonical_value(&run.engine)?,
    );
    let dir = root.join(&run.out);
    if dir.exists() && !force {
        return Err(CliError::config(format!(
            "output directory {} already exists (use --force to overwrite)",
            dir.display()
        )));
    }
    let output = engine.run();
    write_artifacts(&run, &dir, &output)?;
    if !quiet {
        let s = &output.log.summary;
        println!(
            "{}: resumed from {}, {:?} after {} total iterations, exploitability {:.3e}",
            dir.display(),
            from.display(),
            s.reason,
            s.iterations,
            s.final_las
        );
    }
    Ok(dir)
}
