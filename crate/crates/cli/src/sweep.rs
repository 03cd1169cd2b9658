//! Cartesian parameter sweeps: one file describes a base run plus value axes;
//! every combination becomes its own run directory under one sweep directory.
//!
//! A sweep file looks like:
//!
//! ```toml
//! cap = 64                      # optional limit on the product size
//! out = "period-study"          # sweep directory name
//!
//! [base]                        # an ordinary run file, minus `out`
//! game = "kuhn"
//! algorithm = "pdo"
//!
//! [axes]                        # dotted engine paths (or game./algorithm)
//! "schedule.period" = [10, 100, 1000]
//! seed = [0, 1, 2]
//! ```
//!
//! Sampled-solver bases without a seed axis or a pinned `engine.seed` get an
//! implicit `seed = [0, 1, 2, 3, 4]` axis; exact solvers run one seed.
//! `engine.wall_clock` is forced off so that re-running a sweep reproduces
//! every artifact byte for byte.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rmdo_core::engine::SolverKind;
use serde::Deserialize;

use crate::config::{resolve_run, set_path, ResolvedRun, RunSpec};
use crate::rundir::{execute_run, read_summary};
use crate::CliError;

pub const DEFAULT_CAP: usize = 64;
pub const IMPLICIT_SEEDS: &[i64] = &[0, 1, 2, 3, 4];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub cap: Option<usize>,
    pub out: Option<String>,
    pub base: toml::Table,
    pub axes: toml::Table,
}

/// One expanded combination: directory name, axis assignment, resolved run.
pub struct Combo {
    pub name: String,
    pub assignment: Vec<(String, toml::Value)>,
    pub run: ResolvedRun,
}

pub fn parse_sweep_file(text: &str) -> Result<SweepSpec, CliError> {
    toml::from_str(text).map_err(|e| CliError::config(format!("{e}")))
}

/// Normalizes an axis path: bare engine fields may omit the `engine.` prefix.
fn normalize_path(path: &str) -> Result<String, CliError> {
    if path == "out" || path.starts_with("out.") {
        return Err(CliError::config(
            "the output name cannot be a sweep axis; it is derived from the axes",
        ));
    }
    if path == "algorithm" || path == "game" || path.starts_with("game.") || path.starts_with("engine.") {
        Ok(path.to_string())
    } else {
        Ok(format!("engine.{path}"))
    }
}

/// Axis paths as shown in combination names: the `engine.` prefix is noise.
fn display_path(path: &str) -> &str {
    path.strip_prefix("engine.").unwrap_or(path)
}

fn render_value(value: &toml::Value) -> Result<String, CliError> {
    let text = match value {
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => format!("{f}"),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::String(s) => s.clone(),
        other => {
            return Err(CliError::config(format!(
                "axis values must be scalars, got {other}"
            )))
        }
    };
    if text.is_empty() || text.contains(['/', '\\', ',', '=']) {
        return Err(CliError::config(format!(
            "axis value {text:?} cannot appear in a directory name"
        )));
    }
    Ok(text)
}

/// Expands the cartesian product of the axes over the base run.
pub fn expand(spec: &SweepSpec) -> Result<Vec<Combo>, CliError> {
    let base_spec: RunSpec = toml::Value::Table(spec.base.clone())
        .try_into()
        .map_err(|e| CliError::config(format!("base: {e}")))?;
    if base_spec.out.is_some() {
        return Err(CliError::config(
            "base.out is not allowed; combination names are derived from the axes",
        ));
    }
    let base_run = resolve_run(&base_spec).map_err(|e| match e {
        CliError::Config(m) => CliError::config(format!("base: {m}")),
        other => other,
    })?;

    let mut axes: Vec<(String, Vec<toml::Value>)> = Vec::new();
    for (path, values) in &spec.axes {
        let path = normalize_path(path)?;
        let values = values
            .as_array()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| {
                CliError::config(format!("axis {path:?} must be a non-empty array"))
            })?;
        if axes.iter().any(|(p, _)| *p == path) {
            return Err(CliError::config(format!("axis {path:?} appears twice")));
        }
        axes.push((path, values.clone()));
    }

    let sampled = matches!(base_run.engine.solver, SolverKind::Mccfr { .. });
    let seed_pinned = spec
        .base
        .get("engine")
        .and_then(toml::Value::as_table)
        .is_some_and(|t| t.contains_key("seed"));
    let has_seed_axis = axes.iter().any(|(p, _)| p == "engine.seed");
    if sampled && !has_seed_axis && !seed_pinned {
        axes.push((
            "engine.seed".to_string(),
            IMPLICIT_SEEDS.iter().map(|&s| toml::Value::Integer(s)).collect(),
        ));
    }

    let cap = spec.cap.unwrap_or(DEFAULT_CAP);
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    if total > cap {
        return Err(CliError::config(format!(
            "sweep expands to {total} runs, above the cap of {cap}; raise `cap` to allow this"
        )));
    }

    let mut combos = Vec::with_capacity(total.max(1));
    let mut names = HashSet::new();
    for index in 0..total.max(1) {
        let mut remainder = index;
        let mut assignment = Vec::with_capacity(axes.len());
        // Last axis varies fastest, like nested loops in file order.
        for (path, values) in axes.iter().rev() {
            let value = values[remainder % values.len()].clone();
            remainder /= values.len();
            assignment.push((path.clone(), value));
        }
        assignment.reverse();

        let mut table = spec.base.clone();
        for (path, value) in &assignment {
            set_path(&mut table, path, value.clone())?;
        }
        set_path(&mut table, "engine.wall_clock", toml::Value::Boolean(false))?;

        let mut name = String::new();
        for (path, value) in &assignment {
            if !name.is_empty() {
                name.push(',');
            }
            let _ = write!(name, "{}={}", display_path(path), render_value(value)?);
        }
        if name.is_empty() {
            name.push_str("base");
        }
        if !names.insert(name.clone()) {
            return Err(CliError::config(format!(
                "axes produce duplicate combination {name:?}"
            )));
        }

        let combo_spec: RunSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::config(format!("{name}: {e}")))?;
        let mut run = resolve_run(&combo_spec).map_err(|e| match e {
            CliError::Config(m) => CliError::config(format!("{name}: {m}")),
            other => other,
        })?;
        run.out = name.clone();
        run.effective
            .insert("out".into(), toml::Value::String(name.clone()));
        combos.push(Combo {
            name,
            assignment,
            run,
        });
    }
    Ok(combos)
}

/// Expands, validates, executes every combination concurrently, and writes
/// `index.csv` into the sweep directory.
pub fn execute_sweep(spec: &SweepSpec, root: &Path, force: bool) -> Result<PathBuf, CliError> {
    let combos = expand(spec)?;
    let sweep_name = spec.out.clone().unwrap_or_else(|| "sweep".to_string());
    if sweep_name.is_empty() || sweep_name.contains(['/', '\\']) {
        return Err(CliError::config(format!(
            "sweep output name {sweep_name:?} must be a plain directory name"
        )));
    }
    let dir = root.join(&sweep_name);
    if dir.exists() && !force {
        return Err(CliError::config(format!(
            "sweep directory {} already exists (use --force to overwrite)",
            dir.display()
        )));
    }
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;

    combos
        .par_iter()
        .map(|combo| execute_run(&combo.run, &dir, force, true).map(|_| ()))
        .collect::<Result<Vec<()>, CliError>>()?;

    let axis_paths: Vec<String> = combos
        .first()
        .map(|c| c.assignment.iter().map(|(p, _)| display_path(p).to_string()).collect())
        .unwrap_or_default();
    let mut index = String::from("dir");
    for p in &axis_paths {
        let _ = write!(index, ",{p}");
    }
    index.push_str(",reason,iterations,windows,final_las,nodes_reported\n");
    for combo in &combos {
        let summary = read_summary(&dir.join(&combo.name))?;
        index.push_str(&combo.name);
        for (_, value) in &combo.assignment {
            let _ = write!(index, ",{}", render_value(value)?);
        }
        let s = &summary.summary;
        let _ = writeln!(
            index,
            ",{:?},{},{},{},{}",
            s.reason,
            s.iterations,
            s.windows,
            s.final_las,
            s.counter.reported()
        );
    }
    let index_path = dir.join("index.csv");
    fs::write(&index_path, index)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", index_path.display())))?;
    println!("{}: {} runs", dir.display(), combos.len());
    Ok(dir)
}
