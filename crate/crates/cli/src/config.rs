//! Run configuration files: a TOML schema over the engine's own types, plus
//! named algorithm presets and exact unknown-key diagnostics.
//!
//! A run file looks like:
//!
//! ```toml
//! game = "kuhn"              # or { name = "blotto", params = { coins = 20 } }
//! algorithm = "pdo"          # optional preset, see [`preset_engine`]
//! out = "kuhn-pdo"           # optional run-directory name
//!
//! [engine.schedule]          # any [engine.*] override wins over the preset
//! kind = "periodic"
//! period = 50
//! ```
//!
//! Without a preset, `[engine]` must describe the whole engine configuration.

use rmdo_core::engine::{EngineConfig, LogCadence, SolverKind, StopCondition};
use rmdo_core::games::GameConfig;
use rmdo_core::mccfr::SamplerParams;
use rmdo_core::profile::WeightScheme;
use rmdo_core::restricted::WarmStart;
use rmdo_core::schedule::{AdaptiveParams, EarlyStop, Schedule};
use serde::Deserialize;

use crate::CliError;

/// A parsed but unresolved run file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub game: toml::Value,
    pub algorithm: Option<String>,
    pub out: Option<String>,
    pub engine: Option<toml::Table>,
}

/// A fully validated run: game, engine configuration, and output naming.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub game: GameConfig,
    pub engine: EngineConfig,
    pub algorithm: Option<String>,
    pub out: String,
    /// The complete effective configuration, written into the run directory.
    pub effective: toml::Table,
}

pub const PRESETS: &[&str] = &["none", "xodo", "xdo", "pdo", "adado", "spdo", "sado"];

/// The engine configuration a named algorithm preset stands for. Adaptive
/// presets leave `target_eps` as NaN; [`resolve_run`] fills it from the stop
/// condition unless the file overrides it.
pub fn preset_engine(name: &str) -> Option<EngineConfig> {
    let exact = SolverKind::Cfr {
        scheme: WeightScheme::Linear,
    };
    let sampled = SolverKind::Mccfr {
        params: SamplerParams::default(),
        scheme: WeightScheme::Uniform,
    };
    let base = EngineConfig {
        solver: exact,
        schedule: Schedule::Never,
        warm_start: WarmStart::Reset,
        stop: StopCondition {
            max_iterations: Some(10_000_000),
            node_budget: None,
            target_exploitability: Some(1e-3),
        },
        log: LogCadence::GeometricNodes { factor: 1.25 },
        seed: 0,
        wall_clock: false,
    };
    Some(match name {
        "none" => base,
        "xodo" => EngineConfig {
            schedule: Schedule::EveryIteration,
            ..base
        },
        "xdo" => EngineConfig {
            schedule: Schedule::Threshold {
                eps0: 0.5,
                check_every: 10,
            },
            ..base
        },
        "pdo" => EngineConfig {
            schedule: Schedule::Periodic { period: 100 },
            ..base
        },
        "adado" => EngineConfig {
            schedule: Schedule::Adaptive(AdaptiveParams {
                target_eps: f64::NAN,
                alpha: 1.0,
                early_stop: Some(EarlyStop {
                    tolerance: 1e-4,
                    check_every: 100,
                }),
            }),
            ..base
        },
        "spdo" => EngineConfig {
            solver: sampled,
            schedule: Schedule::Periodic { period: 100 },
            ..base
        },
        "sado" => EngineConfig {
            solver: sampled,
            schedule: Schedule::SampledAdaptive {
                target_eps: f64::NAN,
            },
            ..base
        },
        _ => return None,
    })
}

/// Parses a run file and resolves presets, overrides, and defaults.
pub fn parse_run_file(text: &str) -> Result<ResolvedRun, CliError> {
    let spec: RunSpec = toml::from_str(text).map_err(|e| CliError::config(format!("{e}")))?;
    resolve_run(&spec)
}

pub fn resolve_run(spec: &RunSpec) -> Result<ResolvedRun, CliError> {
    let game = parse_game(&spec.game)?;

    let mut engine_value = match &spec.algorithm {
        Some(name) => {
            let preset = preset_engine(name).ok_or_else(|| {
                CliError::config(format!(
                    "unknown algorithm {name:?}; known presets: {}",
                    PRESETS.join(", ")
                ))
            })?;
            canonical_value(&preset)?
        }
        None => toml::Value::Table(toml::Table::new()),
    };
    if let Some(over) = &spec.engine {
        merge(&mut engine_value, &toml::Value::Table(over.clone()));
    }
    fill_adaptive_target(&mut engine_value)?;

    let engine: EngineConfig = engine_value
        .clone()
        .try_into()
        .map_err(|e| CliError::config(format!("engine configuration: {e}")))?;
    let canon = canonical_value(&engine)?;
    let mut unknown = Vec::new();
    unknown_keys(&engine_value, &canon, "engine.", &mut unknown);
    if !unknown.is_empty() {
        return Err(CliError::config(format!(
            "unknown configuration key(s): {}",
            unknown.join(", ")
        )));
    }
    engine.validate().map_err(CliError::config)?;

    let out = spec.out.clone().unwrap_or_else(|| {
        let tag = spec
            .algorithm
            .clone()
            .unwrap_or_else(|| schedule_tag(&engine.schedule).to_string());
        format!("{}-{}-s{}", game.name, tag, engine.seed)
    });
    if out.is_empty() || out.contains(['/', '\\']) || out == "." || out == ".." {
        return Err(CliError::config(format!(
            "output name {out:?} must be a plain directory name"
        )));
    }

    let mut effective = toml::Table::new();
    effective.insert("game".into(), canonical_value(&game)?);
    if let Some(a) = &spec.algorithm {
        effective.insert("algorithm".into(), toml::Value::String(a.clone()));
    }
    effective.insert("out".into(), toml::Value::String(out.clone()));
    effective.insert("engine".into(), canon);

    Ok(ResolvedRun {
        game,
        engine,
        algorithm: spec.algorithm.clone(),
        out,
        effective,
    })
}

fn schedule_tag(schedule: &Schedule) -> &'static str {
    match schedule {
        Schedule::Never => "full",
        Schedule::EveryIteration => "every",
        Schedule::Threshold { .. } => "threshold",
        Schedule::Periodic { .. } => "periodic",
        Schedule::Adaptive(_) => "adaptive",
        Schedule::SampledAdaptive { .. } => "sampled-adaptive",
    }
}

fn parse_game(value: &toml::Value) -> Result<GameConfig, CliError> {
    match value {
        toml::Value::String(name) => Ok(GameConfig::new(name)),
        toml::Value::Table(_) => {
            let game: GameConfig = value
                .clone()
                .try_into()
                .map_err(|e| CliError::config(format!("game: {e}")))?;
            let canon = canonical_value(&game)?;
            let mut unknown = Vec::new();
            unknown_keys(value, &canon, "game.", &mut unknown);
            if !unknown.is_empty() {
                return Err(CliError::config(format!(
                    "unknown configuration key(s): {}",
                    unknown.join(", ")
                )));
            }
            Ok(game)
        }
        other => Err(CliError::config(format!(
            "game must be a name or a {{ name, params }} table, got {other}"
        ))),
    }
}

/// Adaptive schedules inherit their target from the stop condition when the
/// file does not set one.
fn fill_adaptive_target(engine: &mut toml::Value) -> Result<(), CliError> {
    let Some(table) = engine.as_table_mut() else {
        return Ok(());
    };
    let stop_target = table
        .get("stop")
        .and_then(|s| s.get("target_exploitability"))
        .and_then(toml::Value::as_float);
    let Some(schedule) = table.get_mut("schedule").and_then(toml::Value::as_table_mut) else {
        return Ok(());
    };
    let kind = schedule.get("kind").and_then(toml::Value::as_str);
    if !matches!(kind, Some("adaptive" | "sampled_adaptive")) {
        return Ok(());
    }
    let missing = match schedule.get("target_eps") {
        None => true,
        Some(v) => v.as_float().is_some_and(f64::is_nan),
    };
    if missing {
        let target = stop_target.ok_or_else(|| {
            CliError::config(
                "adaptive schedules need schedule.target_eps or stop.target_exploitability"
                    .to_string(),
            )
        })?;
        schedule.insert("target_eps".into(), toml::Value::Float(target));
    }
    Ok(())
}

/// Deep merge of `over` into `base`. Tables merge key by key, except that a
/// table selecting a different `kind`/`mode` tag replaces the base table
/// wholesale, so stale sibling parameters from a preset cannot linger.
pub fn merge(base: &mut toml::Value, over: &toml::Value) {
    if let (toml::Value::Table(b), toml::Value::Table(o)) = (&mut *base, over) {
        let tag_conflict = ["kind", "mode"]
            .iter()
            .any(|tag| matches!((b.get(*tag), o.get(*tag)), (Some(x), Some(y)) if x != y));
        if !tag_conflict {
            for (key, value) in o.iter() {
                match b.get_mut(key) {
                    Some(existing) => merge(existing, value),
                    None => {
                        b.insert(key.clone(), value.clone());
                    }
                }
            }
            return;
        }
    }
    *base = over.clone();
}

/// Serializes any engine-side type into a TOML value, dropping unset
/// optional fields. Going through JSON sidesteps TOML's lack of null.
pub fn canonical_value<T: serde::Serialize>(value: &T) -> Result<toml::Value, CliError> {
    let json = serde_json::to_value(value)
        .map_err(|e| CliError::config(format!("internal serialization error: {e}")))?;
    json_to_toml(&json)
        .ok_or_else(|| CliError::config("internal serialization error: unsupported value"))
}

fn json_to_toml(v: &serde_json::Value) -> Option<toml::Value> {
    Some(match v {
        serde_json::Value::Null => return None,
        serde_json::Value::Bool(b) => toml::Value::Boolean(*b),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                toml::Value::Integer(i)
            } else {
                toml::Value::Float(n.as_f64()?)
            }
        }
        serde_json::Value::String(s) => toml::Value::String(s.clone()),
        serde_json::Value::Array(items) => {
            toml::Value::Array(items.iter().filter_map(json_to_toml).collect())
        }
        serde_json::Value::Object(map) => {
            let mut table = toml::Table::new();
            for (k, v) in map {
                if let Some(t) = json_to_toml(v) {
                    table.insert(k.clone(), t);
                }
            }
            toml::Value::Table(table)
        }
    })
}

/// Collects input keys that the canonical serialization does not contain:
/// keys the configuration types silently ignore.
fn unknown_keys(input: &toml::Value, canon: &toml::Value, path: &str, out: &mut Vec<String>) {
    let (toml::Value::Table(input), toml::Value::Table(canon)) = (input, canon) else {
        return;
    };
    for (key, value) in input {
        match canon.get(key) {
            None => out.push(format!("{path}{key}")),
            Some(cv) => unknown_keys(value, cv, &format!("{path}{key}."), out),
        }
    }
}

/// Sets a dotted path like `engine.schedule.period` inside a table, creating
/// intermediate tables as needed.
pub fn set_path(root: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts = path.split('.').peekable();
    let mut table = root;
    loop {
        let part = parts
            .next()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| CliError::config(format!("axis path {path:?} is malformed")))?;
        if parts.peek().is_none() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::config(format!(
                "axis path {path:?} descends into non-table key {part:?}"
            ))
        })?;
    }
}
