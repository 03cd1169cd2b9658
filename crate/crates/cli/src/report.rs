//! Report commands: support tables, nodes-to-target tables, plot data, and
//! game enumeration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rmdo_core::compile::CompiledGame;
use rmdo_core::eval::{support_metrics, SUPPORT_THRESHOLD};
use rmdo_core::games::{build_game, GameConfig};
use rmdo_core::runlog::StopReason;
use rmdo_core::Player;

use crate::rundir::{read_config, read_metrics, read_policy, read_summary, MetricsRow};
use crate::CliError;

/// Prints the support of a run's final window average, measured against the
/// full game's menus. Exits with the target-not-reached status when the run
/// never reached its exploitability target.
pub fn cmd_support(
    dir: &Path,
    threshold: Option<f64>,
    target: Option<f64>,
    player: Option<Player>,
) -> Result<(), CliError> {
    let run = read_config(dir)?;
    let summary = read_summary(dir)?;
    let threshold = threshold.unwrap_or(SUPPORT_THRESHOLD);
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(CliError::config(format!(
            "support threshold must be finite and non-negative, got {threshold}"
        )));
    }

    let reached = match target {
        Some(eps) => read_metrics(dir)?
            .iter()
            .any(|r| r.exploitability_las <= eps),
        None => summary.summary.reason == StopReason::TargetReached,
    };
    if !reached {
        let wanted = target
            .or(run.engine.stop.target_exploitability)
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "its target".into());
        return Err(CliError::target_not_reached(format!(
            "{}: exploitability {wanted} not reached (final {:.3e}, stop reason {:?})",
            dir.display(),
            summary.summary.final_las,
            summary.summary.reason
        )));
    }

    let game = build_game(&run.game).map_err(|e| CliError::config(e.to_string()))?;
    let compiled = CompiledGame::build(game.as_ref());
    let policy = read_policy(dir)?;
    println!(
        "support of {} (threshold {threshold:e}, final exploitability {:.3e})",
        dir.display(),
        summary.summary.final_las
    );
    println!("scope     sets  actions  supported  min%     pooled%  mean%    empty");
    let scopes: &[(&str, Option<Player>)] = match player {
        Some(p) => &[("chosen", Some(p))][..],
        None => &[
            ("both", None),
            ("player1", Some(Player::One)),
            ("player2", Some(Player::Two)),
        ],
    };
    for (label, p) in scopes {
        let m = support_metrics(&compiled, &policy, threshold, *p);
        println!(
            "{label:<9} {:<5} {:<8} {:<10} {:<8.2} {:<8.2} {:<8.2} {}",
            m.infosets, m.total_actions, m.total_support, m.min_pct, m.pooled_pct, m.mean_pct,
            m.zero_support
        );
    }
    Ok(())
}

/// One aggregated table cell: node counts of the runs that reached a target.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Every run in the group reached the target.
    Reached { mean: f64, std: Option<f64> },
    /// At least one run never logged a point at or below the target.
    Missed,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Reached { mean, std: Some(s) } => format!("{mean:.1} ({s:.1})"),
            Cell::Reached { mean, std: None } => format!("{mean:.1}"),
            Cell::Missed => "—".to_string(),
        }
    }
}

/// First logged point at or below `target`, as the reported-node abscissa.
pub fn nodes_to_target(rows: &[MetricsRow], target: f64) -> Option<u64> {
    rows.iter()
        .find(|r| r.exploitability_las <= target)
        .map(|r| r.nodes_reported)
}

/// Aggregates per-seed node counts: mean and sample standard deviation.
pub fn aggregate(values: &[Option<u64>]) -> Cell {
    if values.iter().any(Option::is_none) || values.is_empty() {
        return Cell::Missed;
    }
    let v: Vec<f64> = values.iter().map(|x| x.unwrap() as f64).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.len() > 1).then(|| {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    Cell::Reached { mean, std }
}

/// Strips seed markers from a run-directory name so that seed variants of
/// one configuration share a label.
pub fn seedless_label(name: &str) -> String {
    let mut label = String::new();
    for part in name.split(',') {
        if part.starts_with("seed=") || part.starts_with("engine.seed=") {
            continue;
        }
        if !label.is_empty() {
            label.push(',');
        }
        label.push_str(part);
    }
    // Default run names end in "-s<seed>".
    if let Some(pos) = label.rfind("-s") {
        if label[pos + 2..].chars().all(|c| c.is_ascii_digit()) && pos + 2 < label.len() {
            label.truncate(pos);
        }
    }
    if label.is_empty() {
        name.to_string()
    } else {
        label
    }
}

/// Group key: the effective configuration with the seed normalized away, so
/// that only true seed variants are aggregated together.
fn group_key(dir: &Path) -> Result<String, CliError> {
    let run = read_config(dir)?;
    let mut table = run.effective.clone();
    table.remove("out");
    if let Some(engine) = table.get_mut("engine").and_then(toml::Value::as_table_mut) {
        engine.remove("seed");
    }
    toml::to_string(&table).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))
}

pub struct TargetTable {
    pub targets: Vec<f64>,
    /// Rows in first-appearance order: label plus one cell per target.
    pub rows: Vec<(String, Vec<Cell>)>,
}

impl TargetTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut widths = vec![0usize; self.targets.len() + 1];
        let header: Vec<String> = std::iter::once("run".to_string())
            .chain(self.targets.iter().map(|t| format!("to {t}")))
            .collect();
        let mut body: Vec<Vec<String>> = vec![header];
        for (label, cells) in &self.rows {
            body.push(
                std::iter::once(label.clone())
                    .chain(cells.iter().map(Cell::render))
                    .collect(),
            );
        }
        for row in &body {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        for row in &body {
            for (i, cell) in row.iter().enumerate() {
                let pad = widths[i] - cell.chars().count();
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(cell);
                out.extend(std::iter::repeat(' ').take(pad));
            }
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run");
        for t in &self.targets {
            let _ = write!(out, ",to {t}");
        }
        out.push('\n');
        for (label, cells) in &self.rows {
            out.push_str(label);
            for cell in cells {
                let _ = write!(out, ",{}", cell.render());
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the nodes-to-target table: groups seed variants, takes the first
/// logged point at or below each target, and aggregates as mean (std).
pub fn build_target_table(dirs: &[PathBuf], targets: &[f64]) -> Result<TargetTable, CliError> {
    if dirs.is_empty() {
        return Err(CliError::config("no run directories given"));
    }
    for &t in targets {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::config(format!(
                "targets must be positive and finite, got {t}"
            )));
        }
    }
    // Group preserving first-appearance order.
    let mut order: Vec<String> = Vec::new();
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for dir in dirs {
        let key = group_key(dir)?;
        match order.iter().position(|k| *k == key) {
            Some(i) => groups[i].1.push(dir.clone()),
            None => {
                order.push(key);
                groups.push((label_of(dir), vec![dir.clone()]));
            }
        }
    }
    let mut rows = Vec::new();
    for (label, members) in groups {
        let metrics: Vec<Vec<MetricsRow>> = members
            .iter()
            .map(|d| read_metrics(d))
            .collect::<Result<_, _>>()?;
        let cells = targets
            .iter()
            .map(|&t| {
                let per_seed: Vec<Option<u64>> =
                    metrics.iter().map(|rows| nodes_to_target(rows, t)).collect();
                aggregate(&per_seed)
            })
            .collect();
        rows.push((label, cells));
    }
    Ok(TargetTable {
        targets: targets.to_vec(),
        rows,
    })
}

fn label_of(dir: &Path) -> String {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    seedless_label(&name)
}

pub fn cmd_nodes_to_target(
    dirs: &[PathBuf],
    targets: &[f64],
    csv: Option<&Path>,
) -> Result<(), CliError> {
    let table = build_target_table(dirs, targets)?;
    print!("{}", table.render());
    if let Some(path) = csv {
        fs::write(path, table.to_csv())
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Downsamples a series to at most `points` rows, always keeping the first
/// and last.
pub fn downsample<T: Copy>(rows: &[T], points: usize) -> Vec<T> {
    if points == 0 || rows.len() <= points {
        return rows.to_vec();
    }
    let last = rows.len() - 1;
    let mut out: Vec<T> = (0..points.saturating_sub(1))
        .map(|i| rows[i * last / (points - 1).max(1)])
        .collect();
    out.push(rows[last]);
    out.dedup_by(|_, _| false);
    out
}

pub fn cmd_plot(
    dirs: &[PathBuf],
    out: &Path,
    points: usize,
    svg: bool,
) -> Result<(), CliError> {
    if dirs.is_empty() {
        return Err(CliError::config("no run directories given"));
    }
    let mut series: Vec<(String, Vec<MetricsRow>)> = Vec::new();
    for dir in dirs {
        let rows = read_metrics(dir)?;
        // The first record sits at zero reported nodes; a log axis drops it.
        let usable: Vec<MetricsRow> = rows
            .iter()
            .copied()
            .filter(|r| r.nodes_reported > 0 && r.exploitability_las > 0.0)
            .collect();
        if usable.is_empty() {
            return Err(CliError::config(format!(
                "{}: no plottable points in metrics.csv",
                dir.display()
            )));
        }
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        series.push((name, downsample(&usable, points)));
    }

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::config(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let csv_path = out.with_extension("csv");
    let mut csv = String::from("series,nodes_reported,exploitability_las\n");
    for (name, rows) in &series {
        for r in rows {
            let _ = writeln!(csv, "{name},{},{}", r.nodes_reported, r.exploitability_las);
        }
    }
    fs::write(&csv_path, csv)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", csv_path.display())))?;

    let meta_path = out.with_extension("json");
    let meta = serde_json::json!({
        "xscale": "log",
        "yscale": "log",
        "xlabel": "reported nodes (regret minimization + best response)",
        "ylabel": "exploitability of the window average",
        "series": series.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
    });
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", meta_path.display())))?;

    let mut written = vec![csv_path.display().to_string(), meta_path.display().to_string()];
    if svg {
        let svg_path = out.with_extension("svg");
        fs::write(&svg_path, render_svg(&series))
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", svg_path.display())))?;
        written.push(svg_path.display().to_string());
    }
    println!("wrote {}", written.join(", "));
    Ok(())
}

/// A self-contained log-log line chart.
fn render_svg(series: &[(String, Vec<MetricsRow>)]) -> String {
    const W: f64 = 760.0;
    const H: f64 = 520.0;
    const L: f64 = 70.0; // left margin
    const B: f64 = 60.0; // bottom margin
    const T: f64 = 20.0; // top margin
    const R: f64 = 190.0; // right margin (legend)
    const PALETTE: &[&str] = &[
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    ];

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, rows) in series {
        for r in rows {
            let x = r.nodes_reported as f64;
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(r.exploitability_las);
            y_max = y_max.max(r.exploitability_las);
        }
    }
    let (x_min, x_max) = (x_min.log10().floor(), x_max.log10().ceil().max(x_min.log10().floor() + 1.0));
    let (y_min, y_max) = (y_min.log10().floor(), y_max.log10().ceil().max(y_min.log10().floor() + 1.0));
    let sx = |x: f64| L + (x.log10() - x_min) / (x_max - x_min) * (W - L - R);
    let sy = |y: f64| H - B - (y.log10() - y_min) / (y_max - y_min) * (H - B - T);

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    // Decade grid and tick labels.
    let mut d = x_min;
    while d <= x_max + 1e-9 {
        let px = L + (d - x_min) / (x_max - x_min) * (W - L - R);
        let _ = write!(
            s,
            "<line x1=\"{px:.1}\" y1=\"{T}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">1e{d:.0}</text>\n",
            H - B,
            H - B + 18.0
        );
        d += 1.0;
    }
    let mut d = y_min;
    while d <= y_max + 1e-9 {
        let py = H - B - (d - y_min) / (y_max - y_min) * (H - B - T);
        let _ = write!(
            s,
            "<line x1=\"{L}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{d:.0}</text>\n",
            W - R,
            L - 6.0,
            py + 4.0
        );
        d += 1.0;
    }
    let _ = write!(
        s,
        "<rect x=\"{L}\" y=\"{T}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">reported nodes</text>\n\
         <text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">exploitability</text>\n",
        W - L - R,
        H - B - T,
        L + (W - L - R) / 2.0,
        H - 16.0,
        (H - B + T) / 2.0,
        (H - B + T) / 2.0
    );
    for (i, (name, rows)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.1},{:.1}", sx(r.nodes_reported as f64), sy(r.exploitability_las)))
            .collect();
        let _ = write!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        );
        let ly = T + 16.0 + 18.0 * i as f64;
        let _ = write!(
            s,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            W - R + 10.0,
            W - R + 34.0,
            W - R + 40.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn cmd_enumerate(name: &str, params: &[String]) -> Result<(), CliError> {
    let mut config = GameConfig::new(name);
    for p in params {
        let (key, value) = p.split_once('=').ok_or_else(|| {
            CliError::config(format!("parameter {p:?} must look like key=value"))
        })?;
        let value: u64 = value
            .parse()
            .map_err(|e| CliError::config(format!("parameter {p:?}: {e}")))?;
        config = config.with(key, value);
    }
    let game = build_game(&config).map_err(|e| CliError::config(e.to_string()))?;
    let compiled = CompiledGame::build(game.as_ref());
    let stats = &compiled.stats;
    let max_branching = (0..compiled.nodes.len())
        .map(|id| compiled.edges_of(id).len())
        .max()
        .unwrap_or(0);
    let total_actions: usize = compiled.infosets.iter().map(|m| m.actions.len()).sum();
    println!("game              {}", compiled.name);
    println!("player1 infosets  {}", stats.infosets[0]);
    println!("player2 infosets  {}", stats.infosets[1]);
    println!("histories         {}", stats.histories);
    println!("terminals         {}", stats.terminals);
    println!("chance nodes      {}", stats.chance_nodes);
    println!("decision nodes    {} / {}", stats.decision_nodes[0], stats.decision_nodes[1]);
    println!("total actions     {total_actions}");
    println!("horizon           {}", stats.horizon);
    println!("max menu          {}", stats.max_actions);
    println!("max branching     {max_branching}");
    Ok(())
}
