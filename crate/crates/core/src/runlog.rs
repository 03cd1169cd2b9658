//! Run records: what a benchmark run reports at each evaluation point, at
//! each expansion attempt, and at the end.

use serde::{Deserialize, Serialize};

use crate::game::NodeCounter;

/// One evaluation point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Solver iterations completed in the whole run.
    pub iteration: u64,
    pub nodes_rm: u64,
    pub nodes_br: u64,
    pub nodes_eval: u64,
    /// The benchmark abscissa: `nodes_rm + nodes_br`.
    pub nodes_reported: u64,
    /// Full-game exploitability of the expanded window-average strategy.
    pub exploitability_las: f64,
    /// Full-game exploitability of the expanded all-iterations average.
    pub exploitability_oas: f64,
    /// Restriction window this point belongs to, counted from zero.
    pub window: u32,
    /// Information sets of the current restricted game, both players.
    pub sum_infosets: usize,
    /// Allowed actions in the population, summed over information sets.
    pub population_size: usize,
    /// Wall-clock milliseconds since the run started; zero unless wall-clock
    /// reporting was enabled, so that logs stay byte-reproducible.
    pub wall_ms: u64,
}

/// What made the engine attempt an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionTrigger {
    /// The window hit its scheduled iteration count.
    Periodic,
    /// The restricted gap fell below the window threshold.
    Threshold,
    /// The restricted gap stopped moving between checks.
    EarlyStop,
}

/// One expansion attempt: full-game best responses against the expanded
/// window average, unioned into the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    /// Global iteration after which the attempt ran.
    pub iteration: u64,
    /// Window the attempt was made in.
    pub window: u32,
    pub trigger: ExpansionTrigger,
    /// Restricted gap that triggered the attempt, when one was computed.
    pub gap: Option<f64>,
    /// Number of `(infoset, action)` pairs the best responses added.
    pub added: usize,
    /// Population size after the attempt.
    pub population_size: usize,
}

impl ExpansionRecord {
    /// Whether the attempt grew the population and opened a new window.
    pub fn expanded(&self) -> bool {
        self.added > 0
    }
}

/// Why a run stopped, in decreasing precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    TargetReached,
    IterationLimit,
}

/// End-of-run totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub reason: StopReason,
    pub iterations: u64,
    /// Windows opened, including the first.
    pub windows: u32,
    pub final_las: f64,
    pub final_oas: f64,
    pub counter: NodeCounter,
    pub population_size: usize,
    pub sum_infosets: usize,
}

/// Everything a run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<RunRecord>,
    pub expansions: Vec<ExpansionRecord>,
    pub summary: RunSummary,
}
