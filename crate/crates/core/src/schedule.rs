//! Expansion schedules: when a run attempts to grow its population.
//!
//! A schedule either fixes a number of solver iterations per expansion
//! attempt ([`Schedule::frequency`]), possibly derived from the shape of the
//! current restricted game, or triggers attempts from a condition the engine
//! evaluates (a restricted-equilibrium threshold, or an early-stopping rule
//! layered on top of an adaptive period).

use serde::{Deserialize, Serialize};

use crate::compile::GameStats;

/// Shape of the current restricted game, the input to adaptive periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowShape {
    /// Largest action menu of any information set.
    pub max_actions: usize,
    /// Information sets summed over both players.
    pub sum_infosets: usize,
    /// Maximum decision nodes on any path.
    pub horizon: usize,
}

impl WindowShape {
    pub fn from_stats(stats: &GameStats) -> WindowShape {
        WindowShape {
            max_actions: stats.max_actions,
            sum_infosets: stats.sum_infosets(),
            horizon: stats.horizon,
        }
    }
}

/// Parameters of the adaptive period, which targets a restricted-game gap of
/// `target_eps` and attempts an expansion every
/// `ceil(alpha * sqrt(max_actions) * sum_infosets / target_eps)` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub target_eps: f64,
    /// Multiplier on the computed period; values below one expand earlier.
    pub alpha: f64,
    /// Optional early expansion when the restricted gap has stopped moving.
    pub early_stop: Option<EarlyStop>,
}

/// Early-stopping rule: every `check_every` iterations compare the
/// restricted gap with the previous check; expand once it moved by less than
/// `tolerance`. The first check only records a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub tolerance: f64,
    pub check_every: u64,
}

/// When to attempt population expansions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Schedule {
    /// Never expand; the solver runs on the full game.
    Never,
    /// Attempt an expansion after every iteration.
    EveryIteration,
    /// Attempt when the restricted gap of the window average falls below
    /// `eps0 / 2^j` in window `j` (counted from zero), checked every
    /// `check_every` iterations.
    Threshold { eps0: f64, check_every: u64 },
    /// Attempt every `period` iterations.
    Periodic { period: u64 },
    /// Period derived from the restricted game's shape; see
    /// [`AdaptiveParams`].
    Adaptive(AdaptiveParams),
    /// Shape-derived period for sampled solvers:
    /// `ceil(sqrt(max_actions * sum_infosets^3 / (horizon * target_eps^2)))`.
    SampledAdaptive { target_eps: f64 },
}

/// Ceiling that tolerates floating-point noise: values within `1e-9` of an
/// integer round to it instead of up. Never returns zero.
fn stable_ceil(x: f64) -> u64 {
    let nearest = x.round();
    let v = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    };
    v.max(1.0) as u64
}

impl Schedule {
    /// Iterations between expansion attempts in a window of this shape, or
    /// `None` when attempts are condition-driven ([`Schedule::Threshold`])
    /// or never happen ([`Schedule::Never`]).
    pub fn frequency(&self, shape: &WindowShape) -> Option<u64> {
        match *self {
            Schedule::Never | Schedule::Threshold { .. } => None,
            Schedule::EveryIteration => Some(1),
            Schedule::Periodic { period } => Some(period),
            Schedule::Adaptive(params) => {
                let m = (shape.max_actions as f64).sqrt() * shape.sum_infosets as f64
                    / params.target_eps;
                Some(stable_ceil(params.alpha * m))
            }
            Schedule::SampledAdaptive { target_eps } => {
                let sets = shape.sum_infosets as f64;
                let m = (shape.max_actions as f64 * sets.powi(3)
                    / (shape.horizon as f64 * target_eps * target_eps))
                    .sqrt();
                Some(stable_ceil(m))
            }
        }
    }

    /// Restricted-gap threshold of window `j` for the threshold schedule.
    pub fn threshold(&self, window: u32) -> Option<f64> {
        match *self {
            Schedule::Threshold { eps0, .. } => Some(eps0 / f64::powi(2.0, window as i32)),
            _ => None,
        }
    }

    /// Rejects non-positive or zero-valued parameters.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        let at_least_one = |name: &str, v: u64| {
            if v >= 1 {
                Ok(())
            } else {
                Err(format!("{name} must be at least 1"))
            }
        };
        match *self {
            Schedule::Never | Schedule::EveryIteration => Ok(()),
            Schedule::Threshold { eps0, check_every } => {
                positive("eps0", eps0)?;
                at_least_one("check_every", check_every)
            }
            Schedule::Periodic { period } => at_least_one("period", period),
            Schedule::Adaptive(params) => {
                positive("target_eps", params.target_eps)?;
                positive("alpha", params.alpha)?;
                if let Some(early) = params.early_stop {
                    positive("tolerance", early.tolerance)?;
                    at_least_one("check_every", early.check_every)?;
                }
                Ok(())
            }
            Schedule::SampledAdaptive { target_eps } => positive("target_eps", target_eps),
        }
    }
}
