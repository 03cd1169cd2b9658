//! Tabular regret and strategy storage.
//!
//! A [`Profile`] holds one [`InfosetData`] entry per information set:
//! cumulative regrets, the weighted strategy accumulator, and a per-sweep
//! cache of the regret-matched policy. Entries are created eagerly from a
//! compiled game in arena order, so iteration over the table is deterministic
//! and solvers can address entries by slot index.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::compile::CompiledGame;
use crate::game::{Action, InfosetKey};

/// Converts cumulative regrets into a policy: the positive parts normalized,
/// or uniform when no regret is positive.
///
/// Panics on an empty slice; a decision node always has at least one action.
pub fn regret_matching(regrets: &[f64], out: &mut Vec<f64>) {
    assert!(
        !regrets.is_empty(),
        "regret matching over an empty action menu"
    );
    out.clear();
    let positive_sum: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if positive_sum > 0.0 {
        out.extend(regrets.iter().map(|r| r.max(0.0) / positive_sum));
    } else {
        let uniform = 1.0 / regrets.len() as f64;
        out.extend(std::iter::repeat(uniform).take(regrets.len()));
    }
}

/// Per-iteration weighting of regret and strategy updates.
///
/// `Linear` multiplies both updates of iteration `t` by `t` (counted from 1
/// within the current solve), which is the linear averaging scheme; `Uniform`
/// weights all iterations equally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    Linear,
}

impl WeightScheme {
    /// Weight of iteration `t` (1-based).
    pub fn weight(self, t: u64) -> f64 {
        match self {
            WeightScheme::Uniform => 1.0,
            WeightScheme::Linear => t as f64,
        }
    }
}

/// Regrets and strategy weight for one information set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfosetData {
    pub actions: Vec<Action>,
    pub regret: Vec<f64>,
    pub strat_sum: Vec<f64>,
    #[serde(skip)]
    cache: Vec<f64>,
    #[serde(skip)]
    cache_stamp: u64,
}

impl InfosetData {
    pub fn new(actions: Vec<Action>) -> InfosetData {
        let n = actions.len();
        InfosetData {
            actions,
            regret: vec![0.0; n],
            strat_sum: vec![0.0; n],
            cache: Vec::new(),
            cache_stamp: 0,
        }
    }

    /// The regret-matched policy over `actions`, recomputed on every call.
    pub fn current_policy(&self, out: &mut Vec<f64>) {
        regret_matching(&self.regret, out);
    }

    /// The regret-matched policy frozen at the first call of sweep `stamp`.
    ///
    /// Later calls within the same sweep return the frozen policy even if
    /// regrets have been updated in between, which makes an in-place sweep
    /// equivalent to computing all updates from the sweep-start policy.
    pub fn cached_policy(&mut self, stamp: u64) -> &[f64] {
        debug_assert!(stamp > 0, "sweep stamps start at 1");
        if self.cache_stamp != stamp {
            let mut cache = std::mem::take(&mut self.cache);
            regret_matching(&self.regret, &mut cache);
            self.cache = cache;
            self.cache_stamp = stamp;
        }
        &self.cache
    }

    /// The normalized strategy accumulator, with `true` when the accumulator
    /// was empty and the uniform fallback was used.
    pub fn average_policy(&self) -> (Vec<f64>, bool) {
        let total: f64 = self.strat_sum.iter().sum();
        if total > 0.0 {
            (self.strat_sum.iter().map(|w| w / total).collect(), false)
        } else {
            let n = self.actions.len();
            (vec![1.0 / n as f64; n], true)
        }
    }
}

/// The full table of regrets and strategy weights, keyed by information set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Profile {
    tables: IndexMap<InfosetKey, InfosetData>,
    #[serde(skip)]
    sweep_stamp: u64,
}

impl Profile {
    pub fn new() -> Profile {
        Profile::default()
    }

    /// One zeroed entry per information set, in arena (first-visit) order.
    pub fn from_compiled(game: &CompiledGame) -> Profile {
        let mut tables = IndexMap::with_capacity(game.infosets.len());
        for meta in &game.infosets {
            tables.insert(meta.key.clone(), InfosetData::new(meta.actions.clone()));
        }
        Profile {
            tables,
            sweep_stamp: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Starts a new sweep; policies cached under the returned stamp stay
    /// frozen for its duration.
    pub fn begin_sweep(&mut self) -> u64 {
        self.sweep_stamp += 1;
        self.sweep_stamp
    }

    pub fn slot_of(&self, key: &[u8]) -> Option<usize> {
        self.tables.get_index_of(key)
    }

    pub fn by_slot(&self, slot: usize) -> (&InfosetKey, &InfosetData) {
        let (k, v) = self.tables.get_index(slot).expect("profile slot out of range");
        (k, v)
    }

    pub fn by_slot_mut(&mut self, slot: usize) -> (&InfosetKey, &mut InfosetData) {
        let (k, v) = self
            .tables
            .get_index_mut(slot)
            .expect("profile slot out of range");
        (k, v)
    }

    pub fn get(&self, key: &[u8]) -> Option<&InfosetData> {
        self.tables.get(key)
    }

    pub fn get_mut(&mut self, key: &[u8]) -> Option<&mut InfosetData> {
        self.tables.get_mut(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InfosetKey, &InfosetData)> {
        self.tables.iter()
    }

    /// Profile slot of every arena information set, aligned with
    /// `game.infosets`. Panics if an entry is missing: solvers work on
    /// profiles created eagerly from the same arena.
    pub fn slot_map(&self, game: &CompiledGame) -> Vec<usize> {
        game.infosets
            .iter()
            .map(|meta| {
                self.slot_of(meta.key.as_bytes())
                    .unwrap_or_else(|| panic!("profile has no entry for {}", meta.key))
            })
            .collect()
    }

    /// The average behavior policy over all entries, in table order.
    pub fn average(&self) -> BehaviorPolicy {
        let mut entries = IndexMap::with_capacity(self.tables.len());
        for (key, data) in &self.tables {
            let (probs, fallback) = data.average_policy();
            entries.insert(
                key.clone(),
                PolicyEntry {
                    actions: data.actions.clone(),
                    probs,
                    fallback,
                },
            );
        }
        BehaviorPolicy { entries }
    }
}

/// A behavior policy entry: probabilities over an explicit action list.
/// Actions outside `actions` have probability zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub actions: Vec<Action>,
    pub probs: Vec<f64>,
    /// True when this entry came from an empty accumulator and therefore
    /// defaulted to uniform.
    pub fallback: bool,
}

impl PolicyEntry {
    pub fn uniform(actions: Vec<Action>) -> PolicyEntry {
        let n = actions.len();
        PolicyEntry {
            actions,
            probs: vec![1.0 / n as f64; n],
            fallback: true,
        }
    }

    pub fn pure(actions: Vec<Action>, chosen: Action) -> PolicyEntry {
        let probs = actions
            .iter()
            .map(|&a| if a == chosen { 1.0 } else { 0.0 })
            .collect();
        PolicyEntry {
            actions,
            probs,
            fallback: false,
        }
    }

    /// Probability of `action`; zero when the action is not listed.
    pub fn prob(&self, action: Action) -> f64 {
        self.actions
            .iter()
            .position(|&a| a == action)
            .map_or(0.0, |i| self.probs[i])
    }
}

/// A complete behavior policy for one or both players.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorPolicy {
    pub entries: IndexMap<InfosetKey, PolicyEntry>,
}

impl BehaviorPolicy {
    pub fn entry(&self, key: &[u8]) -> Option<&PolicyEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: InfosetKey, entry: PolicyEntry) {
        self.entries.insert(key, entry);
    }

    /// Merges `other` into `self`, replacing entries with equal keys.
    pub fn extend(&mut self, other: BehaviorPolicy) {
        for (k, v) in other.entries {
            self.entries.insert(k, v);
        }
    }
}
