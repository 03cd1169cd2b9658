//! Restricted games: per-infoset populations of allowed actions, the game
//! wrapper that enforces them, policy expansion back to the full game, and
//! warm starts across growing restrictions.
//!
//! A [`Population`] assigns every information set of the full game a
//! non-empty subset of its menu. Solving happens on the game restricted to
//! those actions; evaluation happens on the full game after [`expand_policy`]
//! fills in the sets the restricted tree never reaches with the uniform
//! distribution over their allowed actions.

use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::compile::CompiledGame;
use crate::eval::best_response;
use crate::game::{
    Action, Game, InfosetKey, NodeCounter, Player, State, ToPlay, VisitKind,
};
use crate::profile::{BehaviorPolicy, PolicyEntry, Profile};

/// The allowed actions of every information set, each kept sorted ascending.
///
/// Entries appear in insertion order, which solvers rely on for determinism.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Population {
    allowed: IndexMap<InfosetKey, Vec<Action>>,
}

impl Population {
    pub fn new() -> Population {
        Population::default()
    }

    /// A population allowing every action of every information set.
    pub fn full(game: &CompiledGame) -> Population {
        let mut allowed = IndexMap::with_capacity(game.infosets.len());
        for meta in &game.infosets {
            allowed.insert(meta.key.clone(), meta.actions.clone());
        }
        Population { allowed }
    }

    /// Number of information sets with at least one allowed action.
    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    /// Total number of allowed actions summed over all information sets.
    pub fn total_actions(&self) -> usize {
        self.allowed.values().map(Vec::len).sum()
    }

    /// Allowed actions at `key`, if the set is part of the population.
    pub fn allowed(&self, key: &[u8]) -> Option<&[Action]> {
        self.allowed.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InfosetKey, &[Action])> {
        self.allowed.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Allows `action` at `key`. Returns whether the pair was new.
    pub fn insert(&mut self, key: &InfosetKey, action: Action) -> bool {
        if let Some(actions) = self.allowed.get_mut(key.as_bytes()) {
            match actions.binary_search(&action) {
                Ok(_) => false,
                Err(pos) => {
                    actions.insert(pos, action);
                    true
                }
            }
        } else {
            self.allowed.insert(key.clone(), vec![action]);
            true
        }
    }

    /// Allows every `(key, action)` pair of a pure policy (typically a best
    /// response). Returns the pairs that were actually new, in input order.
    pub fn absorb(
        &mut self,
        chosen: &IndexMap<InfosetKey, Action>,
    ) -> Vec<(InfosetKey, Action)> {
        let mut added = Vec::new();
        for (key, &action) in chosen {
            if self.insert(key, action) {
                added.push((key.clone(), action));
            }
        }
        added
    }

    /// True when every information set of `game` has a non-empty entry whose
    /// actions all belong to that set's menu. Solvers require this: it
    /// guarantees expanded policies are defined everywhere.
    pub fn is_total_for(&self, game: &CompiledGame) -> bool {
        game.infosets.iter().all(|meta| {
            self.allowed(meta.key.as_bytes()).is_some_and(|actions| {
                !actions.is_empty()
                    && actions.iter().all(|a| meta.actions.contains(a))
            })
        })
    }

    /// One line per information set: `key<TAB>action,action,...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, actions) in &self.allowed {
            out.push_str(&key.to_string());
            out.push('\t');
            let list: Vec<String> = actions.iter().map(|a| a.to_string()).collect();
            out.push_str(&list.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the [`Population::to_text`] format.
    pub fn from_text(text: &str) -> Result<Population, String> {
        let mut population = Population::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (key, list) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: missing tab separator", lineno + 1))?;
            let key = InfosetKey::from_bytes(key.as_bytes());
            if population.allowed(key.as_bytes()).is_some() {
                return Err(format!("line {}: duplicate key {key}", lineno + 1));
            }
            for part in list.split(',') {
                let action: Action = part
                    .parse()
                    .map_err(|_| format!("line {}: bad action {part:?}", lineno + 1))?;
                population.insert(&key, action);
            }
        }
        Ok(population)
    }
}

/// The starting population: each player's pure best response against a
/// uniform opponent. Best responses choose an action at every one of the
/// responder's information sets, so the result covers the whole game with
/// one action each and is total by construction.
pub fn initial_population(game: &CompiledGame, counter: &mut NodeCounter) -> Population {
    let uniform = uniform_full_policy(game);
    let mut population = Population::new();
    for player in Player::both() {
        let br = best_response(
            game,
            player,
            &uniform,
            Some((counter, VisitKind::BestResponse)),
        );
        population.absorb(&br.chosen);
    }
    population
}

/// The uniform joint policy over full menus, defined at every information
/// set of the game.
pub fn uniform_full_policy(game: &CompiledGame) -> BehaviorPolicy {
    let mut policy = BehaviorPolicy::default();
    for meta in &game.infosets {
        policy.insert(meta.key.clone(), PolicyEntry::uniform(meta.actions.clone()));
    }
    policy
}

/// A game limited to the actions of a population. Keys, payoffs, chance and
/// observations pass through unchanged, so restricted information sets keep
/// their full-game identity; only decision menus shrink.
pub struct RestrictedGame {
    inner: Arc<dyn Game>,
    population: Arc<Population>,
}

impl RestrictedGame {
    pub fn new(inner: Arc<dyn Game>, population: Arc<Population>) -> RestrictedGame {
        RestrictedGame { inner, population }
    }
}

impl Game for RestrictedGame {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn root(&self) -> Box<dyn State> {
        Box::new(RestrictedState {
            inner: self.inner.root(),
            population: Arc::clone(&self.population),
        })
    }

    fn utility_range(&self) -> (f64, f64) {
        self.inner.utility_range()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn max_path_len(&self) -> usize {
        self.inner.max_path_len()
    }
}

struct RestrictedState {
    inner: Box<dyn State>,
    population: Arc<Population>,
}

impl State for RestrictedState {
    fn to_play(&self) -> ToPlay {
        self.inner.to_play()
    }

    fn legal_actions(&self, out: &mut Vec<Action>) {
        self.inner.legal_actions(out);
        if let ToPlay::Player(_) = self.inner.to_play() {
            let key = self.inner.infoset_key();
            let allowed = self
                .population
                .allowed(key.as_bytes())
                .unwrap_or_else(|| panic!("population has no entry for {key}"));
            out.retain(|a| allowed.contains(a));
            assert!(!out.is_empty(), "population leaves {key} without actions");
        }
    }

    fn chance_outcomes(&self, out: &mut Vec<(Action, f64)>) {
        self.inner.chance_outcomes(out);
    }

    fn payoff(&self, player: Player) -> f64 {
        self.inner.payoff(player)
    }

    fn write_key(&self, buf: &mut Vec<u8>) {
        self.inner.write_key(buf);
    }

    fn observed_action(&self, action: Action) -> Action {
        self.inner.observed_action(action)
    }

    fn action_label(&self, action: Action) -> String {
        self.inner.action_label(action)
    }

    fn child(&self, action: Action) -> Box<dyn State> {
        Box::new(RestrictedState {
            inner: self.inner.child(action),
            population: Arc::clone(&self.population),
        })
    }
}

/// Extends a policy defined on (part of) the restricted tree to the full
/// game: population entries present in `partial` are copied, all others get
/// the uniform distribution over their allowed actions. Actions outside the
/// population keep probability zero.
pub fn expand_policy(population: &Population, partial: &BehaviorPolicy) -> BehaviorPolicy {
    let mut out = BehaviorPolicy::default();
    for (key, allowed) in population.iter() {
        let entry = match partial.entry(key.as_bytes()) {
            Some(entry) => {
                debug_assert_eq!(
                    entry.actions, allowed,
                    "restricted entry for {key} disagrees with the population"
                );
                entry.clone()
            }
            None => PolicyEntry::uniform(allowed.to_vec()),
        };
        out.insert(key.clone(), entry);
    }
    out
}

/// What a new restriction window starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum WarmStart {
    /// Fresh zeroed tables.
    Reset,
    /// Carry regrets over from the previous window bit for bit and seed
    /// newly added actions with `eps_init`. With `carry_average` (the
    /// default) the strategy accumulator is carried verbatim as well, so the
    /// reported window average blends all windows since the last reset;
    /// without it the accumulator restarts at zero and only the regrets
    /// shape the new window's starting policies.
    Carry {
        eps_init: f64,
        #[serde(default = "default_true")]
        carry_average: bool,
    },
}

fn default_true() -> bool {
    true
}

impl WarmStart {
    /// Verbatim carry of both tables with the given seed value.
    pub fn carry(eps_init: f64) -> WarmStart {
        WarmStart::Carry {
            eps_init,
            carry_average: true,
        }
    }

    /// Carry regrets only; the strategy accumulator restarts per window.
    pub fn carry_regrets_only(eps_init: f64) -> WarmStart {
        WarmStart::Carry {
            eps_init,
            carry_average: false,
        }
    }

    /// Whether the strategy accumulator survives window changes.
    pub fn keeps_average(&self) -> bool {
        matches!(
            self,
            WarmStart::Carry {
                carry_average: true,
                ..
            }
        )
    }
}

impl Default for WarmStart {
    fn default() -> WarmStart {
        WarmStart::Reset
    }
}

/// Copies `old` regrets — and, with `carry_average`, strategy weight — into
/// `new` wherever both tables share an `(infoset, action)` pair, bit for
/// bit, then seeds each pair in `added` with `eps_init` (in both tables when
/// the average is carried, in the regrets alone otherwise). Pairs of `added`
/// that are absent from `new` (their set may not be reachable in the new
/// restricted tree) are skipped.
///
/// Panics when a pair in `added` already exists in `old`: the caller claimed
/// it was new.
pub fn carry_profile(
    old: &Profile,
    new: &mut Profile,
    added: &[(InfosetKey, Action)],
    eps_init: f64,
    carry_average: bool,
) {
    for slot in 0..new.len() {
        let key = new.by_slot(slot).0.clone();
        let Some(old_data) = old.get(key.as_bytes()) else {
            continue;
        };
        let data = new.by_slot_mut(slot).1;
        for (k, action) in data.actions.clone().iter().enumerate() {
            if let Some(j) = old_data.actions.iter().position(|a| a == action) {
                data.regret[k] = old_data.regret[j];
                if carry_average {
                    data.strat_sum[k] = old_data.strat_sum[j];
                }
            }
        }
    }
    for (key, action) in added {
        if let Some(old_data) = old.get(key.as_bytes()) {
            assert!(
                !old_data.actions.contains(action),
                "warm start: pair ({key}, {action}) was marked new but already exists"
            );
        }
        if let Some(data) = new.get_mut(key.as_bytes()) {
            if let Some(k) = data.actions.iter().position(|a| a == action) {
                data.regret[k] = eps_init;
                if carry_average {
                    data.strat_sum[k] = eps_init;
                }
            }
        }
    }
}
