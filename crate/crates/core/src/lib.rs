//! Tabular solvers for two-player zero-sum extensive-form games.
//!
//! The crate provides:
//!
//! * a small game interface ([`game`]) with a registry of benchmark games
//!   ([`games`]),
//! * exact and sampled counterfactual-regret solvers over tabular policies,
//! * best response, exploitability, and expected-value evaluation,
//! * a double-oracle engine that restricts the game to a growing population
//!   of actions and expands it on a configurable schedule, and
//! * run logging with deterministic, resumable snapshots.
//!
//! All iteration orders are deterministic: tables use insertion-ordered maps
//! and randomness flows from a single seeded generator.

pub mod cfr;
pub mod compile;
pub mod engine;
pub mod eval;
pub mod game;
pub mod games;
pub mod mccfr;
pub mod profile;
pub mod restricted;
pub mod runlog;
pub mod schedule;
pub mod verify;

pub use game::{Action, Game, InfosetKey, NodeCounter, Player, State, ToPlay, VisitKind};
pub use games::{build_game, ConfigError, GameConfig};
