//! Core abstractions for two-player zero-sum extensive-form games.
//!
//! A game is exposed as a lazily traversed tree: [`Game::root`] yields the
//! initial [`State`], and states answer local queries (who acts, which actions
//! are legal, chance outcome probabilities, terminal payoffs) and produce child
//! states. Nothing here materializes the tree; see [`crate::compile`] for the
//! enumeration pass used by the solvers and the command-line tools.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the two strategic players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    /// The other strategic player.
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// Index into two-element per-player arrays.
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    /// ASCII tag used as the first byte of information-set keys.
    pub fn tag(self) -> u8 {
        match self {
            Player::One => b'1',
            Player::Two => b'2',
        }
    }

    /// Both players, in fixed order.
    pub fn both() -> [Player; 2] {
        [Player::One, Player::Two]
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::One => write!(f, "player1"),
            Player::Two => write!(f, "player2"),
        }
    }
}

/// Classification of a history node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToPlay {
    /// A decision node owned by a strategic player.
    Player(Player),
    /// A chance node with fixed outcome probabilities.
    Chance,
    /// A terminal node carrying payoffs.
    Terminal,
}

/// Identifier of an action at a node. Action ids are stable within an
/// information set (every member history exposes the same list) but need not
/// be contiguous; games pick ids that read well (bet sizes, force strengths).
pub type Action = usize;

/// Identifier of an information set.
///
/// The first byte is the owning player's tag (`'1'` or `'2'`); the rest is a
/// printable ASCII encoding of everything the player has observed. Keys are
/// compared and hashed as raw bytes and render losslessly as text, which keeps
/// population snapshots and policy files human-readable and round-trippable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfosetKey(Box<[u8]>);

impl InfosetKey {
    pub fn from_bytes(bytes: &[u8]) -> InfosetKey {
        InfosetKey(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Owning player, decoded from the leading tag byte.
    pub fn player(&self) -> Player {
        match self.0.first() {
            Some(&b'1') => Player::One,
            Some(&b'2') => Player::Two,
            other => panic!("malformed infoset key: leading byte {:?}", other),
        }
    }
}

impl Borrow<[u8]> for InfosetKey {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

impl Serialize for InfosetKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match std::str::from_utf8(&self.0) {
            Ok(s) => serializer.serialize_str(s),
            Err(_) => Err(serde::ser::Error::custom(
                "infoset key is not valid UTF-8",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for InfosetKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<InfosetKey, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(InfosetKey::from_bytes(s.as_bytes()))
    }
}

impl fmt::Display for InfosetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Debug for InfosetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InfosetKey({})", self)
    }
}

/// A history node of a game, produced by [`Game::root`] or [`State::child`].
///
/// Contract notes: [`State::payoff`] may only be called on terminal nodes,
/// [`State::chance_outcomes`] only on chance nodes, and [`State::write_key`]
/// only on decision nodes. Violations are programming errors and panic.
pub trait State {
    /// Who acts here (or whether the node is terminal).
    fn to_play(&self) -> ToPlay;

    /// Appends the legal action ids at a decision or chance node to `out`
    /// (cleared first). Order is fixed and identical across all histories of
    /// an information set.
    fn legal_actions(&self, out: &mut Vec<Action>);

    /// Appends `(action, probability)` pairs of a chance node to `out`
    /// (cleared first). Probabilities are strictly positive and sum to one.
    fn chance_outcomes(&self, out: &mut Vec<(Action, f64)>);

    /// Terminal payoff for `player`. The game is zero-sum:
    /// `payoff(One) + payoff(Two) == 0`.
    fn payoff(&self, player: Player) -> f64;

    /// Writes the information-set key of the acting player into `buf`
    /// (cleared first), including the leading player tag byte.
    fn write_key(&self, buf: &mut Vec<u8>);

    /// The observation symbol an action produces. Distinct actions that are
    /// indistinguishable to the players (duplicated actions) map to the same
    /// symbol; the default is the action id itself.
    fn observed_action(&self, action: Action) -> Action {
        action
    }

    /// Human-readable label for an action at this node.
    fn action_label(&self, action: Action) -> String;

    /// Child state reached by `action`.
    fn child(&self, action: Action) -> Box<dyn State>;
}

impl dyn State + '_ {
    /// Convenience: the information-set key as an owned value.
    pub fn infoset_key(&self) -> InfosetKey {
        let mut buf = Vec::new();
        self.write_key(&mut buf);
        InfosetKey::from_bytes(&buf)
    }

    /// Convenience: legal actions as an owned vector.
    pub fn actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        self.legal_actions(&mut out);
        out
    }
}

/// A two-player zero-sum extensive-form game with perfect recall.
pub trait Game: Send + Sync {
    /// Registry name of the game (used in logs and output files).
    fn name(&self) -> &str;

    /// The root history.
    fn root(&self) -> Box<dyn State>;

    /// Inclusive bounds on player one's terminal payoff.
    fn utility_range(&self) -> (f64, f64);

    /// Maximum number of decision nodes on any root-to-terminal path.
    fn horizon(&self) -> usize;

    /// Maximum number of nodes (decision, chance and terminal) on any
    /// root-to-terminal path. Used to bound sampled trajectories.
    fn max_path_len(&self) -> usize;
}

/// Category a visited node is charged to. Reported benchmark abscissae sum
/// regret minimization and best response and deliberately exclude evaluation,
/// so that plotting overhead cannot distort comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitKind {
    RegretMin,
    BestResponse,
    Evaluation,
}

/// Monotone counters of visited history nodes, by category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounter {
    pub regret_min: u64,
    pub best_response: u64,
    pub evaluation: u64,
}

impl NodeCounter {
    pub fn new() -> NodeCounter {
        NodeCounter::default()
    }

    /// Records one visited node.
    pub fn count(&mut self, kind: VisitKind) {
        self.count_many(kind, 1);
    }

    /// Records `n` visited nodes.
    pub fn count_many(&mut self, kind: VisitKind, n: u64) {
        match kind {
            VisitKind::RegretMin => self.regret_min += n,
            VisitKind::BestResponse => self.best_response += n,
            VisitKind::Evaluation => self.evaluation += n,
        }
    }

    /// The abscissa reported in benchmarks: regret minimization plus best
    /// response, excluding evaluation.
    pub fn reported(&self) -> u64 {
        self.regret_min + self.best_response
    }
}
