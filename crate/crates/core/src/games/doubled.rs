//! A wrapper that duplicates every decision action of an inner game.
//!
//! Action `a` of the inner game appears as the pair `2a` and `2a + 1`; both
//! lead to identical subtrees and produce the same observation symbol, so the
//! wrapped game has the same information sets as the inner game with twice as
//! many actions at each. Chance nodes are passed through unchanged. This is
//! used for the `leduc_dummy` benchmark, where the duplicated actions reward
//! solvers that do not enumerate the full action set.

use std::sync::Arc;

use crate::game::{Action, Game, Player, State, ToPlay};

pub struct DoubledActions {
    name: String,
    inner: Arc<dyn Game>,
}

impl DoubledActions {
    pub fn new(name: &str, inner: Arc<dyn Game>) -> DoubledActions {
        DoubledActions {
            name: name.to_string(),
            inner,
        }
    }
}

impl Game for DoubledActions {
    fn name(&self) -> &str {
        &self.name
    }

    fn root(&self) -> Box<dyn State> {
        Box::new(DoubledState {
            inner: self.inner.root(),
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

struct DoubledState {
    inner: Box<dyn State>,
}

impl DoubledState {
    fn is_decision(&self) -> bool {
        matches!(self.inner.to_play(), ToPlay::Player(_))
    }
}

impl State for DoubledState {
    fn to_play(&self) -> ToPlay {
        self.inner.to_play()
    }

    fn legal_actions(&self, out: &mut Vec<Action>) {
        self.inner.legal_actions(out);
        if self.is_decision() {
            let doubled: Vec<Action> = out
                .iter()
                .flat_map(|&a| [2 * a, 2 * a + 1])
                .collect();
            *out = doubled;
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
        if self.is_decision() {
            self.inner.observed_action(action / 2)
        } else {
            self.inner.observed_action(action)
        }
    }

    fn action_label(&self, action: Action) -> String {
        if self.is_decision() {
            format!("{}#{}", self.inner.action_label(action / 2), action % 2)
        } else {
            self.inner.action_label(action)
        }
    }

    fn child(&self, action: Action) -> Box<dyn State> {
        let inner_action = if self.is_decision() { action / 2 } else { action };
        Box::new(DoubledState {
            inner: self.inner.child(inner_action),
        })
    }
}
