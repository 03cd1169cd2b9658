//! Game-contract verification.
//!
//! [`verify_game`] walks a game definition directly (without going through
//! [`crate::compile`]) and checks the properties every solver in this crate
//! relies on:
//!
//! 1. terminal payoffs are zero-sum,
//! 2. chance outcomes are strictly positive and sum to one,
//! 3. action menus are duplicate-free and identical across an information
//!    set's member nodes,
//! 4. information-set keys claim the player who is actually to act,
//! 5. perfect recall: all members of an information set agree on the owner's
//!    past information sets and observed actions,
//! 6. repeated enumeration produces the identical tree.

use indexmap::IndexMap;
use thiserror::Error;

use crate::compile::{CompiledGame, NodeKind};
use crate::game::{Action, Game, InfosetKey, Player, State, ToPlay};

const TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("terminal payoffs sum to {sum:e}, expected 0")]
    NotZeroSum { sum: f64 },
    #[error("chance outcomes sum to {sum}, expected 1")]
    BadChanceSum { sum: f64 },
    #[error("chance outcome has non-positive probability {prob}")]
    BadChanceProb { prob: f64 },
    #[error("decision node has no legal actions")]
    EmptyMenu,
    #[error("action menu at {key} contains duplicate action {action}")]
    DuplicateAction { key: String, action: Action },
    #[error("information set {key} has inconsistent action menus")]
    InconsistentMenus { key: String },
    #[error("information set {key} is keyed to player {claimed} but player {actual} acts there")]
    KeyPlayerMismatch {
        key: String,
        claimed: char,
        actual: char,
    },
    #[error("information set {key} violates perfect recall")]
    ImperfectRecall { key: String },
    #[error("re-enumerating the game produced a different tree")]
    NonDeterministic,
}

/// A player's view of their own past: the information sets they acted at and
/// the observation symbol of each action they took.
type OwnHistory = Vec<(InfosetKey, Action)>;

struct Seen {
    actions: Vec<Action>,
    history: OwnHistory,
}

struct Walker {
    seen: IndexMap<InfosetKey, Seen>,
}

impl Walker {
    fn walk(
        &mut self,
        state: &dyn State,
        histories: &mut [OwnHistory; 2],
    ) -> Result<(), VerifyError> {
        match state.to_play() {
            ToPlay::Terminal => {
                let sum = state.payoff(Player::One) + state.payoff(Player::Two);
                if sum.abs() > TOL {
                    return Err(VerifyError::NotZeroSum { sum });
                }
                Ok(())
            }
            ToPlay::Chance => {
                let mut outcomes = Vec::new();
                state.chance_outcomes(&mut outcomes);
                let mut total = 0.0;
                for &(_, prob) in &outcomes {
                    if prob <= 0.0 {
                        return Err(VerifyError::BadChanceProb { prob });
                    }
                    total += prob;
                }
                if (total - 1.0).abs() > TOL {
                    return Err(VerifyError::BadChanceSum { sum: total });
                }
                for (action, _) in outcomes {
                    self.walk(state.child(action).as_ref(), histories)?;
                }
                Ok(())
            }
            ToPlay::Player(player) => {
                let key = state.infoset_key();
                let claimed = key.player();
                if claimed != player {
                    return Err(VerifyError::KeyPlayerMismatch {
                        key: key.to_string(),
                        claimed: claimed.tag() as char,
                        actual: player.tag() as char,
                    });
                }
                let actions = state.actions();
                if actions.is_empty() {
                    return Err(VerifyError::EmptyMenu);
                }
                for (i, &a) in actions.iter().enumerate() {
                    if actions[..i].contains(&a) {
                        return Err(VerifyError::DuplicateAction {
                            key: key.to_string(),
                            action: a,
                        });
                    }
                }
                let own = &histories[player.index()];
                match self.seen.get(&key) {
                    Some(prev) => {
                        if prev.actions != actions {
                            return Err(VerifyError::InconsistentMenus {
                                key: key.to_string(),
                            });
                        }
                        if &prev.history != own {
                            return Err(VerifyError::ImperfectRecall {
                                key: key.to_string(),
                            });
                        }
                    }
                    None => {
                        self.seen.insert(
                            key.clone(),
                            Seen {
                                actions: actions.clone(),
                                history: own.clone(),
                            },
                        );
                    }
                }
                for &action in &actions {
                    histories[player.index()].push((key.clone(), state.observed_action(action)));
                    self.walk(state.child(action).as_ref(), histories)?;
                    histories[player.index()].pop();
                }
                Ok(())
            }
        }
    }
}

/// Checks the full game contract; see the module documentation for the list.
pub fn verify_game(game: &dyn Game) -> Result<(), VerifyError> {
    let mut walker = Walker {
        seen: IndexMap::new(),
    };
    let root = game.root();
    walker.walk(root.as_ref(), &mut [Vec::new(), Vec::new()])?;

    let a = CompiledGame::build(game);
    let b = CompiledGame::build(game);
    if !same_tree(&a, &b) {
        return Err(VerifyError::NonDeterministic);
    }
    Ok(())
}

fn same_tree(a: &CompiledGame, b: &CompiledGame) -> bool {
    if a.nodes.len() != b.nodes.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    if a.stats != b.stats {
        return false;
    }
    for (x, y) in a.nodes.iter().zip(b.nodes.iter()) {
        let same = match (x.kind, y.kind) {
            (
                NodeKind::Terminal { payoff_one: p },
                NodeKind::Terminal { payoff_one: q },
            ) => p == q,
            (kx, ky) => kx == ky,
        };
        if !same {
            return false;
        }
    }
    for (x, y) in a.edges.iter().zip(b.edges.iter()) {
        if x.action != y.action || x.prob != y.prob || x.child != y.child {
            return false;
        }
    }
    a.infoset_ids.keys().eq(b.infoset_ids.keys())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{build_game, known_games, GameConfig};

    #[test]
    fn every_registry_game_verifies() {
        for &name in known_games() {
            let game = build_game(&GameConfig::new(name)).unwrap();
            verify_game(game.as_ref()).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    /// A two-move toy game with a configurable contract violation.
    #[derive(Clone, Copy, PartialEq)]
    enum Breakage {
        None,
        NotZeroSum,
        BadChanceSum,
        NegativeChanceProb,
        ForgetfulKey,
        MenuMismatch,
        WrongPlayerTag,
    }

    struct Toy {
        breakage: Breakage,
    }

    impl Game for Toy {
        fn name(&self) -> &str {
            "toy"
        }
        fn root(&self) -> Box<dyn State> {
            Box::new(ToyState {
                breakage: self.breakage,
                path: Vec::new(),
            })
        }
        fn utility_range(&self) -> (f64, f64) {
            (-1.0, 1.0)
        }
        fn horizon(&self) -> usize {
            2
        }
        fn max_path_len(&self) -> usize {
            4
        }
    }

    #[derive(Clone)]
    struct ToyState {
        breakage: Breakage,
        path: Vec<Action>,
    }

    impl State for ToyState {
        fn to_play(&self) -> ToPlay {
            let chance_first = matches!(
                self.breakage,
                Breakage::BadChanceSum | Breakage::NegativeChanceProb | Breakage::MenuMismatch
            );
            match (chance_first, self.path.len()) {
                (true, 0) => ToPlay::Chance,
                (true, 1) => ToPlay::Player(Player::One),
                (true, _) => ToPlay::Terminal,
                (false, 0) | (false, 1) => ToPlay::Player(Player::One),
                (false, _) => ToPlay::Terminal,
            }
        }

        fn legal_actions(&self, out: &mut Vec<Action>) {
            out.clear();
            out.push(0);
            out.push(1);
            if self.breakage == Breakage::MenuMismatch && self.path == [1] {
                out.push(2);
            }
        }

        fn chance_outcomes(&self, out: &mut Vec<(Action, f64)>) {
            out.clear();
            match self.breakage {
                Breakage::BadChanceSum => out.extend([(0, 0.5), (1, 0.4)]),
                Breakage::NegativeChanceProb => out.extend([(0, 1.5), (1, -0.5)]),
                _ => out.extend([(0, 0.5), (1, 0.5)]),
            }
        }

        fn payoff(&self, player: Player) -> f64 {
            let one = if self.path.iter().sum::<usize>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            match (self.breakage, player) {
                (Breakage::NotZeroSum, Player::Two) => one,
                (_, Player::One) => one,
                (_, Player::Two) => -one,
            }
        }

        fn write_key(&self, buf: &mut Vec<u8>) {
            if self.breakage == Breakage::WrongPlayerTag {
                buf.extend_from_slice(b"2|oops");
                return;
            }
            buf.push(b'1');
            buf.push(b'|');
            match self.breakage {
                // Forgets which action was taken at the first decision.
                Breakage::ForgetfulKey => buf.push(b's'),
                // Hides the chance outcome so both branches share one key
                // while exposing different menus.
                Breakage::MenuMismatch => buf.push(b'm'),
                _ => {
                    for &a in &self.path {
                        buf.push(b'0' + a as u8);
                    }
                }
            }
        }

        fn action_label(&self, action: Action) -> String {
            action.to_string()
        }

        fn child(&self, action: Action) -> Box<dyn State> {
            let mut next = self.clone();
            next.path.push(action);
            Box::new(next)
        }
    }

    fn check(breakage: Breakage) -> Result<(), VerifyError> {
        verify_game(&Toy { breakage })
    }

    #[test]
    fn intact_toy_verifies() {
        check(Breakage::None).unwrap();
    }

    #[test]
    fn zero_sum_violations_are_caught() {
        assert!(matches!(
            check(Breakage::NotZeroSum),
            Err(VerifyError::NotZeroSum { .. })
        ));
    }

    #[test]
    fn chance_normalization_is_checked() {
        assert!(matches!(
            check(Breakage::BadChanceSum),
            Err(VerifyError::BadChanceSum { .. })
        ));
        assert!(matches!(
            check(Breakage::NegativeChanceProb),
            Err(VerifyError::BadChanceProb { .. })
        ));
    }

    #[test]
    fn imperfect_recall_is_caught() {
        // The second decision's key hides the first action, so the two paths
        // into it disagree on the owner's own history.
        assert!(matches!(
            check(Breakage::ForgetfulKey),
            Err(VerifyError::ImperfectRecall { .. })
        ));
    }

    #[test]
    fn menu_mismatches_within_an_infoset_are_caught() {
        // Both chance branches lead to the key "1|" but with menus of
        // different sizes.
        assert!(matches!(
            check(Breakage::MenuMismatch),
            Err(VerifyError::InconsistentMenus { .. })
        ));
    }

    #[test]
    fn key_player_tags_are_checked() {
        assert!(matches!(
            check(Breakage::WrongPlayerTag),
            Err(VerifyError::KeyPlayerMismatch { .. })
        ));
    }
}
