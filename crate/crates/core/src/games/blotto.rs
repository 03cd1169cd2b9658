//! A sequential Colonel Blotto variant with perfect information.
//!
//! Each player owns one force of every strength `0..forces`, usable once.
//! Players alternate deployments (player one first) over `deployments` rounds;
//! both deployments of a round are public before the next round. A round's
//! outcome is the difference of the deployed strengths and the terminal payoff
//! is the sum of round outcomes (or, in sign mode, the sum of round-outcome
//! signs).

use crate::game::{Action, Game, Player, State, ToPlay};
use crate::games::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlottoOutcome {
    /// Round outcome is the raw strength difference.
    Difference,
    /// Round outcome is the sign of the strength difference.
    Sign,
}

pub struct Blotto {
    name: String,
    forces: u32,
    deployments: u32,
    outcome: BlottoOutcome,
}

impl Blotto {
    pub fn new(
        name: &str,
        forces: u32,
        deployments: u32,
        outcome: BlottoOutcome,
    ) -> Result<Blotto, ConfigError> {
        if forces < 1 || forces > 64 {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!("forces must be in 1..=64, got {}", forces),
            });
        }
        if deployments < 1 || deployments > forces {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!(
                    "deployments must be in 1..=forces ({}), got {}",
                    forces, deployments
                ),
            });
        }
        Ok(Blotto {
            name: name.to_string(),
            forces,
            deployments,
            outcome,
        })
    }
}

impl Game for Blotto {
    fn name(&self) -> &str {
        &self.name
    }

    fn root(&self) -> Box<dyn State> {
        Box::new(BlottoState {
            forces: self.forces,
            deployments: self.deployments,
            outcome: self.outcome,
            seq: Vec::new(),
        })
    }

    fn utility_range(&self) -> (f64, f64) {
        let m = match self.outcome {
            BlottoOutcome::Difference => {
                // Strongest vs weakest forces in every round.
                let d = self.deployments as i64;
                let f = self.forces as i64;
                (0..d).map(|i| (f - 1 - i) - i).sum::<i64>() as f64
            }
            BlottoOutcome::Sign => self.deployments as f64,
        };
        (-m, m)
    }

    fn horizon(&self) -> usize {
        2 * self.deployments as usize
    }

    fn max_path_len(&self) -> usize {
        2 * self.deployments as usize + 1
    }
}

#[derive(Clone)]
struct BlottoState {
    forces: u32,
    deployments: u32,
    outcome: BlottoOutcome,
    /// Deployed strengths in move order (P1, P2, P1, P2, ...).
    seq: Vec<u8>,
}

impl BlottoState {
    fn mover(&self) -> Option<Player> {
        if self.seq.len() >= 2 * self.deployments as usize {
            None
        } else if self.seq.len() % 2 == 0 {
            Some(Player::One)
        } else {
            Some(Player::Two)
        }
    }

    fn used_by(&self, player: Player) -> impl Iterator<Item = u8> + '_ {
        self.seq
            .iter()
            .copied()
            .skip(player.index())
            .step_by(2)
    }
}

impl State for BlottoState {
    fn to_play(&self) -> ToPlay {
        match self.mover() {
            Some(p) => ToPlay::Player(p),
            None => ToPlay::Terminal,
        }
    }

    fn legal_actions(&self, out: &mut Vec<Action>) {
        out.clear();
        let player = match self.mover() {
            Some(p) => p,
            None => panic!("legal_actions on terminal node"),
        };
        let used: Vec<u8> = self.used_by(player).collect();
        out.extend((0..self.forces as usize).filter(|&s| !used.contains(&(s as u8))));
    }

    fn chance_outcomes(&self, _out: &mut Vec<(Action, f64)>) {
        panic!("chance_outcomes on non-chance node: the game has no chance nodes");
    }

    fn payoff(&self, player: Player) -> f64 {
        if self.mover().is_some() {
            panic!("payoff on non-terminal node");
        }
        let p1: i64 = self
            .seq
            .chunks(2)
            .map(|round| {
                let diff = i64::from(round[0]) - i64::from(round[1]);
                match self.outcome {
                    BlottoOutcome::Difference => diff,
                    BlottoOutcome::Sign => diff.signum(),
                }
            })
            .sum();
        let p1 = p1 as f64;
        match player {
            Player::One => p1,
            Player::Two => -p1,
        }
    }

    fn write_key(&self, buf: &mut Vec<u8>) {
        buf.clear();
        let player = match self.mover() {
            Some(p) => p,
            None => panic!("write_key on non-decision node"),
        };
        buf.push(player.tag());
        buf.push(b'|');
        // Perfect information: the full deployment history is observed.
        for (i, s) in self.seq.iter().enumerate() {
            if i > 0 {
                buf.push(b',');
            }
            buf.extend_from_slice(s.to_string().as_bytes());
        }
    }

    fn action_label(&self, action: Action) -> String {
        format!("deploy:{}", action)
    }

    fn child(&self, action: Action) -> Box<dyn State> {
        let mut next = self.clone();
        next.seq.push(action as u8);
        Box::new(next)
    }
}
