//! Oshi-Zumo: a simultaneous bidding game over a pushing token.
//!
//! Both players start with `coins` coins. A token sits in the middle of a
//! board of length `2k + 1`. Each turn both players bid simultaneously — at
//! least one coin while any remain, a forced zero bid once broke — and both
//! bids are paid. The higher bidder pushes the token one step toward the
//! opponent's edge; equal bids leave it in place. The game ends when the token
//! is pushed off an edge (win for the pusher, payoff ±1) or when both players
//! are broke (payoff 0). Simultaneity is modeled by letting player one bid
//! first each turn without player two observing the pending bid; resolved
//! turns are public.

use crate::game::{Action, Game, Player, State, ToPlay};
use crate::games::ConfigError;

pub struct OshiZumo {
    name: String,
    coins: u32,
    k: u32,
}

impl OshiZumo {
    pub fn new(name: &str, coins: u32, k: u32) -> Result<OshiZumo, ConfigError> {
        if coins < 1 || coins > 100 {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!("coins must be in 1..=100, got {}", coins),
            });
        }
        if k < 1 || k > 100 {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!("k must be in 1..=100, got {}", k),
            });
        }
        Ok(OshiZumo {
            name: name.to_string(),
            coins,
            k,
        })
    }

    /// Number of board cells, `2k + 1`.
    pub fn board_len(&self) -> u32 {
        2 * self.k + 1
    }
}

impl Game for OshiZumo {
    fn name(&self) -> &str {
        &self.name
    }

    fn root(&self) -> Box<dyn State> {
        Box::new(OshiState {
            k: self.k as i32,
            coins: [self.coins, self.coins],
            pos: 0,
            pending: None,
            history: Vec::new(),
        })
    }

    fn utility_range(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    fn horizon(&self) -> usize {
        // Every turn consumes at least one coin overall, two decisions per turn.
        2 * (2 * self.coins as usize)
    }

    fn max_path_len(&self) -> usize {
        self.horizon() + 1
    }
}

#[derive(Clone)]
struct OshiState {
    k: i32,
    coins: [u32; 2],
    /// Token position: 0 is the middle, positive is toward player two's edge.
    pos: i32,
    /// Player one's bid this turn, hidden from player two.
    pending: Option<u32>,
    /// Resolved turns as (player one bid, player two bid).
    history: Vec<(u8, u8)>,
}

impl OshiState {
    fn pushed_off(&self) -> bool {
        self.pos.abs() > self.k
    }

    fn finished(&self) -> bool {
        self.pushed_off() || (self.pending.is_none() && self.coins == [0, 0])
    }

    fn bids_for(&self, player: Player, out: &mut Vec<Action>) {
        let c = self.coins[player.index()];
        if c == 0 {
            out.push(0);
        } else {
            out.extend(1..=c as usize);
        }
    }
}

impl State for OshiState {
    fn to_play(&self) -> ToPlay {
        if self.finished() {
            ToPlay::Terminal
        } else if self.pending.is_none() {
            ToPlay::Player(Player::One)
        } else {
            ToPlay::Player(Player::Two)
        }
    }

    fn legal_actions(&self, out: &mut Vec<Action>) {
        out.clear();
        match self.to_play() {
            ToPlay::Player(p) => self.bids_for(p, out),
            _ => panic!("legal_actions on terminal node"),
        }
    }

    fn chance_outcomes(&self, _out: &mut Vec<(Action, f64)>) {
        panic!("chance_outcomes on non-chance node: the game has no chance nodes");
    }

    fn payoff(&self, player: Player) -> f64 {
        if !self.finished() {
            panic!("payoff on non-terminal node");
        }
        let p1 = if self.pos > self.k {
            1.0
        } else if self.pos < -self.k {
            -1.0
        } else {
            0.0
        };
        match player {
            Player::One => p1,
            Player::Two => -p1,
        }
    }

    fn write_key(&self, buf: &mut Vec<u8>) {
        buf.clear();
        let player = match self.to_play() {
            ToPlay::Player(p) => p,
            _ => panic!("write_key on non-decision node"),
        };
        buf.push(player.tag());
        buf.push(b'|');
        // Both players observe all resolved turns but not a pending bid.
        for (i, &(b1, b2)) in self.history.iter().enumerate() {
            if i > 0 {
                buf.push(b',');
            }
            buf.extend_from_slice(b1.to_string().as_bytes());
            buf.push(b':');
            buf.extend_from_slice(b2.to_string().as_bytes());
        }
    }

    fn action_label(&self, action: Action) -> String {
        format!("bid:{}", action)
    }

    fn child(&self, action: Action) -> Box<dyn State> {
        let mut next = self.clone();
        match self.pending {
            None => next.pending = Some(action as u32),
            Some(b1) => {
                let b2 = action as u32;
                next.coins[0] -= b1;
                next.coins[1] -= b2;
                next.pos += match b1.cmp(&b2) {
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Less => -1,
                    std::cmp::Ordering::Equal => 0,
                };
                next.pending = None;
                next.history.push((b1 as u8, b2 as u8));
            }
        }
        Box::new(next)
    }
}
