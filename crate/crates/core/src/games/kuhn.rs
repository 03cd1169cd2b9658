//! Kuhn poker with a configurable stack.
//!
//! Three cards (J < Q < K), one dealt to each player, ante 1. Player one may
//! check or bet any integer amount `1..=stack-1`; facing a bet the opponent
//! may only fold or call. After a check, player two gets the same choice and
//! player one responds to a bet with fold or call. `stack = 2` is classic
//! Kuhn poker (the only bet size is 1); `stack = 40` is the large variant
//! with 39 bet sizes.

use crate::game::{Action, Game, Player, State, ToPlay};
use crate::games::ConfigError;

const CARDS: [char; 3] = ['J', 'Q', 'K'];

pub struct Kuhn {
    name: String,
    stack: u32,
}

impl Kuhn {
    /// `stack` is each player's total chips including the ante; legal bet
    /// sizes are `1..=stack-1`.
    pub fn new(name: &str, stack: u32) -> Result<Kuhn, ConfigError> {
        if stack < 2 {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!("stack must be at least 2, got {}", stack),
            });
        }
        if stack > 200 {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!("stack must be at most 200, got {}", stack),
            });
        }
        Ok(Kuhn {
            name: name.to_string(),
            stack,
        })
    }

    pub fn stack(&self) -> u32 {
        self.stack
    }
}

impl Game for Kuhn {
    fn name(&self) -> &str {
        &self.name
    }

    fn root(&self) -> Box<dyn State> {
        Box::new(KuhnState {
            stack: self.stack,
            cards: [None, None],
            seq: [0; 3],
            seq_len: 0,
        })
    }

    fn utility_range(&self) -> (f64, f64) {
        // Largest pot: bet of stack-1 called, plus the ante.
        let m = f64::from(self.stack);
        (-m, m)
    }

    fn horizon(&self) -> usize {
        3
    }

    fn max_path_len(&self) -> usize {
        // root chance, second deal, three decisions, terminal
        6
    }
}

#[derive(Clone)]
struct KuhnState {
    stack: u32,
    cards: [Option<u8>; 2],
    seq: [u8; 3],
    seq_len: u8,
}

enum Phase {
    Deal(usize),
    /// Acting player may check (0) or bet `1..=stack-1`.
    Open(Player),
    /// Acting player faces a bet and may fold (0) or call (1).
    Facing(Player),
    Terminal,
}

impl KuhnState {
    fn seq(&self) -> &[u8] {
        &self.seq[..self.seq_len as usize]
    }

    fn phase(&self) -> Phase {
        if self.cards[0].is_none() {
            return Phase::Deal(0);
        }
        if self.cards[1].is_none() {
            return Phase::Deal(1);
        }
        match *self.seq() {
            [] => Phase::Open(Player::One),
            [0] => Phase::Open(Player::Two),
            [_] => Phase::Facing(Player::Two),
            [0, 0] => Phase::Terminal,
            [0, _] => Phase::Facing(Player::One),
            _ => Phase::Terminal,
        }
    }

    fn acting(&self) -> Player {
        match self.phase() {
            Phase::Open(p) | Phase::Facing(p) => p,
            _ => panic!("no acting player at this node"),
        }
    }

    /// Appends one betting action to the key encoding: `x` check, `b<n>` bet,
    /// `f` fold, `c` call.
    fn push_symbol(out: &mut Vec<u8>, prev_was_bet: bool, action: u8) {
        if prev_was_bet {
            out.push(if action == 0 { b'f' } else { b'c' });
        } else if action == 0 {
            out.push(b'x');
        } else {
            out.push(b'b');
            out.extend_from_slice(action.to_string().as_bytes());
        }
    }

    fn write_seq(&self, out: &mut Vec<u8>) {
        let mut prev_was_bet = false;
        for &a in self.seq() {
            Self::push_symbol(out, prev_was_bet, a);
            prev_was_bet = a != 0 && !prev_was_bet;
        }
    }
}

impl State for KuhnState {
    fn to_play(&self) -> ToPlay {
        match self.phase() {
            Phase::Deal(_) => ToPlay::Chance,
            Phase::Open(p) | Phase::Facing(p) => ToPlay::Player(p),
            Phase::Terminal => ToPlay::Terminal,
        }
    }

    fn legal_actions(&self, out: &mut Vec<Action>) {
        out.clear();
        match self.phase() {
            Phase::Deal(0) => out.extend([0, 1, 2]),
            Phase::Deal(_) => {
                let dealt = self.cards[0].unwrap();
                out.extend((0..3).filter(|&c| c != dealt as usize));
            }
            Phase::Open(_) => out.extend(0..self.stack as usize),
            Phase::Facing(_) => out.extend([0, 1]),
            Phase::Terminal => panic!("legal_actions on terminal node"),
        }
    }

    fn chance_outcomes(&self, out: &mut Vec<(Action, f64)>) {
        out.clear();
        match self.phase() {
            Phase::Deal(0) => out.extend([(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]),
            Phase::Deal(_) => {
                let dealt = self.cards[0].unwrap();
                out.extend((0..3).filter(|&c| c != dealt as usize).map(|c| (c, 0.5)));
            }
            _ => panic!("chance_outcomes on non-chance node"),
        }
    }

    fn payoff(&self, player: Player) -> f64 {
        let p1 = match *self.seq() {
            [0, 0] => self.showdown(1),
            [b, 0] if b != 0 => 1.0, // player two folded to the opening bet
            [b, 1] if b != 0 => self.showdown(1 + i64::from(b)),
            [0, _, 0] => -1.0, // player one folded to the check-raise bet
            [0, b, 1] => self.showdown(1 + i64::from(b)),
            _ => panic!("payoff on non-terminal node"),
        };
        match player {
            Player::One => p1,
            Player::Two => -p1,
        }
    }

    fn write_key(&self, buf: &mut Vec<u8>) {
        buf.clear();
        let player = self.acting();
        buf.push(player.tag());
        buf.push(b'|');
        buf.push(CARDS[self.cards[player.index()].unwrap() as usize] as u8);
        buf.push(b'|');
        self.write_seq(buf);
    }

    fn action_label(&self, action: Action) -> String {
        match self.phase() {
            Phase::Deal(_) => format!("deal:{}", CARDS[action]),
            Phase::Open(_) => {
                if action == 0 {
                    "check".to_string()
                } else {
                    format!("bet:{}", action)
                }
            }
            Phase::Facing(_) => {
                if action == 0 {
                    "fold".to_string()
                } else {
                    "call".to_string()
                }
            }
            Phase::Terminal => panic!("action_label on terminal node"),
        }
    }

    fn child(&self, action: Action) -> Box<dyn State> {
        let mut next = self.clone();
        match self.phase() {
            Phase::Deal(i) => next.cards[i] = Some(action as u8),
            Phase::Open(_) | Phase::Facing(_) => {
                next.seq[next.seq_len as usize] = action as u8;
                next.seq_len += 1;
            }
            Phase::Terminal => panic!("child on terminal node"),
        }
        Box::new(next)
    }
}

impl KuhnState {
    /// Player one's payoff at showdown for a per-player stake of `stake`.
    fn showdown(&self, stake: i64) -> f64 {
        let c1 = self.cards[0].unwrap();
        let c2 = self.cards[1].unwrap();
        if c1 > c2 {
            stake as f64
        } else {
            -(stake as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deal(game: &Kuhn, c1: Action, c2: Action) -> Box<dyn State> {
        game.root().child(c1).child(c2)
    }

    #[test]
    fn root_deal_probabilities() {
        let game = Kuhn::new("kuhn", 2).unwrap();
        let root = game.root();
        assert_eq!(root.to_play(), ToPlay::Chance);
        let mut out = Vec::new();
        root.chance_outcomes(&mut out);
        assert_eq!(out, vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]);
        let second = root.child(1);
        second.chance_outcomes(&mut out);
        assert_eq!(out, vec![(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn classic_kuhn_action_menus() {
        let game = Kuhn::new("kuhn", 2).unwrap();
        let p1 = deal(&game, 0, 1);
        assert_eq!(p1.to_play(), ToPlay::Player(Player::One));
        assert_eq!(p1.actions(), vec![0, 1]);
        assert_eq!(p1.action_label(0), "check");
        assert_eq!(p1.action_label(1), "bet:1");
        let facing = p1.child(1);
        assert_eq!(facing.to_play(), ToPlay::Player(Player::Two));
        assert_eq!(facing.actions(), vec![0, 1]);
        assert_eq!(facing.action_label(0), "fold");
        assert_eq!(facing.action_label(1), "call");
    }

    #[test]
    fn large_variant_has_thirty_nine_bet_sizes() {
        let game = Kuhn::new("large_kuhn", 40).unwrap();
        let p1 = deal(&game, 0, 1);
        let actions = p1.actions();
        assert_eq!(actions.len(), 40); // check plus bets 1..=39
        assert_eq!(actions[0], 0);
        assert_eq!(*actions.last().unwrap(), 39);
        // Facing any bet: fold or call only.
        let facing = p1.child(17);
        assert_eq!(facing.actions(), vec![0, 1]);
    }

    #[test]
    fn payoffs_match_hand_computed_lines() {
        let game = Kuhn::new("kuhn", 2).unwrap();
        // J vs Q, check-check: player one loses the ante.
        let t = deal(&game, 0, 1).child(0).child(0);
        assert_eq!(t.to_play(), ToPlay::Terminal);
        assert_eq!(t.payoff(Player::One), -1.0);
        assert_eq!(t.payoff(Player::Two), 1.0);
        // J vs Q, bet-fold: the bettor wins the ante regardless of cards.
        let t = deal(&game, 0, 1).child(1).child(0);
        assert_eq!(t.payoff(Player::One), 1.0);
        // J vs Q, bet-call: showdown for ante plus bet.
        let t = deal(&game, 0, 1).child(1).child(1);
        assert_eq!(t.payoff(Player::One), -2.0);
        // K vs Q, check-bet-call: player one wins 2.
        let t = deal(&game, 2, 1).child(0).child(1).child(1);
        assert_eq!(t.payoff(Player::One), 2.0);
        // Q vs K, check-bet-fold: player one loses the ante only.
        let t = deal(&game, 1, 2).child(0).child(1).child(0);
        assert_eq!(t.payoff(Player::One), -1.0);
    }

    #[test]
    fn large_variant_payoff_scales_with_bet() {
        let game = Kuhn::new("large_kuhn", 40).unwrap();
        let t = deal(&game, 2, 0).child(13).child(1);
        assert_eq!(t.payoff(Player::One), 14.0); // ante 1 + bet 13
        let t = deal(&game, 0, 2).child(0).child(25).child(1);
        assert_eq!(t.payoff(Player::One), -26.0);
    }

    #[test]
    fn keys_hide_the_opponent_card() {
        let game = Kuhn::new("kuhn", 2).unwrap();
        let a = deal(&game, 0, 1); // J vs Q
        let b = deal(&game, 0, 2); // J vs K
        assert_eq!(a.infoset_key(), b.infoset_key());
        assert_eq!(a.infoset_key().to_string(), "1|J|");
        let facing = deal(&game, 1, 0).child(1); // P1 opens with a bet
        assert_eq!(facing.infoset_key().to_string(), "2|J|b1");
        let p1_facing = deal(&game, 1, 2).child(0).child(1);
        assert_eq!(p1_facing.infoset_key().to_string(), "1|Q|xb1");
    }

    #[test]
    fn stack_bounds_are_validated() {
        assert!(Kuhn::new("kuhn", 1).is_err());
        assert!(Kuhn::new("kuhn", 201).is_err());
        assert!(Kuhn::new("kuhn", 2).is_ok());
    }

    #[test]
    #[should_panic(expected = "payoff on non-terminal")]
    fn payoff_on_decision_node_panics() {
        let game = Kuhn::new("kuhn", 2).unwrap();
        deal(&game, 0, 1).payoff(Player::One);
    }

    #[test]
    #[should_panic(expected = "chance_outcomes on non-chance")]
    fn chance_outcomes_on_decision_node_panics() {
        let game = Kuhn::new("kuhn", 2).unwrap();
        let mut out = Vec::new();
        deal(&game, 0, 1).chance_outcomes(&mut out);
    }
}
