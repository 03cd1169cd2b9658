//! Leduc hold'em with a configurable number of ranks.
//!
//! The deck has `ranks` ranks in two suits. Each player antes 1 and receives
//! one private card. Two betting rounds follow with fixed bet sizes 2 and 4
//! and at most two bets/raises per round (the opening bet counts toward the
//! cap); player one opens both rounds. One public card is dealt between the
//! rounds. At showdown a private card pairing the public card wins, otherwise
//! the higher rank wins; equal ranks split the pot. `ranks = 3` is standard
//! Leduc, `ranks = 5` the ten-card variant.

use crate::game::{Action, Game, Player, State, ToPlay};
use crate::games::ConfigError;

const BETS: [i64; 2] = [2, 4];
const MAX_RAISES: u32 = 2;

pub struct Leduc {
    name: String,
    ranks: u8,
}

impl Leduc {
    pub fn new(name: &str, ranks: u8) -> Result<Leduc, ConfigError> {
        if ranks < 2 || ranks > 13 {
            return Err(ConfigError::InvalidParameter {
                game: name.to_string(),
                reason: format!("ranks must be in 2..=13, got {}", ranks),
            });
        }
        Ok(Leduc {
            name: name.to_string(),
            ranks,
        })
    }

    pub fn ranks(&self) -> u8 {
        self.ranks
    }
}

impl Game for Leduc {
    fn name(&self) -> &str {
        &self.name
    }

    fn root(&self) -> Box<dyn State> {
        Box::new(LeducState {
            ranks: self.ranks,
            cards: [None, None],
            public: None,
            rounds: [Seq::default(), Seq::default()],
        })
    }

    fn utility_range(&self) -> (f64, f64) {
        // Ante 1, then at most bet+raise called in each round: 4 + 8.
        (-13.0, 13.0)
    }

    fn horizon(&self) -> usize {
        8
    }

    fn max_path_len(&self) -> usize {
        // root chance, second deal, 4 decisions, public card, 4 decisions, terminal
        12
    }
}

#[derive(Clone, Copy, Default)]
struct Seq {
    acts: [u8; 4],
    len: u8,
}

impl Seq {
    fn as_slice(&self) -> &[u8] {
        &self.acts[..self.len as usize]
    }

    fn push(&mut self, a: u8) {
        self.acts[self.len as usize] = a;
        self.len += 1;
    }
}

/// Result of replaying one betting round.
struct RoundStatus {
    to_act: usize,
    raises: u32,
    outstanding: bool,
    closed: bool,
    folded: Option<usize>,
    put: [i64; 2],
}

fn scan_round(seq: &[u8], bet: i64) -> RoundStatus {
    let mut s = RoundStatus {
        to_act: 0,
        raises: 0,
        outstanding: false,
        closed: false,
        folded: None,
        put: [0, 0],
    };
    let mut checks = 0;
    for &a in seq {
        debug_assert!(!s.closed, "action after round closed");
        let actor = s.to_act;
        let opp = 1 - actor;
        if !s.outstanding {
            match a {
                0 => {
                    checks += 1;
                    if checks == 2 {
                        s.closed = true;
                    }
                }
                1 => {
                    s.put[actor] = s.put[opp] + bet;
                    s.raises += 1;
                    s.outstanding = true;
                }
                _ => panic!("illegal betting action {}", a),
            }
        } else {
            match a {
                0 => {
                    s.folded = Some(actor);
                    s.closed = true;
                }
                1 => {
                    s.put[actor] = s.put[opp];
                    s.closed = true;
                    s.outstanding = false;
                }
                2 => {
                    s.put[actor] = s.put[opp] + bet;
                    s.raises += 1;
                }
                _ => panic!("illegal betting action {}", a),
            }
        }
        s.to_act = opp;
    }
    s
}

#[derive(Clone)]
struct LeducState {
    ranks: u8,
    cards: [Option<u8>; 2],
    public: Option<u8>,
    rounds: [Seq; 2],
}

enum Phase {
    Deal(usize),
    Board,
    Act { round: usize, status: RoundStatus },
    Terminal,
}

impl LeducState {
    fn deck(&self) -> u8 {
        self.ranks * 2
    }

    fn taken(&self, card: u8) -> bool {
        self.cards[0] == Some(card) || self.cards[1] == Some(card) || self.public == Some(card)
    }

    fn phase(&self) -> Phase {
        if self.cards[0].is_none() {
            return Phase::Deal(0);
        }
        if self.cards[1].is_none() {
            return Phase::Deal(1);
        }
        let r0 = scan_round(self.rounds[0].as_slice(), BETS[0]);
        if !r0.closed {
            return Phase::Act { round: 0, status: r0 };
        }
        if r0.folded.is_some() {
            return Phase::Terminal;
        }
        if self.public.is_none() {
            return Phase::Board;
        }
        let r1 = scan_round(self.rounds[1].as_slice(), BETS[1]);
        if !r1.closed {
            return Phase::Act { round: 1, status: r1 };
        }
        Phase::Terminal
    }

    fn contributions(&self) -> [i64; 2] {
        let r0 = scan_round(self.rounds[0].as_slice(), BETS[0]);
        let r1 = scan_round(self.rounds[1].as_slice(), BETS[1]);
        [1 + r0.put[0] + r1.put[0], 1 + r0.put[1] + r1.put[1]]
    }

    /// Player one's payoff at showdown, ignoring stakes (+1 win, -1 loss, 0 split).
    fn showdown_sign(&self) -> i64 {
        let rank = |c: u8| c / 2;
        let r1 = rank(self.cards[0].unwrap());
        let r2 = rank(self.cards[1].unwrap());
        let rp = rank(self.public.unwrap());
        match (r1 == rp, r2 == rp) {
            (true, false) => 1,
            (false, true) => -1,
            _ => match r1.cmp(&r2) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            },
        }
    }

    fn write_round(seq: &[u8], out: &mut Vec<u8>) {
        let mut outstanding = false;
        for &a in seq {
            let sym = if outstanding {
                match a {
                    0 => b'f',
                    1 => b'c',
                    _ => b'r',
                }
            } else {
                match a {
                    0 => b'x',
                    _ => b'b',
                }
            };
            out.push(sym);
            if !outstanding && a == 1 {
                outstanding = true;
            } else if outstanding && a == 1 {
                outstanding = false;
            }
        }
    }
}

impl State for LeducState {
    fn to_play(&self) -> ToPlay {
        match self.phase() {
            Phase::Deal(_) | Phase::Board => ToPlay::Chance,
            Phase::Act { status, .. } => ToPlay::Player(if status.to_act == 0 {
                Player::One
            } else {
                Player::Two
            }),
            Phase::Terminal => ToPlay::Terminal,
        }
    }

    fn legal_actions(&self, out: &mut Vec<Action>) {
        out.clear();
        match self.phase() {
            Phase::Deal(_) | Phase::Board => {
                out.extend((0..self.deck() as usize).filter(|&c| !self.taken(c as u8)));
            }
            Phase::Act { status, .. } => {
                if status.outstanding {
                    out.extend([0, 1]);
                    if status.raises < MAX_RAISES {
                        out.push(2);
                    }
                } else {
                    out.push(0);
                    if status.raises < MAX_RAISES {
                        out.push(1);
                    }
                }
            }
            Phase::Terminal => panic!("legal_actions on terminal node"),
        }
    }

    fn chance_outcomes(&self, out: &mut Vec<(Action, f64)>) {
        out.clear();
        match self.phase() {
            Phase::Deal(_) | Phase::Board => {
                let free: Vec<usize> = (0..self.deck() as usize)
                    .filter(|&c| !self.taken(c as u8))
                    .collect();
                let p = 1.0 / free.len() as f64;
                out.extend(free.into_iter().map(|c| (c, p)));
            }
            _ => panic!("chance_outcomes on non-chance node"),
        }
    }

    fn payoff(&self, player: Player) -> f64 {
        let r0 = scan_round(self.rounds[0].as_slice(), BETS[0]);
        let r1 = scan_round(self.rounds[1].as_slice(), BETS[1]);
        let contrib = self.contributions();
        let p1 = if let Some(f) = r0.folded.or(r1.folded) {
            // The folder forfeits their contribution to the winner.
            if f == 0 {
                -(contrib[0] as f64)
            } else {
                contrib[1] as f64
            }
        } else {
            debug_assert!(r1.closed, "payoff on non-terminal node");
            debug_assert_eq!(contrib[0], contrib[1]);
            self.showdown_sign() as f64 * contrib[1] as f64
        };
        match player {
            Player::One => p1,
            Player::Two => -p1,
        }
    }

    fn write_key(&self, buf: &mut Vec<u8>) {
        buf.clear();
        let player = match self.phase() {
            Phase::Act { status, .. } => {
                if status.to_act == 0 {
                    Player::One
                } else {
                    Player::Two
                }
            }
            _ => panic!("write_key on non-decision node"),
        };
        buf.push(player.tag());
        buf.push(b'|');
        buf.push(b'c');
        buf.extend_from_slice(
            self.cards[player.index()]
                .unwrap()
                .to_string()
                .as_bytes(),
        );
        buf.push(b'|');
        Self::write_round(self.rounds[0].as_slice(), buf);
        if let Some(p) = self.public {
            buf.push(b'|');
            buf.push(b'p');
            buf.extend_from_slice(p.to_string().as_bytes());
            buf.push(b'|');
            Self::write_round(self.rounds[1].as_slice(), buf);
        }
    }

    fn action_label(&self, action: Action) -> String {
        match self.phase() {
            Phase::Deal(_) => format!("deal:c{}", action),
            Phase::Board => format!("board:c{}", action),
            Phase::Act { status, .. } => {
                if status.outstanding {
                    match action {
                        0 => "fold".to_string(),
                        1 => "call".to_string(),
                        _ => "raise".to_string(),
                    }
                } else if action == 0 {
                    "check".to_string()
                } else {
                    "bet".to_string()
                }
            }
            Phase::Terminal => panic!("action_label on terminal node"),
        }
    }

    fn child(&self, action: Action) -> Box<dyn State> {
        let mut next = self.clone();
        match self.phase() {
            Phase::Deal(i) => next.cards[i] = Some(action as u8),
            Phase::Board => next.public = Some(action as u8),
            Phase::Act { round, .. } => next.rounds[round].push(action as u8),
            Phase::Terminal => panic!("child on terminal node"),
        }
        Box::new(next)
    }
}
