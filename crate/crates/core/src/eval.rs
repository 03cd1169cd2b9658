//! Evaluation: expected value, best response, exploitability, and support
//! metrics over compiled games.
//!
//! All walks skip branches that have probability zero under the evaluated
//! policy, and all require the policy to be defined at every information set
//! they actually reach; hitting a reachable set without an entry is a
//! programming error and panics.

use indexmap::IndexMap;

use crate::compile::{CompiledGame, NodeId, NodeKind};
use crate::game::{Action, InfosetKey, NodeCounter, Player, VisitKind};
use crate::profile::{BehaviorPolicy, PolicyEntry};

/// Probability below which an action does not count towards support.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Expected payoff to player one under a joint behavior policy.
///
/// `policy` must contain entries for both players' information sets wherever
/// they are reachable with positive probability. Each node the walk touches
/// is charged once to `counting`.
pub fn expected_value(
    game: &CompiledGame,
    policy: &BehaviorPolicy,
    mut counting: Option<(&mut NodeCounter, VisitKind)>,
) -> f64 {
    ev_walk(game, policy, game.root(), &mut counting)
}

fn ev_walk(
    game: &CompiledGame,
    policy: &BehaviorPolicy,
    id: NodeId,
    counting: &mut Option<(&mut NodeCounter, VisitKind)>,
) -> f64 {
    if let Some((counter, kind)) = counting {
        counter.count(*kind);
    }
    match game.nodes[id].kind {
        NodeKind::Terminal { payoff_one } => payoff_one,
        NodeKind::Chance => game
            .edges_of(id)
            .iter()
            .map(|e| e.prob * ev_walk(game, policy, e.child, counting))
            .sum(),
        NodeKind::Decision { infoset, .. } => {
            let key = &game.infosets[infoset].key;
            let entry = policy.entry(key.as_bytes()).unwrap_or_else(|| {
                panic!("policy has no entry for reachable information set {key}")
            });
            let mut value = 0.0;
            for edge in game.edges_of(id) {
                let p = entry.prob(edge.action);
                if p > 0.0 {
                    value += p * ev_walk(game, policy, edge.child, counting);
                }
            }
            value
        }
    }
}

/// A pure best response for one player against a fixed opponent policy.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub responder: Player,
    /// The responder's expected payoff at the root when playing this
    /// response against the opponent policy.
    pub value: f64,
    /// Chosen action at every one of the responder's information sets, in
    /// arena order. Sets the opponent never lets the responder reach get the
    /// first action of their menu.
    pub chosen: IndexMap<InfosetKey, Action>,
}

impl BestResponse {
    /// The response as a behavior policy with full menus.
    pub fn policy(&self, game: &CompiledGame) -> BehaviorPolicy {
        let mut out = BehaviorPolicy::default();
        for meta in &game.infosets {
            if meta.player != self.responder {
                continue;
            }
            let chosen = self.chosen[&meta.key];
            out.insert(
                meta.key.clone(),
                PolicyEntry::pure(meta.actions.clone(), chosen),
            );
        }
        out
    }
}

/// Computes a pure best response for `responder` against `opponent_policy`.
///
/// The call is charged as one visit per history of the game, independent of
/// how much of the tree the internal passes actually touch.
///
/// Ties between equally good actions go to the action listed first in the
/// menu (the lowest id, since menus are ascending).
pub fn best_response(
    game: &CompiledGame,
    responder: Player,
    opponent_policy: &BehaviorPolicy,
    counting: Option<(&mut NodeCounter, VisitKind)>,
) -> BestResponse {
    if let Some((counter, kind)) = counting {
        counter.count_many(kind, game.stats.histories as u64);
    }
    let n = game.nodes.len();

    // Pass 1: opponent-and-chance reach probabilities, parents before
    // children (node ids are preorder).
    let mut reach = vec![0.0; n];
    reach[game.root()] = 1.0;
    for id in 0..n {
        let r = reach[id];
        if r == 0.0 {
            continue;
        }
        match game.nodes[id].kind {
            NodeKind::Terminal { .. } => {}
            NodeKind::Chance => {
                for edge in game.edges_of(id) {
                    reach[edge.child] = r * edge.prob;
                }
            }
            NodeKind::Decision { player, infoset } => {
                if player == responder {
                    for edge in game.edges_of(id) {
                        reach[edge.child] = r;
                    }
                } else {
                    let key = &game.infosets[infoset].key;
                    let entry = opponent_policy.entry(key.as_bytes()).unwrap_or_else(|| {
                        panic!("opponent policy has no entry for reachable information set {key}")
                    });
                    for edge in game.edges_of(id) {
                        reach[edge.child] = r * entry.prob(edge.action);
                    }
                }
            }
        }
    }

    // Pass 2: pick maximizing actions, deepest responder decisions first, so
    // every responder set below a candidate action is already resolved when
    // its subtree value is needed.
    let mut chosen_edge: Vec<Option<usize>> = vec![None; game.infosets.len()];
    let mut memo: Vec<Option<f64>> = vec![None; n];
    for inf_id in game.infosets_by_depth_desc(responder) {
        let meta = &game.infosets[inf_id];
        let menu_len = meta.actions.len();
        let mut q = vec![0.0; menu_len];
        for &member in &meta.members {
            let r = reach[member];
            if r == 0.0 {
                continue;
            }
            for (slot, edge) in game.edges_of(member).iter().enumerate() {
                q[slot] += r
                    * br_value(
                        game,
                        responder,
                        opponent_policy,
                        &chosen_edge,
                        &mut memo,
                        edge.child,
                    );
            }
        }
        let mut best = 0;
        for slot in 1..menu_len {
            if q[slot] > q[best] {
                best = slot;
            }
        }
        chosen_edge[inf_id] = Some(best);
    }

    let value = br_value(
        game,
        responder,
        opponent_policy,
        &chosen_edge,
        &mut memo,
        game.root(),
    );

    let mut chosen = IndexMap::new();
    for (inf_id, meta) in game.infosets.iter().enumerate() {
        if meta.player == responder {
            let slot = chosen_edge[inf_id].expect("all responder infosets resolved");
            chosen.insert(meta.key.clone(), meta.actions[slot]);
        }
    }
    BestResponse {
        responder,
        value,
        chosen,
    }
}

/// Subtree value to the responder, with the responder playing the already
/// chosen actions and the opponent playing their policy.
fn br_value(
    game: &CompiledGame,
    responder: Player,
    opponent_policy: &BehaviorPolicy,
    chosen_edge: &[Option<usize>],
    memo: &mut Vec<Option<f64>>,
    id: NodeId,
) -> f64 {
    if let Some(v) = memo[id] {
        return v;
    }
    let v = match game.nodes[id].kind {
        NodeKind::Terminal { payoff_one } => match responder {
            Player::One => payoff_one,
            Player::Two => -payoff_one,
        },
        NodeKind::Chance => game
            .edges_of(id)
            .iter()
            .map(|e| e.prob * br_value(game, responder, opponent_policy, chosen_edge, memo, e.child))
            .sum(),
        NodeKind::Decision { player, infoset } => {
            if player == responder {
                let slot = chosen_edge[infoset]
                    .expect("responder information set used before it was resolved");
                let edge = game.edges_of(id)[slot];
                br_value(game, responder, opponent_policy, chosen_edge, memo, edge.child)
            } else {
                let key = &game.infosets[infoset].key;
                let entry = opponent_policy
                    .entry(key.as_bytes())
                    .unwrap_or_else(|| panic!("opponent policy has no entry for {key}"));
                let mut value = 0.0;
                for edge in game.edges_of(id) {
                    let p = entry.prob(edge.action);
                    if p > 0.0 {
                        value += p
                            * br_value(game, responder, opponent_policy, chosen_edge, memo, edge.child);
                    }
                }
                value
            }
        }
    };
    memo[id] = Some(v);
    v
}

/// Sum of both players' best-response values against a joint policy. Zero at
/// an equilibrium, positive elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct Exploitability {
    pub total: f64,
    /// Best-response value per responder, in player order.
    pub br_value: [f64; 2],
}

/// Exploitability of a joint policy; charges two best responses (two visits
/// per history) to `counting`.
pub fn exploitability(
    game: &CompiledGame,
    policy: &BehaviorPolicy,
    mut counting: Option<(&mut NodeCounter, VisitKind)>,
) -> Exploitability {
    let br1 = best_response(game, Player::One, policy, counting.as_mut().map(|(c, k)| (&mut **c, *k)));
    let br2 = best_response(game, Player::Two, policy, counting.as_mut().map(|(c, k)| (&mut **c, *k)));
    Exploitability {
        total: br1.value + br2.value,
        br_value: [br1.value, br2.value],
    }
}

/// How concentrated a policy is: which fraction of available actions carry
/// probability above [`SUPPORT_THRESHOLD`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportMetrics {
    pub infosets: usize,
    pub total_actions: usize,
    pub total_support: usize,
    /// Smallest per-set support percentage.
    pub min_pct: f64,
    /// Pooled percentage: `100 * total_support / total_actions`. This is the
    /// headline number.
    pub pooled_pct: f64,
    /// Mean of the per-set percentages, logged alongside the pooled value.
    pub mean_pct: f64,
    /// Sets whose every action fell below the threshold (numerically
    /// degenerate entries).
    pub zero_support: usize,
}

/// Support metrics of a policy measured against the game's own menus,
/// optionally restricted to one player's information sets. Actions the
/// policy does not mention count as unsupported, so a policy produced on a
/// restricted view is scored against the full menu it came from. With no
/// matching sets all fields are zero.
pub fn support_metrics(
    game: &CompiledGame,
    policy: &BehaviorPolicy,
    threshold: f64,
    player: Option<Player>,
) -> SupportMetrics {
    assert!(threshold >= 0.0, "support threshold must be non-negative");
    let mut infosets = 0usize;
    let mut total_actions = 0usize;
    let mut total_support = 0usize;
    let mut min_pct = f64::INFINITY;
    let mut pct_sum = 0.0;
    let mut zero_support = 0usize;
    for meta in &game.infosets {
        if let Some(p) = player {
            if meta.key.player() != p {
                continue;
            }
        }
        infosets += 1;
        let entry = policy.entries.get(meta.key.as_bytes());
        let support = meta
            .actions
            .iter()
            .filter(|action| {
                entry.is_some_and(|e| {
                    e.actions
                        .iter()
                        .position(|a| a == *action)
                        .is_some_and(|k| e.probs[k] > threshold)
                })
            })
            .count();
        if support == 0 {
            zero_support += 1;
        }
        let pct = 100.0 * support as f64 / meta.actions.len() as f64;
        min_pct = min_pct.min(pct);
        pct_sum += pct;
        total_actions += meta.actions.len();
        total_support += support;
    }
    if infosets == 0 {
        return SupportMetrics {
            infosets: 0,
            total_actions: 0,
            total_support: 0,
            min_pct: 0.0,
            pooled_pct: 0.0,
            mean_pct: 0.0,
            zero_support: 0,
        };
    }
    SupportMetrics {
        infosets,
        total_actions,
        total_support,
        min_pct,
        pooled_pct: 100.0 * total_support as f64 / total_actions as f64,
        mean_pct: pct_sum / infosets as f64,
        zero_support,
    }
}
