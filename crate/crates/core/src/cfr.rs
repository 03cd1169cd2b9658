//! Exact counterfactual-regret minimization over a compiled game.
//!
//! One [`cfr_iteration`] performs two alternating full-tree sweeps: player
//! one's regrets and strategy weights are updated first, then player two's
//! against player one's already-updated policy. Within a sweep all policies
//! are frozen at their sweep-start values (see
//! [`crate::profile::InfosetData::cached_policy`]), so the update equals the
//! textbook simultaneous update for that sweep. No branches are pruned:
//! every sweep touches every history exactly once.

use crate::compile::{CompiledGame, NodeId, NodeKind};
use crate::game::{NodeCounter, Player, VisitKind};
use crate::profile::{Profile, WeightScheme};

/// One iteration (both players' sweeps) at window-local iteration `t`
/// (1-based). With [`WeightScheme::Linear`] both the regret and strategy
/// updates of iteration `t` are multiplied by `t`.
pub fn cfr_iteration(
    game: &CompiledGame,
    profile: &mut Profile,
    slots: &[usize],
    t: u64,
    scheme: WeightScheme,
    counter: &mut NodeCounter,
) {
    let weight = scheme.weight(t);
    for player in Player::both() {
        cfr_sweep(game, profile, slots, player, weight, counter);
    }
}

/// A single sweep updating `updater`'s regrets and strategy accumulator,
/// charging one regret-minimization visit per history.
pub fn cfr_sweep(
    game: &CompiledGame,
    profile: &mut Profile,
    slots: &[usize],
    updater: Player,
    weight: f64,
    counter: &mut NodeCounter,
) {
    let stamp = profile.begin_sweep();
    walk(
        game, profile, slots, updater, weight, stamp, counter, game.root(), 1.0, 1.0,
    );
}

/// Returns the updater's expected value of the subtree under the frozen
/// sweep policies. `own_reach` multiplies the updater's policy probabilities
/// above `id`; `opp_reach` multiplies the opponent's and chance's.
#[allow(clippy::too_many_arguments)]
fn walk(
    game: &CompiledGame,
    profile: &mut Profile,
    slots: &[usize],
    updater: Player,
    weight: f64,
    stamp: u64,
    counter: &mut NodeCounter,
    id: NodeId,
    own_reach: f64,
    opp_reach: f64,
) -> f64 {
    counter.count(VisitKind::RegretMin);
    match game.nodes[id].kind {
        NodeKind::Terminal { payoff_one } => match updater {
            Player::One => payoff_one,
            Player::Two => -payoff_one,
        },
        NodeKind::Chance => {
            let mut value = 0.0;
            for i in 0..game.edges_of(id).len() {
                let edge = game.edges_of(id)[i];
                value += edge.prob
                    * walk(
                        game,
                        profile,
                        slots,
                        updater,
                        weight,
                        stamp,
                        counter,
                        edge.child,
                        own_reach,
                        opp_reach * edge.prob,
                    );
            }
            value
        }
        NodeKind::Decision { player, infoset } => {
            let slot = slots[infoset];
            let probs: Vec<f64> = {
                let (_, data) = profile.by_slot_mut(slot);
                data.cached_policy(stamp).to_vec()
            };
            if player == updater {
                let mut child_values = Vec::with_capacity(probs.len());
                let mut value = 0.0;
                for (k, &p) in probs.iter().enumerate() {
                    let edge = game.edges_of(id)[k];
                    let child_value = walk(
                        game,
                        profile,
                        slots,
                        updater,
                        weight,
                        stamp,
                        counter,
                        edge.child,
                        own_reach * p,
                        opp_reach,
                    );
                    child_values.push(child_value);
                    value += p * child_value;
                }
                let (_, data) = profile.by_slot_mut(slot);
                for (k, &child_value) in child_values.iter().enumerate() {
                    data.regret[k] += weight * opp_reach * (child_value - value);
                    data.strat_sum[k] += weight * own_reach * probs[k];
                }
                value
            } else {
                let mut value = 0.0;
                for (k, &p) in probs.iter().enumerate() {
                    let edge = game.edges_of(id)[k];
                    value += p
                        * walk(
                            game,
                            profile,
                            slots,
                            updater,
                            weight,
                            stamp,
                            counter,
                            edge.child,
                            own_reach,
                            opp_reach * p,
                        );
                }
                value
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::CompiledGame;
    use crate::eval::exploitability;
    use crate::game::{Action, Game, InfosetKey, State, ToPlay};
    use crate::games::{build_game, GameConfig};
    use crate::profile::BehaviorPolicy;

    /// A one-shot 2x2 matrix game in extensive form: player one moves, then
    /// player two moves without observing the first move.
    struct Matrix {
        payoff: [[f64; 2]; 2],
    }

    impl Game for Matrix {
        fn name(&self) -> &str {
            "matrix"
        }
        fn root(&self) -> Box<dyn State> {
            Box::new(MatrixState {
                payoff: self.payoff,
                path: Vec::new(),
            })
        }
        fn utility_range(&self) -> (f64, f64) {
            (-5.0, 5.0)
        }
        fn horizon(&self) -> usize {
            2
        }
        fn max_path_len(&self) -> usize {
            3
        }
    }

    #[derive(Clone)]
    struct MatrixState {
        payoff: [[f64; 2]; 2],
        path: Vec<Action>,
    }

    impl State for MatrixState {
        fn to_play(&self) -> ToPlay {
            match self.path.len() {
                0 => ToPlay::Player(Player::One),
                1 => ToPlay::Player(Player::Two),
                _ => ToPlay::Terminal,
            }
        }
        fn legal_actions(&self, out: &mut Vec<Action>) {
            out.clear();
            out.extend([0, 1]);
        }
        fn chance_outcomes(&self, _out: &mut Vec<(Action, f64)>) {
            panic!("no chance nodes");
        }
        fn payoff(&self, player: Player) -> f64 {
            let u1 = self.payoff[self.path[0]][self.path[1]];
            match player {
                Player::One => u1,
                Player::Two => -u1,
            }
        }
        fn write_key(&self, buf: &mut Vec<u8>) {
            buf.extend_from_slice(match self.path.len() {
                0 => b"1|".as_slice(),
                _ => b"2|".as_slice(),
            });
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

    fn matrix_setup(payoff: [[f64; 2]; 2]) -> (CompiledGame, Profile, Vec<usize>) {
        let game = Matrix { payoff };
        let compiled = CompiledGame::build(&game);
        let profile = Profile::from_compiled(&compiled);
        let slots = profile.slot_map(&compiled);
        (compiled, profile, slots)
    }

    #[test]
    fn one_iteration_matches_hand_computation() {
        // u1 = [[5, -1], [0, 2]].
        let (game, mut profile, slots) = matrix_setup([[5.0, -1.0], [0.0, 2.0]]);
        let mut counter = NodeCounter::new();
        cfr_iteration(&game, &mut profile, &slots, 1, WeightScheme::Uniform, &mut counter);

        // Player one sweep (all policies uniform): v(a0) = 2, v(a1) = 1,
        // v = 1.5, so regrets are [0.5, -0.5] and the accumulated strategy
        // is [0.5, 0.5].
        let p1 = profile.get(b"1|".as_slice()).unwrap();
        assert_eq!(p1.regret, vec![0.5, -0.5]);
        assert_eq!(p1.strat_sum, vec![0.5, 0.5]);

        // Player two sweep sees player one's updated (now pure-a0) policy.
        // Member after a0 has counterfactual weight 1: u2 values (-5, 1),
        // sweep value -2, regret delta (-3, +3). Member after a1 has weight
        // 0. Strategy accumulates own reach 1 times 1/2 at both members.
        let p2 = profile.get(b"2|".as_slice()).unwrap();
        assert_eq!(p2.regret, vec![-3.0, 3.0]);
        assert_eq!(p2.strat_sum, vec![1.0, 1.0]);

        // 7 histories (1 + 2 decisions, 4 terminals), two sweeps.
        assert_eq!(counter.regret_min, 14);
    }

    #[test]
    fn kuhn_iteration_touches_every_history_twice() {
        let game = build_game(&GameConfig::new("kuhn")).unwrap();
        let compiled = CompiledGame::build(game.as_ref());
        let mut profile = Profile::from_compiled(&compiled);
        let slots = profile.slot_map(&compiled);
        let mut counter = NodeCounter::new();
        cfr_sweep(&compiled, &mut profile, &slots, Player::One, 1.0, &mut counter);
        assert_eq!(counter.regret_min, 58);
        cfr_sweep(&compiled, &mut profile, &slots, Player::Two, 1.0, &mut counter);
        assert_eq!(counter.regret_min, 116);
        for t in 2..=10 {
            cfr_iteration(&compiled, &mut profile, &slots, t, WeightScheme::Uniform, &mut counter);
        }
        assert_eq!(counter.regret_min, 116 * 10);
        assert_eq!(counter.best_response, 0);
    }

    /// Independent prediction of one sweep's regret and strategy deltas,
    /// computed from reach probabilities and subtree values under the
    /// current (pre-sweep) policies. Exercising it across alternating sweeps
    /// checks that the in-place implementation equals the textbook update.
    fn predict_sweep(
        game: &CompiledGame,
        profile: &Profile,
        updater: Player,
        weight: f64,
    ) -> Vec<(InfosetKey, Vec<f64>, Vec<f64>)> {
        // Current policies, regret-matched fresh.
        let mut policy = BehaviorPolicy::default();
        for (key, data) in profile.iter() {
            let mut probs = Vec::new();
            data.current_policy(&mut probs);
            policy.insert(
                key.clone(),
                crate::profile::PolicyEntry {
                    actions: data.actions.clone(),
                    probs,
                    fallback: false,
                },
            );
        }
        // Reach products per node, split into updater's own part and the
        // opponent-and-chance part.
        let n = game.nodes.len();
        let mut own = vec![0.0; n];
        let mut opp = vec![0.0; n];
        own[game.root()] = 1.0;
        opp[game.root()] = 1.0;
        for id in 0..n {
            match game.nodes[id].kind {
                NodeKind::Terminal { .. } => {}
                NodeKind::Chance => {
                    for e in game.edges_of(id) {
                        own[e.child] = own[id];
                        opp[e.child] = opp[id] * e.prob;
                    }
                }
                NodeKind::Decision { player, infoset } => {
                    let entry = policy
                        .entry(game.infosets[infoset].key.as_bytes())
                        .unwrap();
                    for e in game.edges_of(id) {
                        let p = entry.prob(e.action);
                        if player == updater {
                            own[e.child] = own[id] * p;
                            opp[e.child] = opp[id];
                        } else {
                            own[e.child] = own[id];
                            opp[e.child] = opp[id] * p;
                        }
                    }
                }
            }
        }
        // Subtree values to the updater under the current joint policy,
        // children before parents.
        let mut value = vec![0.0; n];
        for id in (0..n).rev() {
            value[id] = match game.nodes[id].kind {
                NodeKind::Terminal { payoff_one } => match updater {
                    Player::One => payoff_one,
                    Player::Two => -payoff_one,
                },
                NodeKind::Chance => game
                    .edges_of(id)
                    .iter()
                    .map(|e| e.prob * value[e.child])
                    .sum(),
                NodeKind::Decision { infoset, .. } => {
                    let entry = policy
                        .entry(game.infosets[infoset].key.as_bytes())
                        .unwrap();
                    game.edges_of(id)
                        .iter()
                        .map(|e| entry.prob(e.action) * value[e.child])
                        .sum()
                }
            };
        }
        // Per-infoset deltas.
        let mut out = Vec::new();
        for meta in &game.infosets {
            if meta.player != updater {
                continue;
            }
            let entry = policy.entry(meta.key.as_bytes()).unwrap();
            let mut regret_delta = vec![0.0; meta.actions.len()];
            let mut strat_delta = vec![0.0; meta.actions.len()];
            for &member in &meta.members {
                let node_value = value[member];
                for (k, e) in game.edges_of(member).iter().enumerate() {
                    regret_delta[k] += weight * opp[member] * (value[e.child] - node_value);
                    strat_delta[k] += weight * own[member] * entry.prob(e.action);
                }
            }
            out.push((meta.key.clone(), regret_delta, strat_delta));
        }
        out
    }

    #[test]
    fn sweeps_match_independent_prediction_over_ten_iterations() {
        let game = build_game(&GameConfig::new("kuhn")).unwrap();
        let compiled = CompiledGame::build(game.as_ref());
        let mut profile = Profile::from_compiled(&compiled);
        let slots = profile.slot_map(&compiled);
        let mut counter = NodeCounter::new();
        for t in 1..=10u64 {
            for player in Player::both() {
                let weight = WeightScheme::Linear.weight(t);
                let predicted = predict_sweep(&compiled, &profile, player, weight);
                let before: Vec<(Vec<f64>, Vec<f64>)> = predicted
                    .iter()
                    .map(|(key, _, _)| {
                        let d = profile.get(key.as_bytes()).unwrap();
                        (d.regret.clone(), d.strat_sum.clone())
                    })
                    .collect();
                cfr_sweep(&compiled, &mut profile, &slots, player, weight, &mut counter);
                for ((key, regret_delta, strat_delta), (regret_before, strat_before)) in
                    predicted.iter().zip(before.iter())
                {
                    let after = profile.get(key.as_bytes()).unwrap();
                    for k in 0..regret_delta.len() {
                        let got = after.regret[k] - regret_before[k];
                        assert!(
                            (got - regret_delta[k]).abs() < 1e-12,
                            "{key} regret[{k}]: got {got}, predicted {}",
                            regret_delta[k]
                        );
                        let got_s = after.strat_sum[k] - strat_before[k];
                        assert!(
                            (got_s - strat_delta[k]).abs() < 1e-12,
                            "{key} strat[{k}]: got {got_s}, predicted {}",
                            strat_delta[k]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_weight_scales_both_update_kinds() {
        // From identical states, a sweep with weight 2 must produce exactly
        // twice the regret and strategy deltas of a sweep with weight 1.
        // (Only a single sweep is comparable: the second, alternating sweep
        // of an iteration sees the first player's differently scaled
        // regrets.)
        let make = || {
            let (game, mut profile, slots) = matrix_setup([[5.0, -1.0], [0.0, 2.0]]);
            let mut c = NodeCounter::new();
            cfr_iteration(&game, &mut profile, &slots, 1, WeightScheme::Uniform, &mut c);
            (game, profile, slots)
        };
        let (game_a, mut doubled, slots_a) = make();
        let (game_b, mut single, slots_b) = make();
        let base = doubled.get(b"1|".as_slice()).unwrap().clone();
        let mut c = NodeCounter::new();
        cfr_sweep(&game_a, &mut doubled, &slots_a, Player::One, 2.0, &mut c);
        cfr_sweep(&game_b, &mut single, &slots_b, Player::One, 1.0, &mut c);
        let d = doubled.get(b"1|".as_slice()).unwrap();
        let s = single.get(b"1|".as_slice()).unwrap();
        for k in 0..2 {
            let delta_doubled = d.regret[k] - base.regret[k];
            let delta_single = s.regret[k] - base.regret[k];
            assert_eq!(delta_doubled, 2.0 * delta_single);
            let strat_doubled = d.strat_sum[k] - base.strat_sum[k];
            let strat_single = s.strat_sum[k] - base.strat_sum[k];
            assert_eq!(strat_doubled, 2.0 * strat_single);
        }
    }

    #[test]
    fn kuhn_average_strategy_converges_to_equilibrium() {
        let game = build_game(&GameConfig::new("kuhn")).unwrap();
        let compiled = CompiledGame::build(game.as_ref());
        let mut profile = Profile::from_compiled(&compiled);
        let slots = profile.slot_map(&compiled);
        let mut counter = NodeCounter::new();
        let mut early = f64::INFINITY;
        for t in 1..=5000u64 {
            cfr_iteration(&compiled, &mut profile, &slots, t, WeightScheme::Uniform, &mut counter);
            if t == 100 {
                early = exploitability(&compiled, &profile.average(), None).total;
            }
        }
        let late = exploitability(&compiled, &profile.average(), None).total;
        assert!(late < 5e-3, "exploitability after 5000 iterations: {late}");
        assert!(late < early, "exploitability must shrink ({early} -> {late})");
        let value = crate::eval::expected_value(&compiled, &profile.average(), None);
        assert!(
            (value - (-1.0 / 18.0)).abs() < 0.01,
            "game value {value}, expected about -1/18"
        );
    }

    #[test]
    fn identical_runs_produce_identical_profiles() {
        let run = || {
            let game = build_game(&GameConfig::new("kuhn")).unwrap();
            let compiled = CompiledGame::build(game.as_ref());
            let mut profile = Profile::from_compiled(&compiled);
            let slots = profile.slot_map(&compiled);
            let mut counter = NodeCounter::new();
            for t in 1..=50 {
                cfr_iteration(&compiled, &mut profile, &slots, t, WeightScheme::Linear, &mut counter);
            }
            serde_json::to_string(&profile).unwrap()
        };
        assert_eq!(run(), run());
    }
}
