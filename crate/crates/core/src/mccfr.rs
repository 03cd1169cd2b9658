//! Outcome-sampling Monte Carlo counterfactual-regret minimization.
//!
//! One iteration runs two episodes, one per updating player. An episode
//! samples a single root-to-terminal trajectory: chance by its outcome
//! probabilities, the opponent on-policy, and the updater from a mixture of
//! the current policy and the uniform distribution (see [`sampling_mix`]).
//! Updates use the standard importance-weighted estimators, which keep both
//! the regret deltas and the strategy accumulation unbiased for any
//! exploration rate in `(0, 1]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compile::{CompiledGame, NodeKind};
use crate::game::{NodeCounter, Player, VisitKind};
use crate::profile::Profile;

/// Parameters of the outcome sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    /// Weight of the uniform distribution mixed into the updater's sampling
    /// policy. Must lie in `(0, 1]`; positive exploration keeps every one of
    /// the updater's actions sampleable.
    pub explore: f64,
}

impl SamplerParams {
    pub fn new(explore: f64) -> SamplerParams {
        assert!(
            explore > 0.0 && explore <= 1.0,
            "exploration rate must lie in (0, 1], got {explore}"
        );
        SamplerParams { explore }
    }
}

impl Default for SamplerParams {
    fn default() -> SamplerParams {
        SamplerParams { explore: 0.6 }
    }
}

/// The updater's sampling distribution:
/// `(1 - explore) * policy + explore * uniform`.
pub fn sampling_mix(policy: &[f64], explore: f64, out: &mut Vec<f64>) {
    out.clear();
    let uniform = 1.0 / policy.len() as f64;
    out.extend(
        policy
            .iter()
            .map(|&p| (1.0 - explore) * p + explore * uniform),
    );
}

/// Draws a slot from `probs` given a uniform sample `r` in `[0, 1)`. Slots
/// with probability zero are never returned.
fn sample_slot(probs: &[f64], r: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if r < acc {
                return i;
            }
        }
    }
    last_positive
}

/// One visited updater decision on the trajectory, with the reach products
/// accumulated strictly above it.
struct Visit {
    slot: usize,
    chosen: usize,
    policy: Vec<f64>,
    own_reach: f64,
    opp_reach: f64,
    own_sample: f64,
}

/// Two episodes, one per updater, in player order. Returns each episode's
/// unbiased estimate of the updating player's root value under the current
/// joint policy (before that episode's updates).
pub fn mccfr_iteration<R: Rng>(
    game: &CompiledGame,
    profile: &mut Profile,
    slots: &[usize],
    params: SamplerParams,
    weight: f64,
    rng: &mut R,
    counter: &mut NodeCounter,
) -> [f64; 2] {
    let a = mccfr_episode(game, profile, slots, Player::One, params, weight, rng, counter);
    let b = mccfr_episode(game, profile, slots, Player::Two, params, weight, rng, counter);
    [a, b]
}

/// Samples one trajectory and applies `updater`'s regret and strategy
/// updates, scaled by `weight`. Every node on the trajectory, including the
/// terminal, is charged as one regret-minimization visit.
///
/// Returns `u * own / sample`: the importance-weighted estimate of the
/// updater's root value under the pre-episode joint policy.
#[allow(clippy::too_many_arguments)]
pub fn mccfr_episode<R: Rng>(
    game: &CompiledGame,
    profile: &mut Profile,
    slots: &[usize],
    updater: Player,
    params: SamplerParams,
    weight: f64,
    rng: &mut R,
    counter: &mut NodeCounter,
) -> f64 {
    let mut id = game.root();
    let mut own_reach = 1.0;
    let mut opp_reach = 1.0;
    let mut own_sample = 1.0;
    let mut visits: Vec<Visit> = Vec::new();
    let mut policy = Vec::new();
    let mut mix = Vec::new();
    let payoff = loop {
        counter.count(VisitKind::RegretMin);
        match game.nodes[id].kind {
            NodeKind::Terminal { payoff_one } => {
                break match updater {
                    Player::One => payoff_one,
                    Player::Two => -payoff_one,
                }
            }
            NodeKind::Chance => {
                let edges = game.edges_of(id);
                policy.clear();
                policy.extend(edges.iter().map(|e| e.prob));
                let k = sample_slot(&policy, rng.gen::<f64>());
                opp_reach *= policy[k];
                id = edges[k].child;
            }
            NodeKind::Decision { player, infoset } => {
                let slot = slots[infoset];
                {
                    let (_, data) = profile.by_slot(slot);
                    data.current_policy(&mut policy);
                }
                let edges = game.edges_of(id);
                if player == updater {
                    sampling_mix(&policy, params.explore, &mut mix);
                    let k = sample_slot(&mix, rng.gen::<f64>());
                    visits.push(Visit {
                        slot,
                        chosen: k,
                        policy: policy.clone(),
                        own_reach,
                        opp_reach,
                        own_sample,
                    });
                    own_reach *= policy[k];
                    own_sample *= mix[k];
                    id = edges[k].child;
                } else {
                    let k = sample_slot(&policy, rng.gen::<f64>());
                    opp_reach *= policy[k];
                    id = edges[k].child;
                }
            }
        }
    };

    let estimate = payoff * own_reach / own_sample;

    // Updates, deepest visit first. `tail` accumulates the updater's policy
    // probabilities strictly below the visit being processed; `w` is the
    // shared importance weight u / q over the whole trajectory.
    let w = payoff / own_sample;
    let mut tail = 1.0;
    for visit in visits.iter().rev() {
        let sigma_star = visit.policy[visit.chosen];
        let (_, data) = profile.by_slot_mut(visit.slot);
        for (k, &sigma_k) in visit.policy.iter().enumerate() {
            let regret_delta = if k == visit.chosen {
                (1.0 - sigma_star) * w * tail
            } else {
                -sigma_star * w * tail
            };
            data.regret[k] += weight * regret_delta;
            // Unbiased stochastic averaging: divide by the probability of
            // having sampled a trajectory through this node.
            data.strat_sum[k] +=
                weight * sigma_k * visit.own_reach / (visit.own_sample * visit.opp_reach);
        }
        tail *= sigma_star;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfr::cfr_iteration;
    use crate::compile::CompiledGame;
    use crate::eval::{expected_value, exploitability};
    use crate::game::InfosetKey;
    use crate::profile::{BehaviorPolicy, PolicyEntry, WeightScheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kuhn_setup() -> (CompiledGame, Profile, Vec<usize>) {
        let game = crate::games::build_game(&crate::games::GameConfig::new("kuhn")).unwrap();
        let compiled = CompiledGame::build(game.as_ref());
        let profile = Profile::from_compiled(&compiled);
        let slots = profile.slot_map(&compiled);
        (compiled, profile, slots)
    }

    /// A mixed, non-uniform profile: a few exact iterations from zero.
    fn warmed_profile(game: &CompiledGame, slots: &[usize]) -> Profile {
        let mut profile = Profile::from_compiled(game);
        let mut counter = NodeCounter::new();
        for t in 1..=20 {
            cfr_iteration(game, &mut profile, slots, t, WeightScheme::Uniform, &mut counter);
        }
        profile
    }

    fn current_joint_policy(profile: &Profile) -> BehaviorPolicy {
        let mut policy = BehaviorPolicy::default();
        for (key, data) in profile.iter() {
            let mut probs = Vec::new();
            data.current_policy(&mut probs);
            policy.insert(
                key.clone(),
                PolicyEntry {
                    actions: data.actions.clone(),
                    probs,
                    fallback: false,
                },
            );
        }
        policy
    }

    #[test]
    fn sampling_mix_formula() {
        let mut out = Vec::new();
        sampling_mix(&[1.0, 0.0], 0.6, &mut out);
        assert_eq!(out, vec![0.7, 0.3]);
        sampling_mix(&[0.2, 0.8], 1.0, &mut out);
        assert_eq!(out, vec![0.5, 0.5]);
        sampling_mix(&[0.25, 0.25, 0.5], 0.0001, &mut out);
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "exploration rate")]
    fn zero_exploration_is_rejected() {
        SamplerParams::new(0.0);
    }

    #[test]
    #[should_panic(expected = "exploration rate")]
    fn exploration_above_one_is_rejected() {
        SamplerParams::new(1.5);
    }

    #[test]
    fn sample_slot_respects_zeros() {
        assert_eq!(sample_slot(&[0.0, 1.0], 0.0), 1);
        assert_eq!(sample_slot(&[0.0, 1.0], 0.999), 1);
        assert_eq!(sample_slot(&[0.5, 0.0, 0.5], 0.6), 2);
        // Floating-point overshoot falls back to the last positive slot.
        assert_eq!(sample_slot(&[0.3, 0.7, 0.0], 1.0), 1);
    }

    #[test]
    fn episodes_visit_one_trajectory() {
        let (game, mut profile, slots) = kuhn_setup();
        let params = SamplerParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counter = NodeCounter::new();
        let mut previous = 0;
        for _ in 0..500 {
            mccfr_episode(
                &game, &mut profile, &slots, Player::One, params, 1.0, &mut rng, &mut counter,
            );
            let len = counter.regret_min - previous;
            previous = counter.regret_min;
            // Kuhn trajectories: root, second deal, and 3 or 4 moves/terminal.
            assert!((5..=6).contains(&len), "trajectory length {len}");
        }
        assert_eq!(counter.best_response, 0);
        assert_eq!(counter.evaluation, 0);
    }

    #[test]
    fn root_value_estimate_is_unbiased() {
        let (game, _, slots) = kuhn_setup();
        let mut profile = warmed_profile(&game, &slots);
        let exact = expected_value(&game, &current_joint_policy(&profile), None);
        let params = SamplerParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counter = NodeCounter::new();
        for (updater, sign) in [(Player::One, 1.0), (Player::Two, -1.0)] {
            let mut mean = 0.0;
            let mut m2 = 0.0;
            let episodes = 200_000;
            for n in 1..=episodes {
                // Weight zero keeps the profile (and thus the policy) fixed
                // while still producing estimates.
                let est = mccfr_episode(
                    &game, &mut profile, &slots, updater, params, 0.0, &mut rng, &mut counter,
                );
                let delta = est - mean;
                mean += delta / n as f64;
                m2 += delta * (est - mean);
            }
            let stderr = (m2 / (episodes as f64 - 1.0) / episodes as f64).sqrt();
            let want = sign * exact;
            assert!(
                (mean - want).abs() < 5.0 * stderr,
                "{updater}: estimate {mean} vs exact {want} (stderr {stderr})"
            );
        }
    }

    /// Expected per-episode regret deltas equal the exact counterfactual
    /// regret deltas of one sweep (the estimator is unbiased), checked
    /// coordinate-wise against the accumulated sample error.
    #[test]
    fn regret_updates_are_unbiased() {
        let (game, _, slots) = kuhn_setup();
        let mut profile = warmed_profile(&game, &slots);
        let base = profile.clone();
        // Exact deltas from a parallel sweep on a scratch copy.
        let mut scratch = base.clone();
        let mut counter = NodeCounter::new();
        crate::cfr::cfr_sweep(&game, &mut scratch, &slots, Player::One, 1.0, &mut counter);
        let exact_deltas: Vec<(InfosetKey, Vec<f64>)> = base
            .iter()
            .map(|(key, data)| {
                let after = scratch.get(key.as_bytes()).unwrap();
                (
                    key.clone(),
                    after
                        .regret
                        .iter()
                        .zip(data.regret.iter())
                        .map(|(a, b)| a - b)
                        .collect(),
                )
            })
            .collect();

        let params = SamplerParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let episodes = 400_000;
        // Welford accumulators per (infoset, action).
        let mut stats: Vec<Vec<(f64, f64)>> = exact_deltas
            .iter()
            .map(|(_, d)| vec![(0.0, 0.0); d.len()])
            .collect();
        for n in 1..=episodes {
            mccfr_episode(
                &game, &mut profile, &slots, Player::One, params, 1.0, &mut rng, &mut counter,
            );
            for (i, (key, _)) in exact_deltas.iter().enumerate() {
                let after = profile.get(key.as_bytes()).unwrap().regret.clone();
                let before = &base.get(key.as_bytes()).unwrap().regret;
                for k in 0..after.len() {
                    let sample = after[k] - before[k];
                    let (mean, m2) = stats[i][k];
                    let delta = sample - mean;
                    let mean2 = mean + delta / n as f64;
                    stats[i][k] = (mean2, m2 + delta * (sample - mean2));
                }
            }
            // Restore the starting profile exactly.
            for slot in 0..profile.len() {
                let want = base.by_slot(slot).1.regret.clone();
                profile.by_slot_mut(slot).1.regret = want;
                let want = base.by_slot(slot).1.strat_sum.clone();
                profile.by_slot_mut(slot).1.strat_sum = want;
            }
        }
        for (i, (key, exact)) in exact_deltas.iter().enumerate() {
            if key.player() != Player::One {
                continue;
            }
            for k in 0..exact.len() {
                let (mean, m2) = stats[i][k];
                let stderr = (m2 / (episodes as f64 - 1.0) / episodes as f64).sqrt();
                assert!(
                    (mean - exact[k]).abs() < 5.0 * stderr + 1e-9,
                    "{key}[{k}]: sampled mean {mean} vs exact {} (stderr {stderr})",
                    exact[k]
                );
            }
        }
    }

    #[test]
    fn averages_converge_on_kuhn() {
        let (game, mut profile, slots) = kuhn_setup();
        let params = SamplerParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counter = NodeCounter::new();
        let mut early = f64::INFINITY;
        for t in 1..=100_000u64 {
            mccfr_iteration(&game, &mut profile, &slots, params, 1.0, &mut rng, &mut counter);
            if t == 1000 {
                early = exploitability(&game, &profile.average(), None).total;
            }
        }
        let late = exploitability(&game, &profile.average(), None).total;
        assert!(late < 0.05, "exploitability after 100k iterations: {late}");
        assert!(late < early, "exploitability must shrink ({early} -> {late})");
    }

    #[test]
    fn identical_seeds_reproduce_identical_profiles() {
        let run = || {
            let (game, mut profile, slots) = kuhn_setup();
            let params = SamplerParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut counter = NodeCounter::new();
            for _ in 0..1000 {
                mccfr_iteration(&game, &mut profile, &slots, params, 1.0, &mut rng, &mut counter);
            }
            serde_json::to_string(&profile).unwrap()
        };
        assert_eq!(run(), run());
    }
}
