use proptest::prelude::*;
use rand::Rng;
use typeprior_core::evo::{DecisionTree, NeuralNet};
use typeprior_core::game::game_by_id;
use typeprior_core::hba::{
    action_values, action_values_with, choose_action, expected_payoff, pick_action, BeliefState, PlannerConfig, TieBreak,
};
use typeprior_core::lft::{valid_targets, LftGenome, LftRole};
use typeprior_core::policy::TypeSet;
use typeprior_core::rng;
use typeprior_core::{enumerate_games, ActionIndex, Game, History, JointAction, PolicyType, Seat};

/// Expectimax over explicit histories, refolding every type from scratch at
/// each node.
fn oracle(game: &Game, types: &[PolicyType], weights: &[f64], h: &History, own: ActionIndex, depth: usize) -> f64 {
    let mut total = 0.0;
    for other in ActionIndex::ALL {
        let m: f64 = types.iter().zip(weights).map(|(t, w)| w * t.act(game, h, Seat::Col).prob(other)).sum();
        if m == 0.0 {
            continue;
        }
        let step = JointAction::new(own, other);
        let mut q = game.utility(Seat::Row, step);
        if depth > 1 {
            let next = h.extended(step);
            q += ActionIndex::ALL
                .iter()
                .map(|&a| oracle(game, types, weights, &next, a, depth - 1))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        total += m * q;
    }
    total
}

fn random_type(game: &Game, r: &mut impl Rng) -> PolicyType {
    match r.random_range(0..3) {
        0 => PolicyType::Cnn(NeuralNet::random(r)),
        1 => PolicyType::Cdt(DecisionTree::random(r)),
        _ => {
            let targets = valid_targets(game);
            let target = targets[r.random_range(0..targets.len())].clone();
            PolicyType::Lft(LftGenome { role: LftRole::ALL[r.random_range(0..3)], target })
        }
    }
}

fn random_history(r: &mut impl Rng, len: usize) -> History {
    History::from_steps((0..len).map(|_| JointAction::from_cell(r.random_range(0..4))).collect())
}

#[test]
fn planner_matches_history_expectimax_on_random_instances() {
    let games = enumerate_games();
    let mut r = rng::stream(0xE1);
    for _ in 0..50 {
        let g = &games[r.random_range(0..games.len())];
        let types: Vec<PolicyType> = (0..3).map(|_| random_type(g, &mut r)).collect();
        let raw: Vec<f64> = (0..3).map(|_| r.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let len = r.random_range(0..5);
        let h = random_history(&mut r, len);
        for depth in 1..=3 {
            let states: Vec<_> = types.iter().map(|t| t.state_after(g, &h, Seat::Col)).collect();
            let fast = action_values(g, Seat::Row, &types, &w, &states, depth);
            for a in ActionIndex::ALL {
                let slow = oracle(g, &types, &w, &h, a, depth);
                assert!((fast[a.index()] - slow).abs() <= 1e-9, "{} vs {}", fast[a.index()], slow);
                let direct = expected_payoff(g, Seat::Row, &types, &w, &h, a, depth);
                assert!((direct - slow).abs() <= 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn argmax_invariant_under_constant_shift(seed in any::<u64>(), depth in 1usize..=3, c in -10.0f64..10.0) {
        let games = enumerate_games();
        let mut r = rng::stream(seed);
        let g = &games[r.random_range(0..games.len())];
        let types: Vec<PolicyType> = (0..3).map(|_| random_type(g, &mut r)).collect();
        let w = [0.2, 0.3, 0.5];
        let h = random_history(&mut r, 2);
        let states: Vec<_> = types.iter().map(|t| t.state_after(g, &h, Seat::Col)).collect();
        let shifted = action_values_with(&|j| g.utility(Seat::Row, j) + c, Seat::Row, &types, &w, &states, depth);
        let set = TypeSet::new(types.clone(), 0);
        prop_assume!(set.is_ok());
        let set = set.unwrap();
        let belief = BeliefState::new(&w).unwrap();
        let cfg = PlannerConfig::new(depth).unwrap();
        let chosen = choose_action(g, Seat::Row, &set, &belief, &h, &cfg, &mut r);
        let by_shift = pick_action(shifted, TieBreak::Lexicographic, &mut r);
        prop_assert_eq!(chosen, by_shift);
    }
}

#[test]
fn dominant_stage_action_chosen_at_depth_one() {
    let mut r = rng::stream(5);
    for g in enumerate_games().into_iter().filter(|g| g.has_dominant_action(Seat::Row)) {
        let d = g.dominant_action(Seat::Row).unwrap();
        let types: Vec<PolicyType> = (0..3).map(|_| random_type(&g, &mut r)).collect();
        let Ok(set) = TypeSet::new(types, 0) else { continue };
        let belief = BeliefState::new(&[0.3, 0.3, 0.4]).unwrap();
        let h = random_history(&mut r, 3);
        let a = choose_action(&g, Seat::Row, &set, &belief, &h, &PlannerConfig::new(1).unwrap(), &mut r);
        assert_eq!(a, d, "game {}", g.id());
    }
}

/// Searches for a game and Trigger type where myopic planning deviates from
/// the target while three-step planning keeps to it.
#[test]
fn longer_horizon_avoids_triggering_punishment() {
    let mut found = None;
    'outer: for g in enumerate_games() {
        for target in valid_targets(&g).into_iter().filter(|t| t.len() == 1) {
            let trigger = PolicyType::Lft(LftGenome { role: LftRole::Trigger, target: target.clone() });
            let types = vec![trigger.clone()];
            let h = History::new();
            let v1 = ActionIndex::ALL.map(|a| oracle(&g, &types, &[1.0], &h, a, 1));
            let v3 = ActionIndex::ALL.map(|a| oracle(&g, &types, &[1.0], &h, a, 3));
            let pick = |v: [f64; 2]| if v[1] > v[0] + 1e-9 { ActionIndex::ONE } else { ActionIndex::ZERO };
            let on_path = target.steps()[0].row;
            if pick(v1) != on_path && pick(v3) == on_path {
                found = Some((g.clone(), trigger));
                break 'outer;
            }
        }
    }
    let (g, trigger) = found.expect("a game where horizon 3 avoids the trigger");
    let set = TypeSet::new(vec![trigger.clone()], 0).unwrap();
    let belief = BeliefState::new(&[1.0]).unwrap();
    let mut r = rng::stream(0);
    let h = History::new();
    let a1 = choose_action(&g, Seat::Row, &set, &belief, &h, &PlannerConfig::new(1).unwrap(), &mut r);
    let a3 = choose_action(&g, Seat::Row, &set, &belief, &h, &PlannerConfig::new(3).unwrap(), &mut r);
    assert_ne!(a1, a3);
    let PolicyType::Lft(genome) = &trigger else { unreachable!() };
    assert_eq!(a3, genome.target.steps()[0].row);
}

#[test]
fn game_lookup_sanity() {
    assert!(game_by_id(1).is_some() && game_by_id(79).is_none());
}
