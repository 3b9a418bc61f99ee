//! The Bayesian best-response agent: a posterior over hypothesised types and
//! a depth-limited expectimax planner on top of it.
//!
//! During planning the posterior stays fixed at the real history. Each
//! hypothetical opponent move is weighted by the posterior mixture of the
//! types' action probabilities at the hypothetical history, so the
//! recursion never re-conditions the belief.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{ActionIndex, Game, JointAction, Seat};
use crate::history::History;
use crate::policy::{PolicyType, TypeSet, TypeState};

/// Two action values closer than this are a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// A prior must sum to one within this tolerance.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    prior: Vec<f64>,
    log_likelihood: Vec<f64>,
}

impl BeliefState {
    pub fn new(prior: &[f64]) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::invalid("prior over an empty type set"));
        }
        if prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("prior entries must be finite and non-negative"));
        }
        let sum: f64 = prior.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::invalid("prior must sum to 1"));
        }
        Ok(BeliefState { prior: prior.to_vec(), log_likelihood: vec![0.0; prior.len()] })
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Accumulated log-likelihood per type; `-inf` once a type assigned
    /// probability 0 to an observed action.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihood
    }

    fn log_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.prior.iter().zip(&self.log_likelihood).map(|(&p, &l)| if p > 0.0 { libm::log(p) + l } else { f64::NEG_INFINITY })
    }

    pub fn posterior(&self) -> Vec<f64> {
        let max = self.log_weights().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights().map(|x| if x == f64::NEG_INFINITY { 0.0 } else { libm::exp(x - max) }).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// Multiplies in one observation's per-type likelihoods. On belief
    /// collapse the state is left unchanged.
    pub fn update(&mut self, likelihoods: &[f64]) -> Result<()> {
        if likelihoods.len() != self.prior.len() {
            return Err(Error::invalid("one likelihood per type required"));
        }
        if likelihoods.iter().any(|l| !l.is_finite() || *l < 0.0 || *l > 1.0) {
            return Err(Error::invalid("likelihoods must lie in [0, 1]"));
        }
        let next: Vec<f64> = self
            .log_likelihood
            .iter()
            .zip(likelihoods)
            .map(|(&acc, &l)| if l > 0.0 { acc + libm::log(l) } else { f64::NEG_INFINITY })
            .collect();
        let alive = self.prior.iter().zip(&next).any(|(&p, &l)| p > 0.0 && l > f64::NEG_INFINITY);
        if !alive {
            return Err(Error::BeliefCollapse);
        }
        self.log_likelihood = next;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.log_likelihood.iter_mut().for_each(|l| *l = 0.0);
    }
}

/// Posterior after the opponent played `observed` at `h_before`.
pub fn update_posterior(
    belief: &BeliefState,
    types: &TypeSet,
    game: &Game,
    opponent: Seat,
    observed: ActionIndex,
    h_before: &History,
) -> Result<BeliefState> {
    if types.len() != belief.len() {
        return Err(Error::invalid("belief and type set differ in size"));
    }
    let lik: Vec<f64> = types.members().iter().map(|t| t.act(game, h_before, opponent).prob(observed)).collect();
    let mut next = belief.clone();
    next.update(&lik)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Action 0 wins ties.
    #[default]
    Lexicographic,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub tie_break: TieBreak,
}

impl PlannerConfig {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("planning horizon must be at least 1"));
        }
        Ok(PlannerConfig { horizon, tie_break: TieBreak::Lexicographic })
    }
}

/// Mixture-weighted expectimax over the opponent's next moves.
///
/// `states[k]` is type k's state at the hypothetical history; types with
/// zero weight are skipped.
fn expectimax(
    utility: &dyn Fn(JointAction) -> f64,
    seat: Seat,
    types: &[PolicyType],
    weights: &[f64],
    states: &[TypeState],
    action: ActionIndex,
    depth: usize,
) -> f64 {
    let mut mix = [0.0; 2];
    for ((t, s), &w) in types.iter().zip(states).zip(weights) {
        if w > 0.0 {
            let d = t.distribution(s);
            mix[0] += w * d.prob(ActionIndex::ZERO);
            mix[1] += w * d.prob(ActionIndex::ONE);
        }
    }
    let mut total = 0.0;
    for other in ActionIndex::ALL {
        let m = mix[other.index()];
        if m == 0.0 {
            continue;
        }
        let step = JointAction::from_seat(seat, action, other);
        let mut q = utility(step);
        if depth > 1 {
            let next: Vec<TypeState> = types
                .iter()
                .zip(states)
                .zip(weights)
                .map(|((t, s), &w)| {
                    let mut s = *s;
                    if w > 0.0 {
                        t.observe(&mut s, step);
                    }
                    s
                })
                .collect();
            let best = ActionIndex::ALL
                .iter()
                .map(|&a| expectimax(utility, seat, types, weights, &next, a, depth - 1))
                .fold(f64::NEG_INFINITY, f64::max);
            q += best;
        }
        total += m * q;
    }
    total
}

/// Expected payoff of each own action at depth `depth`, from per-type
/// states already folded over the real history.
pub fn action_values(
    game: &Game,
    seat: Seat,
    types: &[PolicyType],
    posterior: &[f64],
    states: &[TypeState],
    depth: usize,
) -> [f64; 2] {
    action_values_with(&|j| game.utility(seat, j), seat, types, posterior, states, depth)
}

/// [`action_values`] with an arbitrary own-utility function over joint
/// actions in place of the game's payoffs.
pub fn action_values_with(
    utility: &dyn Fn(JointAction) -> f64,
    seat: Seat,
    types: &[PolicyType],
    posterior: &[f64],
    states: &[TypeState],
    depth: usize,
) -> [f64; 2] {
    assert!(depth >= 1, "planning depth must be at least 1");
    ActionIndex::ALL.map(|a| expectimax(utility, seat, types, posterior, states, a, depth))
}

/// Expected payoff of playing `action` after hypothetical history `h_hat`
/// with the posterior frozen at `posterior`.
pub fn expected_payoff(
    game: &Game,
    seat: Seat,
    types: &[PolicyType],
    posterior: &[f64],
    h_hat: &History,
    action: ActionIndex,
    depth: usize,
) -> f64 {
    assert!(depth >= 1, "planning depth must be at least 1");
    let states: Vec<TypeState> = types.iter().map(|t| t.state_after(game, h_hat, seat.other())).collect();
    expectimax(&|j| game.utility(seat, j), seat, types, posterior, &states, action, depth)
}

/// Picks the better action; values within [`TIE_TOLERANCE`] are a tie.
pub fn pick_action<R: Rng + ?Sized>(values: [f64; 2], tie_break: TieBreak, rng: &mut R) -> ActionIndex {
    if (values[0] - values[1]).abs() <= TIE_TOLERANCE {
        match tie_break {
            TieBreak::Lexicographic => ActionIndex::ZERO,
            TieBreak::SeededRandom => ActionIndex::from_index(rng.random_range(0..2)),
        }
    } else if values[1] > values[0] {
        ActionIndex::ONE
    } else {
        ActionIndex::ZERO
    }
}

/// Action maximising the expected payoff at the planner's horizon after the
/// real history `history`. The RNG is only drawn from on a seeded-random tie.
pub fn choose_action<R: Rng + ?Sized>(
    game: &Game,
    seat: Seat,
    types: &TypeSet,
    belief: &BeliefState,
    history: &History,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> ActionIndex {
    let posterior = belief.posterior();
    let states: Vec<TypeState> = types.members().iter().map(|t| t.state_after(game, history, seat.other())).collect();
    let values = action_values(game, seat, types.members(), &posterior, &states, cfg.horizon);
    pick_action(values, cfg.tie_break, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: ActionIndex,
    pub values: [f64; 2],
    pub posterior: Vec<f64>,
}

/// HBA with incrementally maintained per-type states.
#[derive(Debug, Clone)]
pub struct HbaAgent {
    game: Game,
    seat: Seat,
    types: Vec<PolicyType>,
    states: Vec<TypeState>,
    belief: BeliefState,
    cfg: PlannerConfig,
    collapses: usize,
}

impl HbaAgent {
    pub fn new(game: &Game, seat: Seat, types: &TypeSet, prior: &[f64], cfg: PlannerConfig) -> Result<Self> {
        if prior.len() != types.len() {
            return Err(Error::invalid("prior and type set differ in size"));
        }
        if cfg.horizon == 0 {
            return Err(Error::invalid("planning horizon must be at least 1"));
        }
        let members = types.members().to_vec();
        let states = members.iter().map(|t| t.initial_state(game, seat.other())).collect();
        Ok(HbaAgent {
            game: game.clone(),
            seat,
            types: members,
            states,
            belief: BeliefState::new(prior)?,
            cfg,
            collapses: 0,
        })
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn posterior(&self) -> Vec<f64> {
        self.belief.posterior()
    }

    /// How often the belief collapsed and was reset to the prior.
    pub fn collapses(&self) -> usize {
        self.collapses
    }

    pub fn decide<R: Rng + ?Sized>(&self, rng: &mut R) -> Decision {
        let posterior = self.belief.posterior();
        let values = action_values(&self.game, self.seat, &self.types, &posterior, &self.states, self.cfg.horizon);
        Decision { action: pick_action(values, self.cfg.tie_break, rng), values, posterior }
    }

    /// Updates the belief on the opponent's part of `step`, then advances
    /// every type's state. Returns true if the belief collapsed and was reset.
    pub fn observe(&mut self, step: JointAction) -> bool {
        let observed = step.of(self.seat.other());
        let lik: Vec<f64> = self.types.iter().zip(&self.states).map(|(t, s)| t.distribution(s).prob(observed)).collect();
        let collapsed = match self.belief.update(&lik) {
            Ok(()) => false,
            Err(_) => {
                self.belief.reset();
                self.collapses += 1;
                true
            }
        };
        for (t, s) in self.types.iter().zip(self.states.iter_mut()) {
            t.observe(s, step);
        }
        collapsed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evo::DecisionTree;
    use crate::game::game_by_id;
    use crate::rng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn posterior_examples() {
        let mut b = BeliefState::new(&[0.5, 0.5]).unwrap();
        b.update(&[1.0, 0.0]).unwrap();
        assert_eq!(b.posterior(), vec![1.0, 0.0]);

        let mut b = BeliefState::new(&[0.5, 0.5]).unwrap();
        b.update(&[0.8, 0.2]).unwrap();
        assert!(close(&b.posterior(), &[0.8, 0.2]));

        let mut b = BeliefState::new(&[0.9, 0.1]).unwrap();
        b.update(&[0.5, 0.5]).unwrap();
        assert!(close(&b.posterior(), &[0.9, 0.1]));
    }

    #[test]
    fn collapse_leaves_belief_untouched() {
        let mut b = BeliefState::new(&[0.3, 0.7]).unwrap();
        b.update(&[0.5, 0.25]).unwrap();
        let before = b.clone();
        assert_eq!(b.update(&[0.0, 0.0]), Err(Error::BeliefCollapse));
        assert_eq!(b, before);
        // a zero-prior type cannot rescue the belief
        let mut z = BeliefState::new(&[0.0, 1.0]).unwrap();
        assert_eq!(z.update(&[1.0, 0.0]), Err(Error::BeliefCollapse));
    }

    #[test]
    fn zero_prior_stays_zero() {
        let mut b = BeliefState::new(&[0.0, 0.4, 0.6]).unwrap();
        for _ in 0..5 {
            b.update(&[1.0, 0.1, 0.2]).unwrap();
        }
        assert_eq!(b.posterior()[0], 0.0);
    }

    #[test]
    fn long_runs_do_not_underflow() {
        let mut b = BeliefState::new(&[0.5, 0.5]).unwrap();
        for _ in 0..10_000 {
            b.update(&[1e-3, 2e-3]).unwrap();
        }
        let p = b.posterior();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 1.0);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn rejects_bad_priors() {
        assert!(BeliefState::new(&[]).is_err());
        assert!(BeliefState::new(&[0.5, 0.4]).is_err());
        assert!(BeliefState::new(&[-0.5, 1.5]).is_err());
        assert!(PlannerConfig::new(0).is_err());
    }

    fn leaf(a: ActionIndex) -> PolicyType {
        PolicyType::Cdt(DecisionTree::Leaf(a))
    }

    #[test]
    fn depth_one_against_deterministic_type_is_stage_payoff() {
        let g = game_by_id(37).unwrap();
        let types = [leaf(ActionIndex::ONE)];
        for a in ActionIndex::ALL {
            let v = expected_payoff(&g, Seat::Row, &types, &[1.0], &History::new(), a, 1);
            assert_eq!(v, g.utility(Seat::Row, JointAction::new(a, ActionIndex::ONE)));
        }
    }

    #[test]
    fn identical_types_make_posterior_irrelevant() {
        let g = game_by_id(61).unwrap();
        let mut r = rng::stream(1);
        let net = crate::evo::NeuralNet::random(&mut r);
        let types = [PolicyType::Cnn(net.clone()), PolicyType::Cnn(net)];
        let h = History::from_pairs(&[(0, 1), (1, 1)]).unwrap();
        for depth in 1..=3 {
            let a = expected_payoff(&g, Seat::Row, &types, &[0.9, 0.1], &h, ActionIndex::ZERO, depth);
            let b = expected_payoff(&g, Seat::Row, &types, &[0.2, 0.8], &h, ActionIndex::ZERO, depth);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_tie_goes_to_action_zero() {
        let mut r = rng::stream(0);
        assert_eq!(pick_action([2.0, 2.0], TieBreak::Lexicographic, &mut r), ActionIndex::ZERO);
        assert_eq!(pick_action([2.0, 2.0 + 1e-12], TieBreak::Lexicographic, &mut r), ActionIndex::ZERO);
        assert_eq!(pick_action([2.0, 2.1], TieBreak::Lexicographic, &mut r), ActionIndex::ONE);
        let picks: Vec<ActionIndex> = (0..64).map(|_| pick_action([1.0, 1.0], TieBreak::SeededRandom, &mut r)).collect();
        assert!(picks.contains(&ActionIndex::ZERO) && picks.contains(&ActionIndex::ONE));
    }

    #[test]
    fn agent_tracks_the_functional_posterior() {
        let g = game_by_id(20).unwrap();
        let set = crate::policy::sample_type_set(crate::TypeKind::Cnn, &g, 3, 4).unwrap();
        let prior = [0.2, 0.3, 0.5];
        let cfg = PlannerConfig::new(2).unwrap();
        let mut agent = HbaAgent::new(&g, Seat::Row, &set, &prior, cfg).unwrap();
        let mut belief = BeliefState::new(&prior).unwrap();
        let mut h = History::new();
        let mut r = rng::stream(9);
        for _ in 0..30 {
            let d = agent.decide(&mut r);
            let expected = choose_action(&g, Seat::Row, &set, &belief, &h, &cfg, &mut r);
            assert_eq!(d.action, expected);
            let other = set.true_type().act(&g, &h, Seat::Col).sample(&mut r);
            let step = JointAction::new(d.action, other);
            belief = update_posterior(&belief, &set, &g, Seat::Col, other, &h).unwrap();
            assert!(!agent.observe(step));
            h.push(step);
            assert!(close(&agent.posterior(), &belief.posterior()));
        }
    }

    #[test]
    fn agent_resets_on_collapse() {
        let g = game_by_id(20).unwrap();
        let set = TypeSet::new(vec![leaf(ActionIndex::ZERO), leaf(ActionIndex::ONE)], 0).unwrap();
        let mut agent = HbaAgent::new(&g, Seat::Row, &set, &[0.5, 0.5], PlannerConfig::new(1).unwrap()).unwrap();
        assert!(!agent.observe(JointAction::new(ActionIndex::ZERO, ActionIndex::ZERO)));
        assert_eq!(agent.posterior(), vec![1.0, 0.0]);
        assert!(agent.observe(JointAction::new(ActionIndex::ZERO, ActionIndex::ONE)));
        assert_eq!(agent.posterior(), vec![0.5, 0.5]);
        assert_eq!(agent.collapses(), 1);
    }
}
