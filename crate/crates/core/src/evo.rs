//! Co-evolved decision trees and neural networks.
//!
//! Two pools, one per player, are bred side by side. In every generation each
//! individual plays a random selection of the other pool, and its fitness is
//! its mean per-round payoff plus a weighted bonus for behaving differently
//! from the rest of its own pool. Selection is by tournament with one elite
//! carried over unchanged.
//!
//! Trees see only the opponent's last three actions and are deterministic.
//! Networks see the last two joint actions and output a probability, so they
//! can play stochastic strategies.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::game::{ActionIndex, Game, JointAction, Seat};
use crate::history::{all_histories, History};
use crate::policy::PolicyType;
use crate::rng::{self, Stream};

/// Number of past opponent actions a decision tree may test.
pub const TREE_MEMORY: usize = 3;
pub const NET_INPUTS: usize = 4;
pub const NET_HIDDEN: usize = 5;
/// Hidden layer (inputs + bias per node) followed by the output node.
pub const NET_WEIGHTS: usize = NET_HIDDEN * (NET_INPUTS + 1) + NET_HIDDEN + 1;
/// Weights are kept in `[-WEIGHT_LIMIT, WEIGHT_LIMIT]`, which keeps every
/// output strictly inside (0, 1).
pub const WEIGHT_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EvoConfig {
    pub pool_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub evaluation_rounds: usize,
    /// How many members of the other pool each individual is evaluated against.
    pub opponents_per_evaluation: usize,
    pub dissimilarity_weight: f64,
    /// Standard deviation of the additive weight noise used by net mutation.
    pub mutation_sigma: f64,
    pub seed: u64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        EvoConfig {
            pool_size: 20,
            generations: 30,
            tournament_size: 3,
            mutation_rate: 0.1,
            crossover_rate: 0.9,
            evaluation_rounds: 50,
            opponents_per_evaluation: 5,
            dissimilarity_weight: 0.25,
            mutation_sigma: 0.5,
            seed: 0,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pool_size < 2 || self.tournament_size < 1 || self.evaluation_rounds < 1 {
            return Err(Error::invalid("pool size must be >= 2, tournament and evaluation rounds >= 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) || !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::invalid("mutation and crossover rates must lie in [0, 1]"));
        }
        if self.opponents_per_evaluation < 1 || self.dissimilarity_weight < 0.0 || self.mutation_sigma < 0.0 {
            return Err(Error::invalid("evaluation opponents >= 1, weights and sigma >= 0"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Decision trees

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DecisionTree {
    Leaf(ActionIndex),
    /// Tests whether the opponent played `action` exactly `lag` rounds ago.
    Test {
        lag: u8,
        action: ActionIndex,
        if_true: Box<DecisionTree>,
        if_false: Box<DecisionTree>,
    },
}

/// What a path has already established about one history slot.
type SlotFacts = [Option<(ActionIndex, bool)>; TREE_MEMORY];

impl DecisionTree {
    pub fn decide(&self, last: &[Option<ActionIndex>; TREE_MEMORY]) -> ActionIndex {
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf(a) => return *a,
                DecisionTree::Test { lag, action, if_true, if_false } => {
                    node = if last[*lag as usize - 1] == Some(*action) { if_true } else { if_false };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Test { if_true, if_false, .. } => 1 + if_true.node_count() + if_false.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Test { if_true, if_false, .. } => 1 + if_true.depth().max(if_false.depth()),
        }
    }

    /// True when no root-to-leaf path tests a history slot twice.
    pub fn is_well_formed(&self) -> bool {
        fn go(t: &DecisionTree, used: [bool; TREE_MEMORY]) -> bool {
            match t {
                DecisionTree::Leaf(_) => true,
                DecisionTree::Test { lag, if_true, if_false, .. } => {
                    let slot = *lag as usize - 1;
                    if slot >= TREE_MEMORY || used[slot] {
                        return false;
                    }
                    let mut u = used;
                    u[slot] = true;
                    go(if_true, u) && go(if_false, u)
                }
            }
        }
        go(self, [false; TREE_MEMORY])
    }

    /// Preorder `[0, action]` for leaves and `[1, lag, action, true.., false..]` for tests.
    pub fn to_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.write_values(&mut out);
        out
    }

    fn write_values(&self, out: &mut Vec<f64>) {
        match self {
            DecisionTree::Leaf(a) => out.extend([0.0, a.value() as f64]),
            DecisionTree::Test { lag, action, if_true, if_false } => {
                out.extend([1.0, *lag as f64, action.value() as f64]);
                if_true.write_values(out);
                if_false.write_values(out);
            }
        }
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut pos = 0;
        let tree = Self::read_values(values, &mut pos, 0)?;
        if pos != values.len() {
            return Err(Error::genome("trailing values after decision tree"));
        }
        if !tree.is_well_formed() {
            return Err(Error::genome("decision tree tests a history slot twice on one path"));
        }
        Ok(tree)
    }

    fn read_values(values: &[f64], pos: &mut usize, depth: usize) -> Result<Self> {
        let mut next = || -> Result<u8> {
            let v = *values.get(*pos).ok_or_else(|| Error::genome("decision tree genome truncated"))?;
            *pos += 1;
            if libm::trunc(v) != v || !(0.0..=3.0).contains(&v) {
                return Err(Error::genome("decision tree genome entries must be small integers"));
            }
            Ok(v as u8)
        };
        let action = |v: u8| ActionIndex::new(v).ok_or_else(|| Error::genome("tree action out of range"));
        match next()? {
            0 => Ok(DecisionTree::Leaf(action(next()?)?)),
            1 => {
                if depth >= TREE_MEMORY {
                    return Err(Error::genome("decision tree deeper than its memory"));
                }
                let lag = next()?;
                if !(1..=TREE_MEMORY as u8).contains(&lag) {
                    return Err(Error::genome("tree lag out of range"));
                }
                let a = action(next()?)?;
                let t = Self::read_values(values, pos, depth + 1)?;
                let f = Self::read_values(values, pos, depth + 1)?;
                Ok(DecisionTree::Test { lag, action: a, if_true: Box::new(t), if_false: Box::new(f) })
            }
            _ => Err(Error::genome("unknown decision tree node tag")),
        }
    }

    /// Random tree that only tests slots not in `used`.
    pub fn grow<R: Rng + ?Sized>(rng: &mut R, used: [bool; TREE_MEMORY], leaf_prob: f64) -> Self {
        let free: Vec<usize> = (0..TREE_MEMORY).filter(|&s| !used[s]).collect();
        if free.is_empty() || rng.random::<f64>() < leaf_prob {
            return DecisionTree::Leaf(ActionIndex::from_index(rng.random_range(0..2)));
        }
        let slot = free[rng.random_range(0..free.len())];
        let action = ActionIndex::from_index(rng.random_range(0..2));
        let mut u = used;
        u[slot] = true;
        DecisionTree::Test {
            lag: slot as u8 + 1,
            action,
            if_true: Box::new(Self::grow(rng, u, 0.4)),
            if_false: Box::new(Self::grow(rng, u, 0.4)),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::grow(rng, [false; TREE_MEMORY], 0.1)
    }

    fn subtree(&self, idx: usize) -> &DecisionTree {
        let mut i = idx;
        let mut node = self;
        loop {
            if i == 0 {
                return node;
            }
            match node {
                DecisionTree::Leaf(_) => unreachable!("preorder index out of range"),
                DecisionTree::Test { if_true, if_false, .. } => {
                    let left = if_true.node_count();
                    if i <= left {
                        i -= 1;
                        node = if_true;
                    } else {
                        i -= 1 + left;
                        node = if_false;
                    }
                }
            }
        }
    }

    fn replace(&mut self, idx: usize, new: DecisionTree) {
        if idx == 0 {
            *self = new;
            return;
        }
        if let DecisionTree::Test { if_true, if_false, .. } = self {
            let left = if_true.node_count();
            if idx <= left {
                if_true.replace(idx - 1, new);
            } else {
                if_false.replace(idx - 1 - left, new);
            }
        }
    }

    /// Removes tests of slots already tested higher up the path. When the
    /// earlier tests decide the outcome, the decided branch is kept;
    /// otherwise the false branch is.
    fn sanitize(self, facts: SlotFacts) -> DecisionTree {
        match self {
            leaf @ DecisionTree::Leaf(_) => leaf,
            DecisionTree::Test { lag, action, if_true, if_false } => {
                let slot = lag as usize - 1;
                match facts[slot] {
                    Some((seen, outcome)) => {
                        let decided = if seen == action { Some(outcome) } else if outcome { Some(false) } else { None };
                        let keep = if decided == Some(true) { if_true } else { if_false };
                        keep.sanitize(facts)
                    }
                    None => {
                        let mut yes = facts;
                        yes[slot] = Some((action, true));
                        let mut no = facts;
                        no[slot] = Some((action, false));
                        DecisionTree::Test {
                            lag,
                            action,
                            if_true: Box::new(if_true.sanitize(yes)),
                            if_false: Box::new(if_false.sanitize(no)),
                        }
                    }
                }
            }
        }
    }

    fn regrow<R: Rng + ?Sized>(&mut self, idx: usize, used: [bool; TREE_MEMORY], rng: &mut R) {
        if idx == 0 {
            *self = Self::grow(rng, used, 0.4);
            return;
        }
        if let DecisionTree::Test { lag, if_true, if_false, .. } = self {
            let mut u = used;
            u[*lag as usize - 1] = true;
            let left = if_true.node_count();
            if idx <= left {
                if_true.regrow(idx - 1, u, rng);
            } else {
                if_false.regrow(idx - 1 - left, u, rng);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Neural networks

/// 4-5-1 fully connected feed-forward network with sigmoid nodes. The output
/// is the probability of playing action 0 (the first action).
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    weights: [f64; NET_WEIGHTS],
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn encode_action(a: Option<ActionIndex>) -> f64 {
    match a {
        None => 0.0,
        Some(a) if a == ActionIndex::ZERO => -1.0,
        Some(_) => 1.0,
    }
}

/// Network inputs from the last two joint actions (most recent first):
/// own t-1, own t-2, other t-1, other t-2.
pub fn net_inputs(last: &[Option<JointAction>; 2], seat: Seat) -> [f64; NET_INPUTS] {
    let own = |k: usize| encode_action(last[k].map(|j| j.of(seat)));
    let other = |k: usize| encode_action(last[k].map(|j| j.of(seat.other())));
    [own(0), own(1), other(0), other(1)]
}

impl NeuralNet {
    pub fn zeros() -> Self {
        NeuralNet { weights: [0.0; NET_WEIGHTS] }
    }

    pub fn weights(&self) -> &[f64; NET_WEIGHTS] {
        &self.weights
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let weights: [f64; NET_WEIGHTS] =
            values.try_into().map_err(|_| Error::genome("network genome must have 31 weights"))?;
        if weights.iter().any(|w| !w.is_finite() || w.abs() > WEIGHT_LIMIT) {
            return Err(Error::genome("network weight not finite or outside the weight limit"));
        }
        Ok(NeuralNet { weights })
    }

    pub fn output(&self, inputs: &[f64; NET_INPUTS]) -> f64 {
        let w = &self.weights;
        let out_base = NET_HIDDEN * (NET_INPUTS + 1);
        let mut acc = w[out_base + NET_HIDDEN];
        for h in 0..NET_HIDDEN {
            let base = h * (NET_INPUTS + 1);
            let mut z = w[base + NET_INPUTS];
            for (i, x) in inputs.iter().enumerate() {
                z += w[base + i] * x;
            }
            acc += w[out_base + h] * sigmoid(z);
        }
        sigmoid(acc)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut weights = [0.0; NET_WEIGHTS];
        for w in weights.iter_mut() {
            *w = rng.random_range(-1.0..=1.0);
        }
        NeuralNet { weights }
    }

    fn crossover<R: Rng + ?Sized>(&self, other: &NeuralNet, rng: &mut R) -> NeuralNet {
        let cut = rng.random_range(1..NET_WEIGHTS);
        let mut weights = self.weights;
        weights[cut..].copy_from_slice(&other.weights[cut..]);
        NeuralNet { weights }
    }

    fn mutate<R: Rng + ?Sized>(&mut self, rate: f64, sigma: f64, rng: &mut R) {
        let noise = Normal::new(0.0, sigma).expect("sigma validated as non-negative");
        for w in self.weights.iter_mut() {
            if rng.random::<f64>() < rate {
                *w = (*w + noise.sample(rng)).clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Behavioural distance

/// Every history of up to three rounds: 1 + 4 + 16 + 64 = 85 probes. This
/// covers all inputs a tree or network can distinguish early in a play.
pub fn probe_histories() -> Vec<History> {
    (0..=TREE_MEMORY).flat_map(all_histories).collect()
}

/// Probability of action 0 at each probe history.
pub fn probe_signature(theta: &PolicyType, game: &Game, seat: Seat, probes: &[History]) -> Vec<f64> {
    probes.iter().map(|h| theta.act(game, h, seat).prob(ActionIndex::ZERO)).collect()
}

/// Mean total-variation distance between the two types' action
/// distributions over `probes`.
pub fn behavioral_distance(a: &PolicyType, b: &PolicyType, game: &Game, seat: Seat, probes: &[History]) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    let total: f64 = probes.iter().map(|h| a.act(game, h, seat).total_variation(&b.act(game, h, seat))).sum();
    total / probes.len() as f64
}

fn signature_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

// ---------------------------------------------------------------------------
// Genetic algorithm

/// Operations the breeding loop needs from a genome.
pub trait Genome: Clone {
    fn random(rng: &mut Stream) -> Self;
    fn crossover(&self, other: &Self, rng: &mut Stream) -> Self;
    fn mutate(&mut self, cfg: &EvoConfig, rng: &mut Stream);
    fn policy(&self) -> PolicyType;
    /// Breaks fitness ties in selection (smaller wins).
    fn size(&self) -> usize;
}

impl Genome for DecisionTree {
    fn random(rng: &mut Stream) -> Self {
        DecisionTree::random(rng)
    }

    /// Subtree crossover followed by removal of repeated slot tests.
    fn crossover(&self, other: &Self, rng: &mut Stream) -> Self {
        let at = rng.random_range(0..self.node_count());
        let donor = other.subtree(rng.random_range(0..other.node_count())).clone();
        let mut child = self.clone();
        child.replace(at, donor);
        child.sanitize([None; TREE_MEMORY])
    }

    /// With probability `mutation_rate`, one uniformly chosen subtree is
    /// regrown at random.
    fn mutate(&mut self, cfg: &EvoConfig, rng: &mut Stream) {
        if rng.random::<f64>() < cfg.mutation_rate {
            let at = rng.random_range(0..self.node_count());
            self.regrow(at, [false; TREE_MEMORY], rng);
        }
    }

    fn policy(&self) -> PolicyType {
        PolicyType::Cdt(self.clone())
    }

    fn size(&self) -> usize {
        self.node_count()
    }
}

impl Genome for NeuralNet {
    fn random(rng: &mut Stream) -> Self {
        NeuralNet::random(rng)
    }

    fn crossover(&self, other: &Self, rng: &mut Stream) -> Self {
        NeuralNet::crossover(self, other, rng)
    }

    fn mutate(&mut self, cfg: &EvoConfig, rng: &mut Stream) {
        NeuralNet::mutate(self, cfg.mutation_rate, cfg.mutation_sigma, rng);
    }

    fn policy(&self) -> PolicyType {
        PolicyType::Cnn(self.clone())
    }

    fn size(&self) -> usize {
        NET_WEIGHTS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoevolvedPools<G> {
    pub row: Vec<G>,
    pub col: Vec<G>,
}

/// Mean per-round payoff to `a` (in `seat`) over `rounds` rounds against `b`.
pub fn mean_payoff(game: &Game, a: &PolicyType, seat: Seat, b: &PolicyType, rounds: usize, rng: &mut Stream) -> f64 {
    let mut sa = a.initial_state(game, seat);
    let mut sb = b.initial_state(game, seat.other());
    let mut total = 0.0;
    for _ in 0..rounds {
        let own = a.distribution(&sa).sample(rng);
        let other = b.distribution(&sb).sample(rng);
        let step = JointAction::from_seat(seat, own, other);
        total += game.utility(seat, step);
        a.observe(&mut sa, step);
        b.observe(&mut sb, step);
    }
    total / rounds as f64
}

fn diversity(signatures: &[Vec<f64>]) -> Vec<f64> {
    let n = signatures.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                return 0.0;
            }
            let sum: f64 = (0..n).filter(|&j| j != i).map(|j| signature_distance(&signatures[i], &signatures[j])).sum();
            sum / (n - 1) as f64
        })
        .collect()
}

/// Higher fitness wins; among equal fitness the smaller genome, then the
/// lower index.
fn beats(fitness: &[f64], sizes: &[usize], a: usize, b: usize) -> bool {
    (fitness[a], core::cmp::Reverse(sizes[a]), core::cmp::Reverse(a))
        > (fitness[b], core::cmp::Reverse(sizes[b]), core::cmp::Reverse(b))
}

fn tournament(fitness: &[f64], sizes: &[usize], size: usize, rng: &mut Stream) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if beats(fitness, sizes, c, best) {
            best = c;
        }
    }
    best
}

fn best_index(fitness: &[f64], sizes: &[usize]) -> usize {
    (1..fitness.len()).fold(0, |best, i| if beats(fitness, sizes, i, best) { i } else { best })
}

fn breed<G: Genome>(pool: &[G], fitness: &[f64], cfg: &EvoConfig, rng: &mut Stream) -> Vec<G> {
    let sizes: Vec<usize> = pool.iter().map(Genome::size).collect();
    let mut next = Vec::with_capacity(pool.len());
    next.push(pool[best_index(fitness, &sizes)].clone());
    while next.len() < pool.len() {
        let a = tournament(fitness, &sizes, cfg.tournament_size, rng);
        let mut child = if rng.random::<f64>() < cfg.crossover_rate {
            let b = tournament(fitness, &sizes, cfg.tournament_size, rng);
            pool[a].crossover(&pool[b], rng)
        } else {
            pool[a].clone()
        };
        child.mutate(cfg, rng);
        next.push(child);
    }
    next
}

// Seeds for every random decision are derived from (generation, side,
// individual) so fitness does not depend on evaluation order.
fn eval_seed(cfg: &EvoConfig, generation: usize, side: Seat, individual: usize) -> u64 {
    let g = rng::derive_seed(cfg.seed, generation as u64 + 1);
    let s = rng::derive_seed(g, side.number() as u64);
    rng::derive_seed(s, individual as u64 + 1)
}

fn fitness_against_sample(
    game: &Game,
    pool: &[PolicyType],
    seat: Seat,
    others: &[PolicyType],
    cfg: &EvoConfig,
    generation: usize,
) -> Vec<f64> {
    let probes = probe_histories();
    let signatures: Vec<Vec<f64>> = pool.iter().map(|t| probe_signature(t, game, seat, &probes)).collect();
    let bonus = diversity(&signatures);
    // One random selection of opponents per side and generation, shared by
    // the whole pool, so equal behaviour earns equal fitness.
    let k = cfg.opponents_per_evaluation.min(others.len());
    let mut pick_rng = rng::stream(eval_seed(cfg, generation, seat, usize::MAX - 2));
    let mut picks = index::sample(&mut pick_rng, others.len(), k).into_vec();
    picks.sort_unstable();
    pool.iter()
        .enumerate()
        .map(|(i, theta)| {
            let mut r = rng::stream(eval_seed(cfg, generation, seat, i));
            let payoff: f64 = picks
                .iter()
                .map(|&j| mean_payoff(game, theta, seat, &others[j], cfg.evaluation_rounds, &mut r))
                .sum::<f64>()
                / k as f64;
            payoff + cfg.dissimilarity_weight * bonus[i]
        })
        .collect()
}

fn coevolve<G: Genome>(game: &Game, cfg: &EvoConfig) -> CoevolvedPools<G> {
    let mut init = rng::stream(rng::derive_seed(cfg.seed, 0));
    let mut row: Vec<G> = (0..cfg.pool_size).map(|_| G::random(&mut init)).collect();
    let mut col: Vec<G> = (0..cfg.pool_size).map(|_| G::random(&mut init)).collect();
    for generation in 0..cfg.generations {
        let row_types: Vec<PolicyType> = row.iter().map(Genome::policy).collect();
        let col_types: Vec<PolicyType> = col.iter().map(Genome::policy).collect();
        let row_fit = fitness_against_sample(game, &row_types, Seat::Row, &col_types, cfg, generation);
        let col_fit = fitness_against_sample(game, &col_types, Seat::Col, &row_types, cfg, generation);
        let mut breed_rng = rng::stream(eval_seed(cfg, generation, Seat::Row, usize::MAX - 1));
        row = breed(&row, &row_fit, cfg, &mut breed_rng);
        col = breed(&col, &col_fit, cfg, &mut breed_rng);
    }
    CoevolvedPools { row, col }
}

/// Breeds one decision-tree pool per player for `game`.
pub fn coevolve_trees(game: &Game, cfg: &EvoConfig) -> CoevolvedPools<DecisionTree> {
    coevolve(game, cfg)
}

/// Breeds one network pool per player for `game`.
pub fn coevolve_nets(game: &Game, cfg: &EvoConfig) -> CoevolvedPools<NeuralNet> {
    coevolve(game, cfg)
}

/// Evolves `initial` (playing `seat`) against every member of a fixed
/// opponent pool. Returns the final pool and the best fitness of each
/// evaluated generation, including the last.
pub fn evolve_against_fixed<G: Genome>(
    game: &Game,
    seat: Seat,
    initial: Vec<G>,
    opponents: &[G],
    cfg: &EvoConfig,
) -> (Vec<G>, Vec<f64>) {
    let opp: Vec<PolicyType> = opponents.iter().map(Genome::policy).collect();
    let fixed = EvoConfig { opponents_per_evaluation: opp.len(), ..cfg.clone() };
    let mut pool = initial;
    let mut best = Vec::with_capacity(cfg.generations + 1);
    for generation in 0..=cfg.generations {
        let types: Vec<PolicyType> = pool.iter().map(Genome::policy).collect();
        let fit = fitness_against_sample(game, &types, seat, &opp, &fixed, generation);
        best.push(fit.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        if generation == cfg.generations {
            break;
        }
        let mut r = rng::stream(eval_seed(cfg, generation, seat, usize::MAX - 1));
        pool = breed(&pool, &fit, cfg, &mut r);
    }
    (pool, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{enumerate_games, game_by_id};

    fn pennies() -> Game {
        Game::from_payoffs([[[4, 1], [1, 4]], [[2, 3], [3, 2]]]).unwrap()
    }

    fn small_cfg(seed: u64) -> EvoConfig {
        EvoConfig { pool_size: 10, generations: 8, evaluation_rounds: 20, seed, ..EvoConfig::default() }
    }

    #[test]
    fn zero_weight_net_is_indifferent() {
        let n = NeuralNet::zeros();
        for h in probe_histories() {
            let d = PolicyType::Cnn(n.clone()).act(&pennies(), &h, Seat::Col);
            assert_eq!(d.probs(), [0.5, 0.5]);
        }
    }

    #[test]
    fn net_on_empty_history_uses_bias_path_only() {
        // hand-evaluated: hidden node h outputs sigmoid(bias_h), output
        // sigmoid(out_bias + sum_h v_h * sigmoid(bias_h)).
        let mut w = [0.0; NET_WEIGHTS];
        for h in 0..NET_HIDDEN {
            for i in 0..NET_INPUTS {
                w[h * 5 + i] = 3.0; // must not matter with zero inputs
            }
            w[h * 5 + 4] = if h % 2 == 0 { 1.0 } else { -1.0 };
            w[25 + h] = 0.5;
        }
        w[30] = -1.0;
        let net = NeuralNet::from_values(&w).unwrap();
        let s1 = 1.0 / (1.0 + libm::exp(-1.0));
        let s_1 = 1.0 / (1.0 + libm::exp(1.0));
        let expected = 1.0 / (1.0 + libm::exp(-(-1.0 + 0.5 * (3.0 * s1 + 2.0 * s_1))));
        let p = PolicyType::Cnn(net).act(&pennies(), &History::new(), Seat::Col).prob(ActionIndex::ZERO);
        assert!((p - expected).abs() < 1e-15);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn net_outputs_stay_interior_at_extreme_weights() {
        let net = NeuralNet::from_values(&[WEIGHT_LIMIT; NET_WEIGHTS]).unwrap();
        let neg = NeuralNet::from_values(&[-WEIGHT_LIMIT; NET_WEIGHTS]).unwrap();
        for h in probe_histories() {
            for n in [&net, &neg] {
                let p = PolicyType::Cnn(n.clone()).act(&pennies(), &h, Seat::Row).prob(ActionIndex::ZERO);
                assert!(p > 0.0 && p < 1.0);
            }
        }
        assert!(NeuralNet::from_values(&[5.0; NET_WEIGHTS]).is_err());
        assert!(NeuralNet::from_values(&[0.0; 3]).is_err());
    }

    #[test]
    fn net_inputs_encoding() {
        let j = JointAction::new(ActionIndex::ZERO, ActionIndex::ONE);
        assert_eq!(net_inputs(&[Some(j), None], Seat::Row), [-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(net_inputs(&[Some(j), None], Seat::Col), [1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn zero_generations_returns_initial_pools() {
        let cfg = EvoConfig { generations: 0, ..small_cfg(4) };
        let pools = coevolve_trees(&pennies(), &cfg);
        let mut init = rng::stream(rng::derive_seed(cfg.seed, 0));
        let row: Vec<DecisionTree> = (0..cfg.pool_size).map(|_| DecisionTree::random(&mut init)).collect();
        assert_eq!(pools.row, row);
    }

    #[test]
    fn coevolution_is_deterministic() {
        let g = pennies();
        assert_eq!(coevolve_trees(&g, &small_cfg(9)), coevolve_trees(&g, &small_cfg(9)));
        assert_eq!(coevolve_nets(&g, &small_cfg(9)), coevolve_nets(&g, &small_cfg(9)));
    }

    #[test]
    fn evolved_trees_are_well_formed_and_deterministic() {
        let g = game_by_id(40).unwrap();
        let pools = coevolve_trees(&g, &small_cfg(2));
        let probes = probe_histories();
        for t in pools.row.iter().chain(&pools.col) {
            assert!(t.is_well_formed());
            assert!(t.depth() <= TREE_MEMORY);
            for h in &probes {
                assert!(t.policy().act(&g, h, Seat::Col).is_degenerate());
            }
        }
    }

    #[test]
    fn distance_axioms() {
        let g = pennies();
        let probes = probe_histories();
        let mut r = rng::stream(5);
        let a = PolicyType::Cdt(DecisionTree::random(&mut r));
        let b = PolicyType::Cnn(NeuralNet::random(&mut r));
        assert_eq!(behavioral_distance(&a, &a, &g, Seat::Col, &probes), 0.0);
        let ab = behavioral_distance(&a, &b, &g, Seat::Col, &probes);
        let ba = behavioral_distance(&b, &a, &g, Seat::Col, &probes);
        assert_eq!(ab, ba);
        assert!(ab > 0.0 && ab <= 1.0);
        let zero = PolicyType::Cdt(DecisionTree::Leaf(ActionIndex::ZERO));
        let one = PolicyType::Cdt(DecisionTree::Leaf(ActionIndex::ONE));
        assert_eq!(behavioral_distance(&zero, &one, &g, Seat::Col, &probes), 1.0);
    }

    #[test]
    fn dominant_column_action_takes_over_without_diversity_bonus() {
        // Row trees react to the column's moves, so a dominated stage action
        // can still pay in the repeated game; the check is over many runs.
        let probes = probe_histories();
        let mut runs = 0;
        let mut converged = 0;
        for g in enumerate_games().into_iter().filter(|g| g.has_dominant_action(Seat::Col)) {
            let dominant = g.dominant_action(Seat::Col).unwrap();
            for seed in 0..3 {
                let cfg = EvoConfig { dissimilarity_weight: 0.0, seed, ..EvoConfig::default() };
                let pools = coevolve_trees(&g, &cfg);
                let cols: Vec<PolicyType> = pools.col.iter().map(Genome::policy).collect();
                let rows: Vec<PolicyType> = pools.row.iter().map(Genome::policy).collect();
                let fit = fitness_against_sample(&g, &cols, Seat::Col, &rows, &cfg, cfg.generations);
                let sizes: Vec<usize> = pools.col.iter().map(Genome::size).collect();
                let elite = &cols[best_index(&fit, &sizes)];
                let hits = probes.iter().filter(|h| elite.act(&g, h, Seat::Col).prob(dominant) == 1.0).count();
                runs += 1;
                if hits * 10 >= probes.len() * 9 {
                    converged += 1;
                }
            }
        }
        assert!(converged * 10 >= runs * 9, "{converged}/{runs}");
    }

    #[test]
    fn elitism_keeps_best_fitness_monotone_against_fixed_pool() {
        let g = game_by_id(50).unwrap();
        let cfg = EvoConfig { dissimilarity_weight: 0.0, generations: 15, pool_size: 12, seed: 8, ..EvoConfig::default() };
        let mut r = rng::stream(77);
        let init: Vec<DecisionTree> = (0..12).map(|_| DecisionTree::random(&mut r)).collect();
        let opponents: Vec<DecisionTree> = (0..6).map(|_| DecisionTree::random(&mut r)).collect();
        let (_, best) = evolve_against_fixed(&g, Seat::Col, init, &opponents, &cfg);
        assert_eq!(best.len(), 16);
        for w in best.windows(2) {
            assert!(w[1] >= w[0], "{best:?}");
        }
    }

    #[test]
    fn nets_can_stay_stochastic_in_conflict_games() {
        let g = pennies();
        let pools = coevolve_nets(&g, &small_cfg(13));
        let probes = probe_histories();
        let interior = pools.col.iter().any(|n| {
            probes.iter().any(|h| {
                let p = n.policy().act(&g, h, Seat::Col).prob(ActionIndex::ZERO);
                (0.2..=0.8).contains(&p)
            })
        });
        assert!(interior);
    }

    #[test]
    fn tree_genome_round_trip_and_validation() {
        let mut r = rng::stream(31);
        for _ in 0..200 {
            let t = DecisionTree::random(&mut r);
            assert_eq!(DecisionTree::from_values(&t.to_values()).unwrap(), t);
        }
        // tests slot 1 twice on one path
        let bad = [1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        assert!(DecisionTree::from_values(&bad).is_err());
        assert!(DecisionTree::from_values(&[0.0]).is_err());
        assert!(DecisionTree::from_values(&[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn crossover_and_mutation_keep_trees_well_formed() {
        let mut r = rng::stream(3);
        let cfg = EvoConfig { mutation_rate: 0.5, ..EvoConfig::default() };
        for _ in 0..500 {
            let a = DecisionTree::random(&mut r);
            let b = DecisionTree::random(&mut r);
            let mut c = Genome::crossover(&a, &b, &mut r);
            assert!(c.is_well_formed());
            Genome::mutate(&mut c, &cfg, &mut r);
            assert!(c.is_well_formed());
        }
    }

    #[test]
    fn sanitize_keeps_decided_branch() {
        use DecisionTree::*;
        let leaf = |a: u8| Box::new(Leaf(ActionIndex::new(a).unwrap()));
        // lag1 == 0 ? (lag1 == 0 ? 1 : 0) : 0  ==> lag1 == 0 ? 1 : 0
        let t = Test {
            lag: 1,
            action: ActionIndex::ZERO,
            if_true: Box::new(Test { lag: 1, action: ActionIndex::ZERO, if_true: leaf(1), if_false: leaf(0) }),
            if_false: leaf(0),
        };
        let s = t.sanitize([None; TREE_MEMORY]);
        assert_eq!(s, Test { lag: 1, action: ActionIndex::ZERO, if_true: leaf(1), if_false: leaf(0) });
    }
}
