//! Policy types: complete, possibly stochastic, history-dependent action
//! policies hypothesized for one player.
//!
//! A type is evaluated by folding the history into a small [`TypeState`] and
//! reading the action distribution off that state. `act` performs the fold
//! from scratch; planners and plays keep the state and advance it one round
//! at a time, which gives the same distributions.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::evo::{self, DecisionTree, EvoConfig, NeuralNet};
use crate::game::{ActionIndex, Game, JointAction, Seat};
use crate::history::History;
use crate::lft::{self, LftGenome, LftState};
use crate::rng::{self, StreamLabel};

/// Probability distribution over the two actions of a player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDist([f64; 2]);

impl ActionDist {
    pub fn pure(action: ActionIndex) -> Self {
        let mut p = [0.0; 2];
        p[action.index()] = 1.0;
        ActionDist(p)
    }

    pub fn uniform() -> Self {
        ActionDist([0.5, 0.5])
    }

    /// Distribution playing action 0 with probability `p0`.
    pub fn from_p0(p0: f64) -> Self {
        let p0 = p0.clamp(0.0, 1.0);
        ActionDist([p0, 1.0 - p0])
    }

    #[inline]
    pub fn prob(&self, action: ActionIndex) -> f64 {
        self.0[action.index()]
    }

    pub fn probs(&self) -> [f64; 2] {
        self.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.0[0] == 0.0 || self.0[1] == 0.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionIndex {
        let u: f64 = rng.random();
        if u < self.0[0] {
            ActionIndex::ZERO
        } else {
            ActionIndex::ONE
        }
    }

    /// Total-variation distance; for two actions this is `|p0 - q0|`.
    pub fn total_variation(&self, other: &ActionDist) -> f64 {
        0.5 * ((self.0[0] - other.0[0]).abs() + (self.0[1] - other.0[1]).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeKind {
    Lft,
    Cdt,
    Cnn,
}

impl TypeKind {
    pub const ALL: [TypeKind; 3] = [TypeKind::Lft, TypeKind::Cdt, TypeKind::Cnn];

    pub fn name(self) -> &'static str {
        match self {
            TypeKind::Lft => "LFT",
            TypeKind::Cdt => "CDT",
            TypeKind::Cnn => "CNN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        TypeKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyType {
    Lft(LftGenome),
    Cdt(DecisionTree),
    Cnn(NeuralNet),
}

/// Per-play state of a type, advanced one round at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeState {
    seat: Seat,
    inner: StateInner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StateInner {
    Lft(LftState),
    /// Opponent's last three actions, most recent first.
    Tree([Option<ActionIndex>; 3]),
    /// Last two joint actions, most recent first.
    Net([Option<JointAction>; 2]),
}

impl TypeState {
    pub fn seat(&self) -> Seat {
        self.seat
    }
}

impl PolicyType {
    pub fn kind(&self) -> TypeKind {
        match self {
            PolicyType::Lft(_) => TypeKind::Lft,
            PolicyType::Cdt(_) => TypeKind::Cdt,
            PolicyType::Cnn(_) => TypeKind::Cnn,
        }
    }

    /// State before the first round, for this type playing `seat` in `game`.
    pub fn initial_state(&self, game: &Game, seat: Seat) -> TypeState {
        let inner = match self {
            PolicyType::Lft(g) => StateInner::Lft(LftState::new(g, game, seat)),
            PolicyType::Cdt(_) => StateInner::Tree([None; 3]),
            PolicyType::Cnn(_) => StateInner::Net([None; 2]),
        };
        TypeState { seat, inner }
    }

    /// Advances `state` past one completed round.
    pub fn observe(&self, state: &mut TypeState, step: JointAction) {
        let seat = state.seat;
        match (&mut state.inner, self) {
            (StateInner::Lft(s), PolicyType::Lft(_)) => s.observe(step),
            (StateInner::Tree(last), _) => {
                last[2] = last[1];
                last[1] = last[0];
                last[0] = Some(step.of(seat.other()));
            }
            (StateInner::Net(last), _) => {
                last[1] = last[0];
                last[0] = Some(step);
            }
            (StateInner::Lft(_), _) => debug_assert!(false, "state does not belong to this type"),
        }
    }

    /// π(H, ·, θ) for the history folded into `state`.
    pub fn distribution(&self, state: &TypeState) -> ActionDist {
        match (self, &state.inner) {
            (PolicyType::Lft(_), StateInner::Lft(s)) => s.distribution(),
            (PolicyType::Cdt(tree), StateInner::Tree(last)) => ActionDist::pure(tree.decide(last)),
            (PolicyType::Cnn(net), StateInner::Net(last)) => {
                ActionDist::from_p0(net.output(&evo::net_inputs(last, state.seat)))
            }
            _ => panic!("type state does not belong to this policy type"),
        }
    }

    /// Folds `history` from scratch and returns the action distribution.
    pub fn act(&self, game: &Game, history: &History, seat: Seat) -> ActionDist {
        self.distribution(&self.state_after(game, history, seat))
    }

    pub fn state_after(&self, game: &Game, history: &History, seat: Seat) -> TypeState {
        let mut state = self.initial_state(game, seat);
        for &step in history {
            self.observe(&mut state, step);
        }
        state
    }

    /// Flat numeric genome. The kind is not included.
    pub fn genome(&self) -> Vec<f64> {
        match self {
            PolicyType::Lft(g) => g.to_values(),
            PolicyType::Cdt(t) => t.to_values(),
            PolicyType::Cnn(n) => n.weights().to_vec(),
        }
    }

    pub fn from_genome(kind: TypeKind, values: &[f64]) -> Result<Self> {
        Ok(match kind {
            TypeKind::Lft => PolicyType::Lft(LftGenome::from_values(values)?),
            TypeKind::Cdt => PolicyType::Cdt(DecisionTree::from_values(values)?),
            TypeKind::Cnn => PolicyType::Cnn(NeuralNet::from_values(values)?),
        })
    }

    fn same_genome(&self, other: &PolicyType) -> bool {
        self.kind() == other.kind() && self.genome() == other.genome()
    }
}

/// The hypothesis space handed to HBA, with the index of the type that
/// actually controls the opponent (when one does).
#[derive(Debug, Clone, PartialEq)]
pub struct TypeSet {
    members: Vec<PolicyType>,
    true_index: usize,
}

impl TypeSet {
    pub fn new(members: Vec<PolicyType>, true_index: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("type set is empty"));
        }
        if true_index >= members.len() {
            return Err(Error::invalid("true type index out of range"));
        }
        for (i, a) in members.iter().enumerate() {
            if members[..i].iter().any(|b| a.same_genome(b)) {
                return Err(Error::invalid("type set members are not distinct"));
            }
        }
        Ok(TypeSet { members, true_index })
    }

    pub fn members(&self) -> &[PolicyType] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn true_index(&self) -> usize {
        self.true_index
    }

    pub fn true_type(&self) -> &PolicyType {
        &self.members[self.true_index]
    }
}

/// Number of generator runs pooled before giving up on finding enough
/// distinct evolved types.
pub const MAX_GENERATION_ATTEMPTS: u64 = 8;

/// `n` distinct types of `kind` for the column player of `game`, one of
/// them designated as the true type.
pub fn sample_type_set(kind: TypeKind, game: &Game, n: usize, seed: u64) -> Result<TypeSet> {
    sample_type_set_with(kind, game, n, seed, &EvoConfig::default())
}

pub fn sample_type_set_with(kind: TypeKind, game: &Game, n: usize, seed: u64, evo_cfg: &EvoConfig) -> Result<TypeSet> {
    if n < 2 {
        return Err(Error::invalid("a type set needs at least two types"));
    }
    let gen_seed = rng::labeled_seed(seed, StreamLabel::TypeGeneration);
    let members: Vec<PolicyType> = match kind {
        TypeKind::Lft => lft::generate_lft_pool(game, n, gen_seed)?.into_iter().map(PolicyType::Lft).collect(),
        TypeKind::Cdt | TypeKind::Cnn => evolved_candidates(kind, game, n, gen_seed, evo_cfg)?,
    };
    let mut pick = rng::labeled_stream(seed, StreamLabel::Selection);
    let true_index = pick.random_range(0..members.len());
    TypeSet::new(members, true_index)
}

fn evolved_candidates(kind: TypeKind, game: &Game, n: usize, seed: u64, evo_cfg: &EvoConfig) -> Result<Vec<PolicyType>> {
    let probes = evo::probe_histories();
    let mut candidates: Vec<PolicyType> = Vec::new();
    let mut signatures: Vec<Vec<f64>> = Vec::new();
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let cfg = EvoConfig { seed: rng::derive_seed(seed, attempt), ..evo_cfg.clone() };
        let pool: Vec<PolicyType> = match kind {
            TypeKind::Cdt => evo::coevolve_trees(game, &cfg).col.into_iter().map(PolicyType::Cdt).collect(),
            _ => evo::coevolve_nets(game, &cfg).col.into_iter().map(PolicyType::Cnn).collect(),
        };
        for theta in pool {
            // Deterministic trees must differ in behaviour, nets in genome.
            let distinct = match kind {
                TypeKind::Cdt => {
                    let sig = evo::probe_signature(&theta, game, Seat::Col, &probes);
                    let fresh = !signatures.contains(&sig);
                    if fresh {
                        signatures.push(sig);
                    }
                    fresh
                }
                _ => !candidates.iter().any(|c| c.same_genome(&theta)),
            };
            if distinct {
                candidates.push(theta);
            }
        }
        if candidates.len() >= n {
            break;
        }
    }
    if candidates.len() < n {
        return Err(Error::NotEnoughTypes { found: candidates.len(), wanted: n });
    }
    let mut pick = rng::stream(rng::derive_seed(seed, u64::MAX));
    let chosen = index::sample(&mut pick, candidates.len(), n);
    Ok(chosen.iter().map(|i| candidates[i].clone()).collect())
}
