//! Controllers for the other player: the true type from the set, a
//! fictitious player, and a fictitious player conditioned on the previous
//! joint action.

use crate::error::{Error, Result};
use crate::game::{ActionIndex, Game, JointAction, Seat};
use crate::history::History;
use crate::policy::{ActionDist, PolicyType, TypeSet, TypeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpponentKind {
    /// The type set's true type.
    Rt,
    Fp,
    Cfp,
}

impl OpponentKind {
    pub const ALL: [OpponentKind; 3] = [OpponentKind::Rt, OpponentKind::Fp, OpponentKind::Cfp];

    pub fn name(self) -> &'static str {
        match self {
            OpponentKind::Rt => "RT",
            OpponentKind::Fp => "FP",
            OpponentKind::Cfp => "CFP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        OpponentKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// How observations are bucketed before the empirical best response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// One bucket: plain fictitious play.
    None,
    /// One bucket per previous joint action.
    PreviousJoint,
}

/// Counts of the other player's actions, bucketed per [`Conditioning`].
/// Bucket 4 holds first-round observations, which have no previous joint
/// action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FictitiousState {
    seat: Seat,
    conditioning: Conditioning,
    /// `payoff[own][other]` for the controlled seat.
    payoff: [[u8; 2]; 2],
    counts: [[u32; 2]; 5],
    last: Option<JointAction>,
}

impl FictitiousState {
    pub fn new(game: &Game, seat: Seat, conditioning: Conditioning) -> Self {
        let mut payoff = [[0; 2]; 2];
        for own in ActionIndex::ALL {
            for other in ActionIndex::ALL {
                payoff[own.index()][other.index()] = game.payoff(seat, JointAction::from_seat(seat, own, other));
            }
        }
        FictitiousState { seat, conditioning, payoff, counts: [[0; 2]; 5], last: None }
    }

    fn bucket(&self, prev: Option<JointAction>) -> usize {
        match (self.conditioning, prev) {
            (Conditioning::None, _) => 0,
            (Conditioning::PreviousJoint, Some(j)) => j.cell(),
            (Conditioning::PreviousJoint, None) => 4,
        }
    }

    pub fn counts(&self) -> [[u32; 2]; 5] {
        self.counts
    }

    /// Best response to the counts in the current bucket; uniform on a tie
    /// or when the bucket is empty.
    pub fn distribution(&self) -> ActionDist {
        let c = self.counts[self.bucket(self.last)];
        if c == [0, 0] {
            return ActionDist::uniform();
        }
        let value = |own: usize| -> u64 {
            c.iter().zip(self.payoff[own]).map(|(&n, u)| n as u64 * u as u64).sum()
        };
        let (v0, v1) = (value(0), value(1));
        if v0 == v1 {
            ActionDist::uniform()
        } else if v0 > v1 {
            ActionDist::pure(ActionIndex::ZERO)
        } else {
            ActionDist::pure(ActionIndex::ONE)
        }
    }

    pub fn observe(&mut self, step: JointAction) {
        let b = self.bucket(self.last);
        self.counts[b][step.of(self.seat.other()).index()] += 1;
        self.last = Some(step);
    }
}

fn fictitious_act(game: &Game, history: &History, seat: Seat, conditioning: Conditioning) -> ActionDist {
    let mut s = FictitiousState::new(game, seat, conditioning);
    for &step in history {
        s.observe(step);
    }
    s.distribution()
}

/// Fictitious play for `seat` after `history`.
pub fn fp_act(game: &Game, history: &History, seat: Seat) -> ActionDist {
    fictitious_act(game, history, seat, Conditioning::None)
}

/// Fictitious play conditioned on the previous joint action.
pub fn cfp_act(game: &Game, history: &History, seat: Seat) -> ActionDist {
    fictitious_act(game, history, seat, Conditioning::PreviousJoint)
}

#[derive(Debug, Clone)]
pub enum Opponent {
    Type { policy: PolicyType, state: TypeState },
    Fictitious(FictitiousState),
}

/// Controller that plays the set's true type exactly.
pub fn rt_controller(types: &TypeSet, game: &Game, seat: Seat) -> Opponent {
    let policy = types.true_type().clone();
    let state = policy.initial_state(game, seat);
    Opponent::Type { policy, state }
}

impl Opponent {
    pub fn new(kind: OpponentKind, types: &TypeSet, game: &Game, seat: Seat) -> Self {
        match kind {
            OpponentKind::Rt => rt_controller(types, game, seat),
            OpponentKind::Fp => Opponent::Fictitious(FictitiousState::new(game, seat, Conditioning::None)),
            OpponentKind::Cfp => Opponent::Fictitious(FictitiousState::new(game, seat, Conditioning::PreviousJoint)),
        }
    }

    pub fn with_conditioning(game: &Game, seat: Seat, conditioning: Conditioning) -> Self {
        Opponent::Fictitious(FictitiousState::new(game, seat, conditioning))
    }

    pub fn distribution(&self) -> ActionDist {
        match self {
            Opponent::Type { policy, state } => policy.distribution(state),
            Opponent::Fictitious(s) => s.distribution(),
        }
    }

    pub fn observe(&mut self, step: JointAction) {
        match self {
            Opponent::Type { policy, state } => policy.observe(state, step),
            Opponent::Fictitious(s) => s.observe(step),
        }
    }
}

impl core::str::FromStr for OpponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpponentKind::parse(s).ok_or_else(|| Error::invalid("opponent must be RT, FP or CFP"))
    }
}
