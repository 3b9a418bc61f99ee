//! Leader, follower and trigger agents.
//!
//! Each agent pursues a target solution, a short cycle of joint actions, and
//! plays its own part of the current step as long as the other player plays
//! its part. They differ only in how they react to a deviation:
//!
//! - a leader plays the minimax (punishment) strategy for
//!   [`PUNISHMENT_ROUNDS`] rounds, then restarts the cycle at position 0;
//! - a follower jumps to a uniformly random position of the cycle;
//! - a trigger plays its maximin strategy for the rest of the play.
//!
//! The follower's random reset is kept as an exact belief over cycle
//! positions so its action probabilities stay computable for the posterior.
//! After a deviation that belief is uniform, and it is conditioned on the
//! follower's own subsequent actions.

use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::game::{maximin_strategy, minimax_strategy_against, ActionIndex, Game, JointAction, Seat};
use crate::policy::ActionDist;
use crate::rng;

pub const MAX_TARGET_LEN: usize = 3;
pub const PUNISHMENT_ROUNDS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LftRole {
    Leader,
    Follower,
    Trigger,
}

impl LftRole {
    pub const ALL: [LftRole; 3] = [LftRole::Leader, LftRole::Follower, LftRole::Trigger];

    fn tag(self) -> f64 {
        match self {
            LftRole::Leader => 0.0,
            LftRole::Follower => 1.0,
            LftRole::Trigger => 2.0,
        }
    }
}

/// A non-empty cycle of at most [`MAX_TARGET_LEN`] joint actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TargetSolution {
    steps: Vec<JointAction>,
}

impl TargetSolution {
    pub fn new(steps: Vec<JointAction>) -> Result<Self> {
        if steps.is_empty() || steps.len() > MAX_TARGET_LEN {
            return Err(Error::invalid("target solution length must be in 1..=3"));
        }
        Ok(TargetSolution { steps })
    }

    pub fn steps(&self) -> &[JointAction] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Mean payoff to `seat` over one pass of the cycle.
    pub fn average_payoff(&self, game: &Game, seat: Seat) -> f64 {
        self.steps.iter().map(|&j| game.utility(seat, j)).sum::<f64>() / self.steps.len() as f64
    }

    /// A cycle that repeats a shorter cycle (e.g. `[x, x]`) is not primitive.
    fn is_primitive(&self) -> bool {
        let n = self.steps.len();
        (1..n).filter(|&d| n.is_multiple_of(d)).all(|d| (0..n).any(|i| self.steps[i] != self.steps[i % d]))
    }

    /// Whether both players average at least their security value along the cycle.
    pub fn meets_security_floor(&self, game: &Game) -> bool {
        Seat::BOTH.iter().all(|&seat| {
            let (_, security) = maximin_strategy(game, seat);
            self.average_payoff(game, seat) >= security - 1e-9
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LftGenome {
    pub role: LftRole,
    pub target: TargetSolution,
}

impl LftGenome {
    /// `[role, len, row_0, col_0, row_1, col_1, ...]`.
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = alloc::vec![self.role.tag(), self.target.len() as f64];
        for j in self.target.steps() {
            v.push(j.row.value() as f64);
            v.push(j.col.value() as f64);
        }
        v
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let int = |x: f64| -> Result<u8> {
            if libm::trunc(x) == x && (0.0..=255.0).contains(&x) {
                Ok(x as u8)
            } else {
                Err(Error::genome("LFT genome entries must be small integers"))
            }
        };
        if values.len() < 2 {
            return Err(Error::genome("LFT genome too short"));
        }
        let role = match int(values[0])? {
            0 => LftRole::Leader,
            1 => LftRole::Follower,
            2 => LftRole::Trigger,
            _ => return Err(Error::genome("unknown LFT role")),
        };
        let len = int(values[1])? as usize;
        if values.len() != 2 + 2 * len {
            return Err(Error::genome("LFT genome length does not match its target length"));
        }
        let mut steps = Vec::with_capacity(len);
        for k in 0..len {
            let row = ActionIndex::new(int(values[2 + 2 * k])?);
            let col = ActionIndex::new(int(values[3 + 2 * k])?);
            match (row, col) {
                (Some(r), Some(c)) => steps.push(JointAction::new(r, c)),
                _ => return Err(Error::genome("LFT target action out of range")),
            }
        }
        let target = TargetSolution::new(steps).map_err(|_| Error::genome("LFT target length out of range"))?;
        Ok(LftGenome { role, target })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    /// Following the cycle; `belief[k]` is the probability of being at position k.
    OnPath { belief: [f64; MAX_TARGET_LEN] },
    Punishing { remaining: u8 },
    Triggered,
}

/// Play state of an LFT agent in a particular game and seat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LftState {
    seat: Seat,
    role: LftRole,
    target: [JointAction; MAX_TARGET_LEN],
    len: u8,
    phase: Phase,
    punish_p0: f64,
    maximin_p0: f64,
}

fn point_mass(pos: usize) -> [f64; MAX_TARGET_LEN] {
    let mut b = [0.0; MAX_TARGET_LEN];
    b[pos] = 1.0;
    b
}

impl LftState {
    pub fn new(genome: &LftGenome, game: &Game, seat: Seat) -> Self {
        let mut target = [JointAction::ALL[0]; MAX_TARGET_LEN];
        for (slot, &j) in target.iter_mut().zip(genome.target.steps()) {
            *slot = j;
        }
        LftState {
            seat,
            role: genome.role,
            target,
            len: genome.target.len() as u8,
            phase: Phase::OnPath { belief: point_mass(0) },
            punish_p0: minimax_strategy_against(game, seat.other()).p(),
            maximin_p0: maximin_strategy(game, seat).0.p(),
        }
    }

    fn uniform_positions(&self) -> [f64; MAX_TARGET_LEN] {
        let mut b = [0.0; MAX_TARGET_LEN];
        let n = self.len as usize;
        b[..n].fill(1.0 / n as f64);
        b
    }

    pub fn is_punishing(&self) -> bool {
        matches!(self.phase, Phase::Punishing { .. } | Phase::Triggered)
    }

    pub fn distribution(&self) -> ActionDist {
        match self.phase {
            Phase::OnPath { belief } => {
                let p0: f64 = (0..self.len as usize)
                    .filter(|&k| self.target[k].of(self.seat) == ActionIndex::ZERO)
                    .map(|k| belief[k])
                    .sum();
                ActionDist::from_p0(p0)
            }
            Phase::Punishing { .. } => ActionDist::from_p0(self.punish_p0),
            Phase::Triggered => ActionDist::from_p0(self.maximin_p0),
        }
    }

    pub fn observe(&mut self, step: JointAction) {
        let n = self.len as usize;
        let own = step.of(self.seat);
        let other = step.of(self.seat.other());
        self.phase = match self.phase {
            Phase::Triggered => Phase::Triggered,
            Phase::Punishing { remaining } if remaining > 1 => Phase::Punishing { remaining: remaining - 1 },
            Phase::Punishing { .. } => Phase::OnPath { belief: point_mass(0) },
            Phase::OnPath { belief } => match self.role {
                LftRole::Leader | LftRole::Trigger => {
                    let pos = (0..n).find(|&k| belief[k] > 0.0).unwrap_or(0);
                    if other != self.target[pos].of(self.seat.other()) {
                        if self.role == LftRole::Leader {
                            Phase::Punishing { remaining: PUNISHMENT_ROUNDS }
                        } else {
                            Phase::Triggered
                        }
                    } else {
                        Phase::OnPath { belief: point_mass((pos + 1) % n) }
                    }
                }
                LftRole::Follower => {
                    let reset = self.uniform_positions();
                    let mut next = [0.0; MAX_TARGET_LEN];
                    for k in 0..n {
                        if belief[k] == 0.0 || self.target[k].of(self.seat) != own {
                            continue;
                        }
                        if self.target[k].of(self.seat.other()) == other {
                            next[(k + 1) % n] += belief[k];
                        } else {
                            for (slot, r) in next.iter_mut().zip(reset) {
                                *slot += belief[k] * r;
                            }
                        }
                    }
                    let total: f64 = next.iter().sum();
                    if total > 0.0 {
                        next.iter_mut().for_each(|x| *x /= total);
                        Phase::OnPath { belief: next }
                    } else {
                        // the observed own action had probability zero
                        Phase::OnPath { belief: reset }
                    }
                }
            },
        };
    }
}

/// All primitive target cycles of length 1..=3 that give both players at
/// least their security value on average.
pub fn valid_targets(game: &Game) -> Vec<TargetSolution> {
    let mut out = Vec::new();
    let mut seqs: Vec<Vec<JointAction>> = alloc::vec![Vec::new()];
    for _ in 0..MAX_TARGET_LEN {
        seqs = seqs
            .iter()
            .flat_map(|s| {
                JointAction::ALL.iter().map(move |&j| {
                    let mut t = s.clone();
                    t.push(j);
                    t
                })
            })
            .collect();
        for s in &seqs {
            let t = TargetSolution { steps: s.clone() };
            if t.is_primitive() && t.meets_security_floor(game) {
                out.push(t);
            }
        }
    }
    out
}

/// `n` distinct genomes drawn uniformly without replacement from all valid
/// (role, target) pairs of `game`.
pub fn generate_lft_pool(game: &Game, n: usize, seed: u64) -> Result<Vec<LftGenome>> {
    if n == 0 {
        return Err(Error::invalid("pool size must be at least 1"));
    }
    let targets = valid_targets(game);
    let pairs: Vec<LftGenome> = LftRole::ALL
        .iter()
        .flat_map(|&role| targets.iter().map(move |t| LftGenome { role, target: t.clone() }))
        .collect();
    if pairs.len() < n {
        return Err(Error::NotEnoughTypes { found: pairs.len(), wanted: n });
    }
    let mut r = rng::stream(seed);
    Ok(index::sample(&mut r, pairs.len(), n).iter().map(|i| pairs[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{enumerate_games, game_by_id};
    use crate::policy::PolicyType;
    use crate::History;

    fn ja(r: u8, c: u8) -> JointAction {
        JointAction::new(ActionIndex::new(r).unwrap(), ActionIndex::new(c).unwrap())
    }

    fn genome(role: LftRole, steps: &[(u8, u8)]) -> PolicyType {
        PolicyType::Lft(LftGenome {
            role,
            target: TargetSolution::new(steps.iter().map(|&(r, c)| ja(r, c)).collect()).unwrap(),
        })
    }

    fn pennies() -> Game {
        Game::from_payoffs([[[4, 1], [1, 4]], [[2, 3], [3, 2]]]).unwrap()
    }

    #[test]
    fn leader_starts_on_target() {
        let g = pennies();
        let t = genome(LftRole::Leader, &[(1, 1), (0, 0)]);
        assert_eq!(t.act(&g, &History::new(), Seat::Col), ActionDist::pure(ActionIndex::ONE));
    }

    #[test]
    fn trigger_plays_maximin_forever_after_deviation() {
        let g = pennies();
        let t = genome(LftRole::Trigger, &[(0, 0)]);
        let (maximin, _) = maximin_strategy(&g, Seat::Col);
        let mut pairs = alloc::vec![(1u8, 0u8)];
        pairs.extend(core::iter::repeat_n((0u8, 0u8), 10));
        let h = History::from_pairs(&pairs).unwrap();
        for t_len in 1..=h.len() {
            let d = t.act(&g, &h.prefix(t_len), Seat::Col);
            assert!((d.prob(ActionIndex::ZERO) - maximin.p()).abs() < 1e-15);
        }
    }

    #[test]
    fn follower_resets_uniformly() {
        let g = pennies();
        let t = genome(LftRole::Follower, &[(0, 0), (1, 1)]);
        // partner deviates in the very first round
        let h = History::from_pairs(&[(1, 0)]).unwrap();
        let d = t.act(&g, &h, Seat::Col);
        assert_eq!(d.probs(), [0.5, 0.5]);
        // playing 1 reveals position 1; a compliant partner moves it to position 0
        let h = History::from_pairs(&[(1, 0), (1, 1)]).unwrap();
        assert_eq!(t.act(&g, &h, Seat::Col), ActionDist::pure(ActionIndex::ZERO));
    }

    #[test]
    fn leader_punishes_then_resumes() {
        let g = pennies();
        let t = genome(LftRole::Leader, &[(0, 0), (1, 1)]);
        let punish = minimax_strategy_against(&g, Seat::Row).p();
        let mut pairs = alloc::vec![(1u8, 0u8)];
        for k in 0..PUNISHMENT_ROUNDS as usize {
            let h = History::from_pairs(&pairs).unwrap();
            let d = t.act(&g, &h, Seat::Col);
            assert!((d.prob(ActionIndex::ZERO) - punish).abs() < 1e-15, "round {k}");
            pairs.push((0, 1));
        }
        let h = History::from_pairs(&pairs).unwrap();
        assert_eq!(t.act(&g, &h, Seat::Col), ActionDist::pure(ActionIndex::ZERO));
    }

    #[test]
    fn compliant_partner_keeps_every_role_on_path() {
        let g = pennies();
        for role in LftRole::ALL {
            let steps = [(0u8, 0u8), (1, 1), (1, 0)];
            let t = genome(role, &steps);
            let mut h = History::new();
            for round in 0..12 {
                let (r, c) = steps[round % 3];
                let d = t.act(&g, &h, Seat::Col);
                assert_eq!(d, ActionDist::pure(ActionIndex::new(c).unwrap()), "{role:?} round {round}");
                h.push(ja(r, c));
            }
        }
    }

    #[test]
    fn pools_respect_security_floor_and_are_deterministic() {
        for g in enumerate_games() {
            let available = 3 * valid_targets(&g).len();
            let pool = match generate_lft_pool(&g, 10, 3) {
                Ok(p) => p,
                Err(e) => {
                    assert!(available < 10);
                    assert_eq!(e, Error::NotEnoughTypes { found: available, wanted: 10 });
                    continue;
                }
            };
            assert_eq!(pool, generate_lft_pool(&g, 10, 3).unwrap());
            for (i, x) in pool.iter().enumerate() {
                assert!(x.target.meets_security_floor(&g));
                assert!(pool[..i].iter().all(|y| y != x));
            }
        }
    }

    #[test]
    fn mutual_best_cell_is_a_target() {
        let g = game_by_id(1).unwrap();
        let best = JointAction::ALL
            .into_iter()
            .find(|&j| g.payoff(Seat::Row, j) == 4 && g.payoff(Seat::Col, j) == 4);
        if let Some(cell) = best {
            assert!(valid_targets(&g).contains(&TargetSolution::new(alloc::vec![cell]).unwrap()));
        }
        let nc = enumerate_games().into_iter().find(|g| g.class() == crate::GameClass::NoConflict).unwrap();
        let cell = JointAction::ALL
            .into_iter()
            .find(|&j| nc.payoff(Seat::Row, j) == 4 && nc.payoff(Seat::Col, j) == 4)
            .unwrap();
        let pool = generate_lft_pool(&nc, valid_targets(&nc).len() * 3, 1).unwrap();
        assert!(pool.iter().any(|x| x.target.steps() == [cell]));
    }

    #[test]
    fn genome_round_trip_and_errors() {
        let g = LftGenome { role: LftRole::Follower, target: TargetSolution::new(alloc::vec![ja(0, 1), ja(1, 0)]).unwrap() };
        assert_eq!(LftGenome::from_values(&g.to_values()).unwrap(), g);
        assert!(LftGenome::from_values(&[5.0, 1.0, 0.0, 0.0]).is_err());
        assert!(LftGenome::from_values(&[0.0, 2.0, 0.0, 0.0]).is_err());
        assert!(LftGenome::from_values(&[0.0, 1.0, 0.5, 0.0]).is_err());
    }

    #[test]
    fn non_primitive_cycles_excluded() {
        for t in valid_targets(&pennies()) {
            assert!(t.is_primitive());
        }
        assert!(!TargetSolution { steps: alloc::vec![ja(0, 0), ja(0, 0)] }.is_primitive());
        assert!(TargetSolution { steps: alloc::vec![ja(0, 0), ja(0, 0), ja(1, 1)] }.is_primitive());
    }
}
