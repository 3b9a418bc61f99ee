//! One seeded play: HBA as the row player against a column controller.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{ActionIndex, Game, JointAction, Seat};
use crate::hba::{HbaAgent, PlannerConfig, TieBreak};
use crate::opponents::{Opponent, OpponentKind};
use crate::policy::TypeSet;
use crate::rng::{self, StreamLabel};

pub const HBA_SEAT: Seat = Seat::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlayConfig {
    pub horizon: usize,
    pub rounds: usize,
    pub tie_break: TieBreak,
    pub record_trace: bool,
}

impl PlayConfig {
    pub fn new(horizon: usize, rounds: usize) -> Self {
        PlayConfig { horizon, rounds, tie_break: TieBreak::Lexicographic, record_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    /// Posterior before the round's decision.
    pub posterior: Vec<f64>,
    pub action: ActionIndex,
    pub values: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayRecord {
    pub opponent: OpponentKind,
    pub prior: Vec<f64>,
    pub joints: Vec<JointAction>,
    /// `(row, column)` payoff per round.
    pub payoffs: Vec<(u8, u8)>,
    /// Posterior on the true type after each round; only for RT opponents.
    pub true_type_posterior: Option<Vec<f64>>,
    pub collapses: usize,
    pub trace: Option<Vec<TraceRow>>,
}

impl PlayRecord {
    pub fn rounds(&self) -> usize {
        self.joints.len()
    }

    /// First round (1-based count of observed rounds) after which the true
    /// type's posterior exceeds `threshold`.
    pub fn identification_round(&self, threshold: f64) -> Option<usize> {
        self.true_type_posterior.as_ref()?.iter().position(|&p| p > threshold).map(|i| i + 1)
    }
}

/// Plays `cfg.rounds` rounds. The HBA tie-break stream and the opponent's
/// sampling stream are derived from `seed` independently, so changing the
/// prior never shifts the opponent's random draws.
pub fn run_play(
    game: &Game,
    types: &TypeSet,
    prior: &[f64],
    opponent: OpponentKind,
    cfg: &PlayConfig,
    seed: u64,
) -> Result<PlayRecord> {
    if cfg.rounds == 0 {
        return Err(Error::invalid("a play needs at least one round"));
    }
    let planner = PlannerConfig { horizon: cfg.horizon, tie_break: cfg.tie_break };
    let mut agent = HbaAgent::new(game, HBA_SEAT, types, prior, planner)?;
    let mut opp = Opponent::new(opponent, types, game, HBA_SEAT.other());
    let mut tie_rng = rng::labeled_stream(seed, StreamLabel::HbaTies);
    let mut opp_rng = rng::labeled_stream(seed, StreamLabel::Opponent);

    let mut joints = Vec::with_capacity(cfg.rounds);
    let mut payoffs = Vec::with_capacity(cfg.rounds);
    let mut posterior_track = (opponent == OpponentKind::Rt).then(|| Vec::with_capacity(cfg.rounds));
    let mut trace = cfg.record_trace.then(Vec::new);
    for round in 0..cfg.rounds {
        let decision = agent.decide(&mut tie_rng);
        let other = opp.distribution().sample(&mut opp_rng);
        let step = JointAction::from_seat(HBA_SEAT, decision.action, other);
        agent.observe(step);
        opp.observe(step);
        joints.push(step);
        payoffs.push((game.payoff(Seat::Row, step), game.payoff(Seat::Col, step)));
        if let Some(track) = posterior_track.as_mut() {
            track.push(agent.posterior()[types.true_index()]);
        }
        if let Some(t) = trace.as_mut() {
            t.push(TraceRow { round, posterior: decision.posterior, action: decision.action, values: decision.values });
        }
    }
    Ok(PlayRecord {
        opponent,
        prior: prior.to_vec(),
        joints,
        payoffs,
        true_type_posterior: posterior_track,
        collapses: agent.collapses(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::game_by_id;
    use crate::policy::{sample_type_set, TypeKind};
    use crate::prior::uniform_prior;

    #[test]
    fn rt_play_has_requested_rounds_and_is_replayable() {
        let g = game_by_id(29).unwrap();
        let set = sample_type_set(TypeKind::Cdt, &g, 10, 4).unwrap();
        let prior = uniform_prior(10).unwrap().probabilities;
        let cfg = PlayConfig { record_trace: true, ..PlayConfig::new(2, 100) };
        let a = run_play(&g, &set, &prior, OpponentKind::Rt, &cfg, 11).unwrap();
        assert_eq!(a.rounds(), 100);
        assert_eq!(a.true_type_posterior.as_ref().unwrap().len(), 100);
        assert_eq!(a.trace.as_ref().unwrap().len(), 100);
        assert_eq!(a.collapses, 0);
        assert_eq!(a, run_play(&g, &set, &prior, OpponentKind::Rt, &cfg, 11).unwrap());
    }

    #[test]
    fn fictitious_opponents_report_no_true_type_track() {
        let g = game_by_id(64).unwrap();
        let set = sample_type_set(TypeKind::Lft, &g, 4, 2).unwrap();
        let prior = uniform_prior(4).unwrap().probabilities;
        for kind in [OpponentKind::Fp, OpponentKind::Cfp] {
            let r = run_play(&g, &set, &prior, kind, &PlayConfig::new(1, 60), 3).unwrap();
            assert!(r.true_type_posterior.is_none());
            assert_eq!(r.rounds(), 60);
        }
    }

    #[test]
    fn rejects_mismatched_prior() {
        let g = game_by_id(64).unwrap();
        let set = sample_type_set(TypeKind::Cdt, &g, 3, 2).unwrap();
        assert!(run_play(&g, &set, &[0.5, 0.5], OpponentKind::Rt, &PlayConfig::new(1, 5), 0).is_err());
        assert!(run_play(&g, &set, &[0.2, 0.3, 0.5], OpponentKind::Rt, &PlayConfig::new(0, 5), 0).is_err());
    }
}
