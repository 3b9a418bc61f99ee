//! Per-slice performance criteria of a recorded play.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{ActionIndex, Game, JointAction, Seat};

pub const DEFAULT_SLICES: usize = 20;
pub const DEFAULT_SUB_BLOCKS: usize = 5;
pub const CONVERGENCE_TOLERANCE: f64 = 0.05;
pub const SOLUTION_EPSILON: f64 = 0.1;
/// Absorbs rounding when comparing frequencies against a tolerance.
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub slices: usize,
    pub sub_blocks: usize,
    pub convergence_tolerance: f64,
    pub epsilon: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            slices: DEFAULT_SLICES,
            sub_blocks: DEFAULT_SUB_BLOCKS,
            convergence_tolerance: CONVERGENCE_TOLERANCE,
            epsilon: SOLUTION_EPSILON,
        }
    }
}

/// Splits `0..len` into `parts` contiguous ranges with boundaries at
/// `i * len / parts`.
pub fn partition(len: usize, parts: usize) -> Vec<(usize, usize)> {
    (0..parts).map(|i| (i * len / parts, (i + 1) * len / parts)).collect()
}

fn frequency_of_zero(actions: &[ActionIndex]) -> f64 {
    actions.iter().filter(|a| **a == ActionIndex::ZERO).count() as f64 / actions.len() as f64
}

/// True when every sub-block's empirical action distribution lies within
/// `tolerance` of the first sub-block's, coordinate-wise.
pub fn convergence(actions: &[ActionIndex], sub_blocks: usize, tolerance: f64) -> bool {
    let blocks: Vec<&[ActionIndex]> =
        partition(actions.len(), sub_blocks.max(1)).into_iter().map(|(a, b)| &actions[a..b]).filter(|b| !b.is_empty()).collect();
    let Some(first) = blocks.first() else {
        return true;
    };
    let f0 = frequency_of_zero(first);
    // with two actions both coordinates move by the same amount
    blocks.iter().all(|b| (frequency_of_zero(b) - f0).abs() <= tolerance + ROUNDING_SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMetrics {
    pub avg_row: f64,
    pub avg_col: f64,
    pub welfare: f64,
    pub fairness: f64,
}

/// Averages over `(row payoff, column payoff)` rounds. Fairness is the mean
/// of per-round products.
pub fn payoff_metrics(payoffs: &[(u8, u8)]) -> PayoffMetrics {
    let n = payoffs.len() as f64;
    let (mut r, mut c, mut p) = (0u64, 0u64, 0u64);
    for &(a, b) in payoffs {
        r += a as u64;
        c += b as u64;
        p += a as u64 * b as u64;
    }
    let avg_row = r as f64 / n;
    let avg_col = c as f64 / n;
    PayoffMetrics { avg_row, avg_col, welfare: avg_row + avg_col, fairness: p as f64 / n }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolutionFlags {
    pub nash: bool,
    pub pareto: bool,
    pub welfare: bool,
    pub fairness: bool,
}

/// Stage-game solution checks for the product of the two marginal
/// strategies, given as probabilities of action 0.
pub fn solution_checks(game: &Game, row_p0: f64, col_p0: f64, epsilon: f64) -> SolutionFlags {
    let prob = |j: JointAction| {
        let pr = if j.row == ActionIndex::ZERO { row_p0 } else { 1.0 - row_p0 };
        let pc = if j.col == ActionIndex::ZERO { col_p0 } else { 1.0 - col_p0 };
        pr * pc
    };
    let expect = |f: &dyn Fn(JointAction) -> f64| JointAction::ALL.iter().map(|&j| prob(j) * f(j)).sum::<f64>();
    let e_row = expect(&|j| game.utility(Seat::Row, j));
    let e_col = expect(&|j| game.utility(Seat::Col, j));
    let e_prod = expect(&|j| game.utility(Seat::Row, j) * game.utility(Seat::Col, j));

    let deviation_gain = |seat: Seat, p_other0: f64, current: f64| {
        ActionIndex::ALL
            .iter()
            .map(|&own| {
                ActionIndex::ALL
                    .iter()
                    .map(|&other| {
                        let p = if other == ActionIndex::ZERO { p_other0 } else { 1.0 - p_other0 };
                        p * game.utility(seat, JointAction::from_seat(seat, own, other))
                    })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
            - current
    };
    let nash = deviation_gain(Seat::Row, col_p0, e_row) <= epsilon && deviation_gain(Seat::Col, row_p0, e_col) <= epsilon;

    let dominated = JointAction::ALL.iter().any(|&j| {
        let (a, b) = (game.utility(Seat::Row, j), game.utility(Seat::Col, j));
        (a - e_row > epsilon && b >= e_col) || (b - e_col > epsilon && a >= e_row)
    });

    SolutionFlags {
        nash,
        pareto: !dominated,
        welfare: e_row + e_col >= game.max_cell_sum() - epsilon,
        fairness: e_prod >= game.max_cell_product() - epsilon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    PayoffRow,
    PayoffCol,
    Welfare,
    Fairness,
    ConvergedRow,
    ConvergedCol,
    Nash,
    Pareto,
    WelfareOptimal,
    FairnessOptimal,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::PayoffRow,
        Criterion::PayoffCol,
        Criterion::Welfare,
        Criterion::Fairness,
        Criterion::ConvergedRow,
        Criterion::ConvergedCol,
        Criterion::Nash,
        Criterion::Pareto,
        Criterion::WelfareOptimal,
        Criterion::FairnessOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::PayoffRow => "payoff_p1",
            Criterion::PayoffCol => "payoff_p2",
            Criterion::Welfare => "welfare",
            Criterion::Fairness => "fairness",
            Criterion::ConvergedRow => "converged_p1",
            Criterion::ConvergedCol => "converged_p2",
            Criterion::Nash => "nash",
            Criterion::Pareto => "pareto",
            Criterion::WelfareOptimal => "welfare_opt",
            Criterion::FairnessOptimal => "fairness_opt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Criterion::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlice {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    /// Empirical probability of action 0 for each player.
    pub row_p0: f64,
    pub col_p0: f64,
    pub payoffs: PayoffMetrics,
    pub converged_row: bool,
    pub converged_col: bool,
    pub solutions: SolutionFlags,
}

impl TimeSlice {
    /// Criterion value; flags read as 0 or 1.
    pub fn value(&self, c: Criterion) -> f64 {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        match c {
            Criterion::PayoffRow => self.payoffs.avg_row,
            Criterion::PayoffCol => self.payoffs.avg_col,
            Criterion::Welfare => self.payoffs.welfare,
            Criterion::Fairness => self.payoffs.fairness,
            Criterion::ConvergedRow => flag(self.converged_row),
            Criterion::ConvergedCol => flag(self.converged_col),
            Criterion::Nash => flag(self.solutions.nash),
            Criterion::Pareto => flag(self.solutions.pareto),
            Criterion::WelfareOptimal => flag(self.solutions.welfare),
            Criterion::FairnessOptimal => flag(self.solutions.fairness),
        }
    }
}

/// Slices a play's joint actions and evaluates every criterion per slice.
pub fn slice_play(game: &Game, joints: &[JointAction], cfg: &MetricsConfig) -> Result<Vec<TimeSlice>> {
    if cfg.slices == 0 || joints.len() < cfg.slices {
        return Err(Error::invalid("a play needs at least one round per slice"));
    }
    Ok(partition(joints.len(), cfg.slices)
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            let part = &joints[start..end];
            let rows: Vec<ActionIndex> = part.iter().map(|j| j.row).collect();
            let cols: Vec<ActionIndex> = part.iter().map(|j| j.col).collect();
            let pays: Vec<(u8, u8)> = part.iter().map(|&j| (game.payoff(Seat::Row, j), game.payoff(Seat::Col, j))).collect();
            let row_p0 = frequency_of_zero(&rows);
            let col_p0 = frequency_of_zero(&cols);
            TimeSlice {
                index,
                start,
                end,
                row_p0,
                col_p0,
                payoffs: payoff_metrics(&pays),
                converged_row: convergence(&rows, cfg.sub_blocks, cfg.convergence_tolerance),
                converged_col: convergence(&cols, cfg.sub_blocks, cfg.convergence_tolerance),
                solutions: solution_checks(game, row_p0, col_p0, cfg.epsilon),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{enumerate_games, game_by_id, GameClass};
    use crate::rng;
    use alloc::vec;
    use rand::Rng;

    const Z: ActionIndex = ActionIndex::ZERO;
    const O: ActionIndex = ActionIndex::ONE;

    #[test]
    fn convergence_examples() {
        assert!(convergence(&[O; 100], 5, 0.05));
        let mut half = vec![Z; 50];
        half.extend([O; 50]);
        assert!(!convergence(&half, 5, 0.05));
        // alternating play is stationary block to block
        let alt: Vec<ActionIndex> = (0..100).map(|i| ActionIndex::from_index(i % 2)).collect();
        assert!(convergence(&alt, 5, 0.05));
    }

    /// Exact pass probability for i.i.d. fair coin play in 5 blocks of 100:
    /// sum over the first block's count k of P(k) * P(|K - k| <= 5)^4.
    fn iid_pass_probability() -> f64 {
        let mut binom = [0.0f64; 101];
        // log-space binomial(100, k) / 2^100
        for (k, b) in binom.iter_mut().enumerate() {
            let ln = libm::lgamma(101.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma(101.0 - k as f64) - 100.0 * core::f64::consts::LN_2;
            *b = libm::exp(ln);
        }
        (0..=100usize)
            .map(|k| {
                let near: f64 = (k.saturating_sub(5)..=(k + 5).min(100)).map(|m| binom[m]).sum();
                binom[k] * libm::pow(near, 4.0)
            })
            .sum()
    }

    #[test]
    fn iid_fair_play_pass_rate_matches_exact_probability() {
        let exact = iid_pass_probability();
        let trials = 4000;
        let mut r = rng::stream(2024);
        let passes = (0..trials)
            .filter(|_| {
                let acts: Vec<ActionIndex> = (0..500).map(|_| ActionIndex::from_index(r.random_range(0..2))).collect();
                convergence(&acts, 5, 0.05)
            })
            .count();
        let rate = passes as f64 / trials as f64;
        let se = libm::sqrt(exact * (1.0 - exact) / trials as f64);
        assert!((rate - exact).abs() < 3.0 * se, "rate {rate} exact {exact}");
        // fair coin play does not look converged most of the time
        assert!(exact < 0.25, "{exact}");
    }

    #[test]
    fn payoff_metric_examples() {
        assert_eq!(payoff_metrics(&[(4, 4); 10]), PayoffMetrics { avg_row: 4.0, avg_col: 4.0, welfare: 8.0, fairness: 16.0 });
        assert_eq!(payoff_metrics(&[(1, 1); 3]), PayoffMetrics { avg_row: 1.0, avg_col: 1.0, welfare: 2.0, fairness: 1.0 });
        let alt = payoff_metrics(&[(4, 1), (1, 4), (4, 1), (1, 4)]);
        assert_eq!(alt, PayoffMetrics { avg_row: 2.5, avg_col: 2.5, welfare: 5.0, fairness: 4.0 });
    }

    #[test]
    fn pure_mutual_best_cell_passes_everything() {
        for g in enumerate_games().into_iter().filter(|g| g.class() == GameClass::NoConflict) {
            let cell = JointAction::ALL.into_iter().find(|&j| g.payoff(Seat::Row, j) == 4 && g.payoff(Seat::Col, j) == 4).unwrap();
            let p = |a: ActionIndex| if a == Z { 1.0 } else { 0.0 };
            let f = solution_checks(&g, p(cell.row), p(cell.col), 0.1);
            assert_eq!(f, SolutionFlags { nash: true, pareto: true, welfare: true, fairness: true });
        }
    }

    #[test]
    fn uniform_play_is_not_nash_under_dominance() {
        for g in enumerate_games().into_iter().filter(|g| g.has_dominant_action(Seat::Row) || g.has_dominant_action(Seat::Col)) {
            // gain of switching to the dominant action from a 50/50 mix is at least 0.5
            assert!(!solution_checks(&g, 0.5, 0.5, 0.1).nash, "game {}", g.id());
        }
    }

    #[test]
    fn pure_nash_by_hand() {
        // prisoner's-dilemma-like: both defect (1,1) gives (2,2)
        let g = Game::from_payoffs([[[3, 3], [1, 4]], [[4, 1], [2, 2]]]).unwrap();
        let f = solution_checks(&g, 0.0, 0.0, 0.1);
        assert!(f.nash && !f.pareto && !f.welfare && !f.fairness);
        let c = solution_checks(&g, 1.0, 1.0, 0.1);
        assert!(!c.nash && c.pareto && c.fairness);
    }

    #[test]
    fn slices_cover_the_play() {
        let g = game_by_id(5).unwrap();
        let mut r = rng::stream(1);
        let joints: Vec<JointAction> = (0..1003).map(|_| JointAction::from_cell(r.random_range(0..4))).collect();
        let s = slice_play(&g, &joints, &MetricsConfig::default()).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s[0].start, 0);
        assert_eq!(s[19].end, 1003);
        for w in s.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        for x in &s {
            assert!((1.0..=4.0).contains(&x.payoffs.avg_row) && (2.0..=8.0).contains(&x.payoffs.welfare));
            assert!((1.0..=16.0).contains(&x.payoffs.fairness));
        }
        assert!(slice_play(&g, &joints[..10], &MetricsConfig::default()).is_err());
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(Criterion::parse(c.name()), Some(c));
        }
    }
}
