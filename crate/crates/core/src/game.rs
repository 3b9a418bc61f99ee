//! Strictly ordinal 2×2 bimatrix games.
//!
//! Payoffs are ranks 1..=4 for each player. Two games are the same benchmark
//! game when one can be turned into the other by swapping rows, swapping
//! columns, interchanging the players, or any combination of these. Each
//! equivalence class is represented by its lexicographically smallest
//! encoding, and [`enumerate_games`] numbers the 78 classes by that encoding.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// One of the two actions of a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionIndex(u8);

impl ActionIndex {
    pub const ZERO: ActionIndex = ActionIndex(0);
    pub const ONE: ActionIndex = ActionIndex(1);
    pub const ALL: [ActionIndex; 2] = [ActionIndex::ZERO, ActionIndex::ONE];

    pub fn new(value: u8) -> Option<Self> {
        (value < 2).then_some(ActionIndex(value))
    }

    pub fn from_index(index: usize) -> Self {
        debug_assert!(index < 2);
        ActionIndex((index & 1) as u8)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn other(self) -> Self {
        ActionIndex(1 - self.0)
    }
}

impl fmt::Display for ActionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Player 1 chooses the row, player 2 the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Seat {
    Row,
    Col,
}

impl Seat {
    pub const BOTH: [Seat; 2] = [Seat::Row, Seat::Col];

    pub fn other(self) -> Self {
        match self {
            Seat::Row => Seat::Col,
            Seat::Col => Seat::Row,
        }
    }

    /// 1 for the row player, 2 for the column player.
    pub fn number(self) -> u8 {
        match self {
            Seat::Row => 1,
            Seat::Col => 2,
        }
    }

    pub fn from_number(player: u8) -> Option<Self> {
        match player {
            1 => Some(Seat::Row),
            2 => Some(Seat::Col),
            _ => None,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.number() as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointAction {
    pub row: ActionIndex,
    pub col: ActionIndex,
}

impl JointAction {
    pub const ALL: [JointAction; 4] = [
        JointAction::new(ActionIndex::ZERO, ActionIndex::ZERO),
        JointAction::new(ActionIndex::ZERO, ActionIndex::ONE),
        JointAction::new(ActionIndex::ONE, ActionIndex::ZERO),
        JointAction::new(ActionIndex::ONE, ActionIndex::ONE),
    ];

    pub const fn new(row: ActionIndex, col: ActionIndex) -> Self {
        JointAction { row, col }
    }

    /// Builds a joint action from the actions of `seat` and of its opponent.
    pub fn from_seat(seat: Seat, own: ActionIndex, other: ActionIndex) -> Self {
        match seat {
            Seat::Row => JointAction::new(own, other),
            Seat::Col => JointAction::new(other, own),
        }
    }

    #[inline]
    pub fn of(self, seat: Seat) -> ActionIndex {
        match seat {
            Seat::Row => self.row,
            Seat::Col => self.col,
        }
    }

    /// Row-major cell index in `0..4`.
    #[inline]
    pub fn cell(self) -> usize {
        self.row.index() * 2 + self.col.index()
    }

    pub fn from_cell(cell: usize) -> Self {
        JointAction::ALL[cell & 3]
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GameClass {
    NoConflict,
    Conflict,
}

impl GameClass {
    pub fn name(self) -> &'static str {
        match self {
            GameClass::NoConflict => "no-conflict",
            GameClass::Conflict => "conflict",
        }
    }
}

/// Probability a single player assigns to action 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MixedStrategy(f64);

impl MixedStrategy {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(MixedStrategy(p))
        } else {
            Err(Error::invalid("mixed strategy probability outside [0, 1]"))
        }
    }

    pub fn pure(action: ActionIndex) -> Self {
        MixedStrategy(if action == ActionIndex::ZERO { 1.0 } else { 0.0 })
    }

    /// Probability of action 0.
    pub fn p(self) -> f64 {
        self.0
    }

    pub fn prob(self, action: ActionIndex) -> f64 {
        if action == ActionIndex::ZERO {
            self.0
        } else {
            1.0 - self.0
        }
    }
}

/// Payoff grid indexed `[row][col][player]`.
pub type Payoffs = [[[u8; 2]; 2]; 2];

/// Element of the order-8 symmetry group of 2×2 bimatrix games.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry {
    pub swap_players: bool,
    pub swap_rows: bool,
    pub swap_cols: bool,
}

impl Symmetry {
    pub fn all() -> [Symmetry; 8] {
        let mut out = [Symmetry { swap_players: false, swap_rows: false, swap_cols: false }; 8];
        for (i, s) in out.iter_mut().enumerate() {
            s.swap_players = i & 4 != 0;
            s.swap_rows = i & 2 != 0;
            s.swap_cols = i & 1 != 0;
        }
        out
    }

    pub fn apply(self, p: &Payoffs) -> Payoffs {
        let mut base = *p;
        if self.swap_players {
            for r in 0..2 {
                for c in 0..2 {
                    base[r][c] = [p[c][r][1], p[c][r][0]];
                }
            }
        }
        let mut out = base;
        for r in 0..2 {
            for c in 0..2 {
                let sr = r ^ self.swap_rows as usize;
                let sc = c ^ self.swap_cols as usize;
                out[r][c] = base[sr][sc];
            }
        }
        out
    }
}

/// Row-major `(cell, player)` encoding: `u1(0,0), u2(0,0), u1(0,1), ...`.
pub fn encode(p: &Payoffs) -> [u8; 8] {
    let mut out = [0u8; 8];
    for cell in 0..4 {
        let (r, c) = (cell / 2, cell % 2);
        out[2 * cell] = p[r][c][0];
        out[2 * cell + 1] = p[r][c][1];
    }
    out
}

pub fn decode(e: &[u8; 8]) -> Payoffs {
    let mut p = [[[0u8; 2]; 2]; 2];
    for cell in 0..4 {
        let (r, c) = (cell / 2, cell % 2);
        p[r][c] = [e[2 * cell], e[2 * cell + 1]];
    }
    p
}

fn is_ordinal(p: &Payoffs, player: usize) -> bool {
    let mut seen = [false; 5];
    for row in p {
        for cell in row {
            let v = cell[player] as usize;
            if !(1..=4).contains(&v) || seen[v] {
                return false;
            }
            seen[v] = true;
        }
    }
    true
}

/// Canonical representative payoffs of `p`'s equivalence class.
pub fn canonical_payoffs(p: &Payoffs) -> Payoffs {
    Symmetry::all()
        .iter()
        .map(|s| s.apply(p))
        .min_by_key(encode)
        .expect("symmetry group is non-empty")
}

/// All 4!×4! strictly ordinal payoff assignments, before quotienting.
pub fn raw_payoffs() -> Vec<Payoffs> {
    let perms = permutations4();
    let mut out = Vec::with_capacity(perms.len() * perms.len());
    for a in &perms {
        for b in &perms {
            let mut p = [[[0u8; 2]; 2]; 2];
            for cell in 0..4 {
                p[cell / 2][cell % 2] = [a[cell], b[cell]];
            }
            out.push(p);
        }
    }
    out
}

fn permutations4() -> Vec<[u8; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 1..=4u8 {
        for b in 1..=4u8 {
            for c in 1..=4u8 {
                for d in 1..=4u8 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Game {
    payoffs: Payoffs,
    id: u16,
    class: GameClass,
    p2_has_dominant: bool,
}

impl Game {
    /// Builds a game with id 0 (no benchmark id) from a payoff grid.
    pub fn from_payoffs(payoffs: Payoffs) -> Result<Self> {
        Self::with_id(payoffs, 0)
    }

    pub fn with_id(payoffs: Payoffs, id: u16) -> Result<Self> {
        for player in 0..2 {
            if !is_ordinal(&payoffs, player) {
                return Err(Error::NotOrdinal(player as u8 + 1));
            }
        }
        let best = |player: usize| {
            (0..4)
                .find(|&cell| payoffs[cell / 2][cell % 2][player] == 4)
                .expect("ordinal payoffs contain a 4")
        };
        let class = if best(0) == best(1) { GameClass::NoConflict } else { GameClass::Conflict };
        let mut g = Game { payoffs, id, class, p2_has_dominant: false };
        g.p2_has_dominant = g.has_dominant_action(Seat::Col);
        Ok(g)
    }

    pub fn from_encoding(e: &[u8; 8]) -> Result<Self> {
        Self::from_payoffs(decode(e))
    }

    pub fn encoding(&self) -> [u8; 8] {
        encode(&self.payoffs)
    }

    pub fn payoffs(&self) -> &Payoffs {
        &self.payoffs
    }

    pub fn id(&self) -> u16 {
        self.id
    }

    pub fn class(&self) -> GameClass {
        self.class
    }

    pub fn p2_has_dominant(&self) -> bool {
        self.p2_has_dominant
    }

    #[inline]
    pub fn payoff(&self, seat: Seat, joint: JointAction) -> u8 {
        self.payoffs[joint.row.index()][joint.col.index()][seat.index()]
    }

    #[inline]
    pub fn utility(&self, seat: Seat, joint: JointAction) -> f64 {
        self.payoff(seat, joint) as f64
    }

    /// `m[own][other]`: payoff to `seat` when it plays `own` and the
    /// opponent plays `other`.
    pub fn seat_matrix(&self, seat: Seat) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for own in ActionIndex::ALL {
            for other in ActionIndex::ALL {
                m[own.index()][other.index()] =
                    self.utility(seat, JointAction::from_seat(seat, own, other));
            }
        }
        m
    }

    /// The action of `seat` that is strictly better against both opponent
    /// actions, if any.
    pub fn dominant_action(&self, seat: Seat) -> Option<ActionIndex> {
        let m = self.seat_matrix(seat);
        ActionIndex::ALL.into_iter().find(|a| {
            let (x, y) = (a.index(), a.other().index());
            m[x][0] > m[y][0] && m[x][1] > m[y][1]
        })
    }

    pub fn has_dominant_action(&self, seat: Seat) -> bool {
        self.dominant_action(seat).is_some()
    }

    pub fn transformed(&self, s: Symmetry) -> Game {
        Game::from_payoffs(s.apply(&self.payoffs)).expect("symmetries preserve ordinality")
    }

    /// Canonical representative of this game's class (id is not assigned).
    pub fn canonical(&self) -> Game {
        Game::from_payoffs(canonical_payoffs(&self.payoffs)).expect("symmetries preserve ordinality")
    }

    /// Best joint outcome for welfare (sum) and fairness (product), as values.
    pub fn max_cell_sum(&self) -> f64 {
        JointAction::ALL
            .iter()
            .map(|&j| self.utility(Seat::Row, j) + self.utility(Seat::Col, j))
            .fold(f64::MIN, f64::max)
    }

    pub fn max_cell_product(&self) -> f64 {
        JointAction::ALL
            .iter()
            .map(|&j| self.utility(Seat::Row, j) * self.utility(Seat::Col, j))
            .fold(f64::MIN, f64::max)
    }
}

/// The 78 canonical strictly ordinal 2×2 games, ordered by encoding and
/// numbered from 1.
pub fn enumerate_games() -> Vec<Game> {
    let mut reps: Vec<[u8; 8]> = raw_payoffs().iter().map(|p| encode(&canonical_payoffs(p))).collect();
    reps.sort_unstable();
    reps.dedup();
    reps.iter()
        .enumerate()
        .map(|(i, e)| Game::with_id(decode(e), i as u16 + 1).expect("enumerated games are ordinal"))
        .collect()
}

/// Looks up a benchmark game by id.
pub fn game_by_id(id: u16) -> Option<Game> {
    enumerate_games().into_iter().find(|g| g.id == id)
}

// Candidate mixtures for 2×2 max-min problems: both pure strategies and the
// crossing point of the two opponent-response lines when it is interior.
fn candidates(m: &[[f64; 2]; 2]) -> ([f64; 3], usize) {
    // value against opponent action b when playing 0 with probability p:
    // m[1][b] + p (m[0][b] - m[1][b])
    let s0 = m[0][0] - m[1][0];
    let s1 = m[0][1] - m[1][1];
    let mut out = [1.0, 0.0, 0.0];
    let mut n = 2;
    if s0 != s1 {
        let p = (m[1][1] - m[1][0]) / (s0 - s1);
        if p > 0.0 && p < 1.0 {
            out[2] = p;
            n = 3;
        }
    }
    (out, n)
}

fn lower_envelope(m: &[[f64; 2]; 2], p: f64) -> f64 {
    let v0 = p * m[0][0] + (1.0 - p) * m[1][0];
    let v1 = p * m[0][1] + (1.0 - p) * m[1][1];
    v0.min(v1)
}

fn upper_envelope(m: &[[f64; 2]; 2], q: f64) -> f64 {
    // m[a][b]: payoff to the punished player for its action a and punisher action b;
    // q is the punisher's probability of action 0.
    let v0 = q * m[0][0] + (1.0 - q) * m[0][1];
    let v1 = q * m[1][0] + (1.0 - q) * m[1][1];
    v0.max(v1)
}

/// The strategy of `seat` maximizing its worst-case expected payoff, and that
/// payoff (the security value).
pub fn maximin_strategy(game: &Game, seat: Seat) -> (MixedStrategy, f64) {
    let m = game.seat_matrix(seat);
    let (cands, n) = candidates(&m);
    let mut best = (cands[0], lower_envelope(&m, cands[0]));
    for &p in &cands[1..n] {
        let v = lower_envelope(&m, p);
        if v > best.1 + 1e-12 {
            best = (p, v);
        }
    }
    (MixedStrategy(best.0), best.1)
}

/// The strategy of `opponent`'s adversary that minimizes `opponent`'s best
/// achievable expected payoff, and that payoff.
pub fn minimax_against(game: &Game, opponent: Seat) -> (MixedStrategy, f64) {
    let m = game.seat_matrix(opponent);
    // transpose so rows index the punisher's action
    let t = [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
    let (cands, n) = candidates(&t);
    let mut best = (cands[0], upper_envelope(&m, cands[0]));
    for &q in &cands[1..n] {
        let v = upper_envelope(&m, q);
        if v < best.1 - 1e-12 {
            best = (q, v);
        }
    }
    (MixedStrategy(best.0), best.1)
}

/// Strategy of the other player that minimizes `opponent`'s best-case
/// expected payoff.
pub fn minimax_strategy_against(game: &Game, opponent: Seat) -> MixedStrategy {
    minimax_against(game, opponent).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> Game {
        // row player: cooperate = 0, defect = 1
        Game::from_payoffs([[[3, 3], [1, 4]], [[4, 1], [2, 2]]]).unwrap()
    }

    fn pennies() -> Game {
        Game::from_payoffs([[[4, 1], [1, 4]], [[2, 3], [3, 2]]]).unwrap()
    }

    #[test]
    fn rejects_non_ordinal_payoffs() {
        let bad = [[[3, 3], [3, 4]], [[4, 1], [2, 2]]];
        assert_eq!(Game::from_payoffs(bad), Err(Error::NotOrdinal(1)));
        let bad = [[[3, 3], [1, 4]], [[4, 1], [2, 5]]];
        assert_eq!(Game::from_payoffs(bad), Err(Error::NotOrdinal(2)));
    }

    #[test]
    fn raw_enumeration_has_576_games() {
        assert_eq!(raw_payoffs().len(), 576);
        let distinct: alloc::collections::BTreeSet<_> = raw_payoffs().iter().map(encode).collect();
        assert_eq!(distinct.len(), 576);
    }

    #[test]
    fn benchmark_counts() {
        let games = enumerate_games();
        assert_eq!(games.len(), 78);
        let nc = games.iter().filter(|g| g.class() == GameClass::NoConflict).count();
        assert_eq!(nc, 21);
        assert_eq!(games.len() - nc, 57);
        for (i, g) in games.iter().enumerate() {
            assert_eq!(g.id() as usize, i + 1);
        }
    }

    #[test]
    fn canonicalization_is_idempotent_and_closed() {
        for p in raw_payoffs() {
            let c = canonical_payoffs(&p);
            assert_eq!(canonical_payoffs(&c), c);
        }
        for g in enumerate_games() {
            for s in Symmetry::all() {
                assert_eq!(g.transformed(s).canonical().encoding(), g.encoding());
            }
        }
    }

    #[test]
    fn dominance_examples() {
        assert!(pd().has_dominant_action(Seat::Row));
        assert!(pd().has_dominant_action(Seat::Col));
        assert_eq!(pd().dominant_action(Seat::Row), Some(ActionIndex::ONE));
        assert!(!pennies().has_dominant_action(Seat::Row));
        assert!(!pennies().has_dominant_action(Seat::Col));
    }

    #[test]
    fn maximin_pure_under_dominance() {
        // row action 0 strictly dominates
        let g = Game::from_payoffs([[[4, 1], [3, 2]], [[2, 3], [1, 4]]]).unwrap();
        let (s, v) = maximin_strategy(&g, Seat::Row);
        assert_eq!(s.p(), 1.0);
        assert_eq!(v, 3.0);
    }

    #[test]
    fn maximin_interior_matches_grid_search() {
        let g = pennies();
        let m = g.seat_matrix(Seat::Row);
        let mut best = (0.0, f64::MIN);
        for k in 0..=10_000 {
            let p = k as f64 * 1e-4;
            let v = lower_envelope(&m, p);
            if v > best.1 {
                best = (p, v);
            }
        }
        let (s, v) = maximin_strategy(&g, Seat::Row);
        assert!((s.p() - best.0).abs() < 1e-4, "{} vs {}", s.p(), best.0);
        assert!((v - best.1).abs() < 1e-6);
        assert!(s.p() > 0.0 && s.p() < 1.0);
        // closed form: p = 1/4, value 2.5
        assert!((s.p() - 0.25).abs() < 1e-12);
        assert!((v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn minimax_interior_matches_grid_search() {
        let g = pennies();
        let m = g.seat_matrix(Seat::Col);
        let mut best = (0.0, f64::MAX);
        for k in 0..=10_000 {
            let q = k as f64 * 1e-4;
            let v = upper_envelope(&m, q);
            if v < best.1 {
                best = (q, v);
            }
        }
        let (s, v) = minimax_against(&g, Seat::Col);
        assert!((s.p() - best.0).abs() < 1e-4);
        assert!((v - best.1).abs() < 1e-6);
    }

    #[test]
    fn minimax_duality_on_all_games() {
        for g in enumerate_games() {
            for seat in Seat::BOTH {
                let (_, security) = maximin_strategy(&g, seat);
                let (_, imposed) = minimax_against(&g, seat);
                assert!((security - imposed).abs() < 1e-9, "game {} seat {:?}", g.id(), seat);
                assert!((1.0..=4.0).contains(&security));
            }
        }
    }

    #[test]
    fn joint_action_cells_round_trip() {
        for (i, j) in JointAction::ALL.iter().enumerate() {
            assert_eq!(j.cell(), i);
            assert_eq!(JointAction::from_cell(i), *j);
            for seat in Seat::BOTH {
                assert_eq!(JointAction::from_seat(seat, j.of(seat), j.of(seat.other())), *j);
            }
        }
    }
}
