//! Prior beliefs over a type set.
//!
//! Value-based priors need U_k(θ | θ'), the cumulative payoff to player k
//! when the opponent really is θ and HBA plans as if it were θ'. These are
//! estimated by simulation into a [`ValueMatrix`]; its diagonal gives
//! U_k(θ).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::game::{Game, JointAction, Seat};
use crate::hba::{action_values, pick_action, TieBreak};
use crate::lp::{LinearProgram, Relation};
use crate::policy::{PolicyType, TypeSet};
use crate::rng::{self, StreamLabel};

pub const DEFAULT_BOOSTER: u32 = 10;
pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-4;
/// Mass given to each down-weighted type by the Random prior.
pub const RANDOM_PRIOR_MASS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PriorMethod {
    Uniform,
    Random,
    Utility,
    Stackelberg,
    Welfare,
    Fairness,
    LpUtility,
    LpStackelberg,
    LpWelfare,
    LpFairness,
}

impl PriorMethod {
    pub const ALL: [PriorMethod; 10] = [
        PriorMethod::Uniform,
        PriorMethod::Random,
        PriorMethod::Utility,
        PriorMethod::Stackelberg,
        PriorMethod::Welfare,
        PriorMethod::Fairness,
        PriorMethod::LpUtility,
        PriorMethod::LpStackelberg,
        PriorMethod::LpWelfare,
        PriorMethod::LpFairness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PriorMethod::Uniform => "Uniform",
            PriorMethod::Random => "Random",
            PriorMethod::Utility => "Utility",
            PriorMethod::Stackelberg => "Stackelberg",
            PriorMethod::Welfare => "Welfare",
            PriorMethod::Fairness => "Fairness",
            PriorMethod::LpUtility => "LP-Utility",
            PriorMethod::LpStackelberg => "LP-Stackelberg",
            PriorMethod::LpWelfare => "LP-Welfare",
            PriorMethod::LpFairness => "LP-Fairness",
        }
    }

    /// Accepts the display name, case-insensitively, with or without the dash.
    pub fn parse(s: &str) -> Option<Self> {
        let key = |x: &str| x.bytes().filter(|b| *b != b'-' && *b != b'_').map(|b| b.to_ascii_lowercase()).collect::<Vec<u8>>();
        let wanted = key(s);
        PriorMethod::ALL.into_iter().find(|m| key(m.name()) == wanted)
    }

    pub fn needs_values(self) -> bool {
        !matches!(self, PriorMethod::Uniform | PriorMethod::Random)
    }

    pub fn is_lp(self) -> bool {
        matches!(self, PriorMethod::LpUtility | PriorMethod::LpStackelberg | PriorMethod::LpWelfare | PriorMethod::LpFairness)
    }

    fn value(self) -> Option<ValueKind> {
        match self {
            PriorMethod::Utility | PriorMethod::LpUtility => Some(ValueKind::Hba),
            PriorMethod::Stackelberg | PriorMethod::LpStackelberg => Some(ValueKind::Other),
            PriorMethod::Welfare | PriorMethod::LpWelfare => Some(ValueKind::Sum),
            PriorMethod::Fairness | PriorMethod::LpFairness => Some(ValueKind::Product),
            PriorMethod::Uniform | PriorMethod::Random => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValueKind {
    Hba,
    Other,
    Sum,
    Product,
}

impl ValueKind {
    fn of(self, hba: f64, other: f64) -> f64 {
        match self {
            ValueKind::Hba => hba,
            ValueKind::Other => other,
            ValueKind::Sum => hba + other,
            ValueKind::Product => hba * other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub method: PriorMethod,
    pub probabilities: Vec<f64>,
    pub booster: u32,
    pub epsilon_floor: f64,
    /// Optimal worst-case expected loss, for LP methods.
    pub loss_bound: Option<f64>,
}

impl PriorSpec {
    fn plain(method: PriorMethod, probabilities: Vec<f64>) -> Self {
        PriorSpec { method, probabilities, booster: DEFAULT_BOOSTER, epsilon_floor: DEFAULT_EPSILON_FLOOR, loss_bound: None }
    }
}

/// U_k(θ_j | θ_j') for both players, stored row-major by (true, assumed).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMatrix {
    n: usize,
    hba: Vec<f64>,
    other: Vec<f64>,
}

impl ValueMatrix {
    pub fn new(n: usize, hba: Vec<f64>, other: Vec<f64>) -> Result<Self> {
        if n == 0 || hba.len() != n * n || other.len() != n * n {
            return Err(Error::invalid("value matrix needs n*n entries per player"));
        }
        if hba.iter().chain(&other).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite value estimate".into()));
        }
        Ok(ValueMatrix { n, hba, other })
    }

    /// Builds the matrix from `f(true, assumed) -> (U_hba, U_other)`.
    pub fn from_fn<F: FnMut(usize, usize) -> (f64, f64)>(n: usize, mut f: F) -> Result<Self> {
        let mut hba = Vec::with_capacity(n * n);
        let mut other = Vec::with_capacity(n * n);
        for j in 0..n {
            for jp in 0..n {
                let (a, b) = f(j, jp);
                hba.push(a);
                other.push(b);
            }
        }
        Self::new(n, hba, other)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn hba(&self, truth: usize, assumed: usize) -> f64 {
        self.hba[truth * self.n + assumed]
    }

    pub fn other(&self, truth: usize, assumed: usize) -> f64 {
        self.other[truth * self.n + assumed]
    }

    fn value(&self, kind: ValueKind, truth: usize, assumed: usize) -> f64 {
        kind.of(self.hba(truth, assumed), self.other(truth, assumed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Rounds per value-estimation rollout.
    pub t_prior: usize,
    pub samples: usize,
    pub horizon: usize,
    pub booster: u32,
    pub epsilon_floor: f64,
    pub seed: u64,
}

impl PriorConfig {
    pub fn new(horizon: usize, seed: u64) -> Self {
        PriorConfig {
            t_prior: 20,
            samples: 20,
            horizon,
            booster: DEFAULT_BOOSTER,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
            seed,
        }
    }
}

/// Mean cumulative payoffs `(U_hba, U_other)` over `samples` rollouts of
/// `t_prior` rounds in which HBA (in `hba_seat`) holds a point-mass belief
/// on `assumed` while the opponent plays `truth`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_value(
    game: &Game,
    hba_seat: Seat,
    truth: &PolicyType,
    assumed: &PolicyType,
    t_prior: usize,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if t_prior == 0 || samples == 0 || horizon == 0 {
        return Err(Error::invalid("t_prior, samples and horizon must be at least 1"));
    }
    let opp = hba_seat.other();
    let model = core::slice::from_ref(assumed);
    let point_mass = [1.0];
    let (mut sum_hba, mut sum_other) = (0.0, 0.0);
    for s in 0..samples {
        let mut r = rng::stream(rng::derive_seed(seed, s as u64 + 1));
        let mut believed = [assumed.initial_state(game, opp)];
        let mut real = truth.initial_state(game, opp);
        for _ in 0..t_prior {
            let values = action_values(game, hba_seat, model, &point_mass, &believed, horizon);
            let own = pick_action(values, TieBreak::Lexicographic, &mut r);
            let other = truth.distribution(&real).sample(&mut r);
            let step = JointAction::from_seat(hba_seat, own, other);
            sum_hba += game.utility(hba_seat, step);
            sum_other += game.utility(opp, step);
            assumed.observe(&mut believed[0], step);
            truth.observe(&mut real, step);
        }
    }
    Ok((sum_hba / samples as f64, sum_other / samples as f64))
}

/// Seed of the (true, assumed) rollout batch.
pub fn value_pair_seed(seed: u64, n: usize, truth: usize, assumed: usize) -> u64 {
    rng::derive_seed(rng::labeled_seed(seed, StreamLabel::Prior), (truth * n + assumed) as u64 + 1)
}

pub fn estimate_value_matrix(game: &Game, hba_seat: Seat, types: &TypeSet, cfg: &PriorConfig) -> Result<ValueMatrix> {
    let n = types.len();
    let m = types.members();
    let mut err = None;
    let v = ValueMatrix::from_fn(n, |j, jp| {
        let seed = value_pair_seed(cfg.seed, n, j, jp);
        match estimate_value(game, hba_seat, &m[j], &m[jp], cfg.t_prior, cfg.horizon, cfg.samples, seed) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                (0.0, 0.0)
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

pub fn uniform_prior(n: usize) -> Result<PriorSpec> {
    if n == 0 {
        return Err(Error::invalid("prior over an empty type set"));
    }
    Ok(PriorSpec::plain(PriorMethod::Uniform, vec![1.0 / n as f64; n]))
}

/// ⌊n/2⌋ seeded types get [`RANDOM_PRIOR_MASS`]; the rest share the remainder.
pub fn random_prior(n: usize, seed: u64) -> Result<PriorSpec> {
    if n == 0 {
        return Err(Error::invalid("prior over an empty type set"));
    }
    let k = n / 2;
    let mut p = vec![(1.0 - k as f64 * RANDOM_PRIOR_MASS) / (n - k) as f64; n];
    let mut r = rng::stream(seed);
    for i in index::sample(&mut r, n, k) {
        p[i] = RANDOM_PRIOR_MASS;
    }
    Ok(PriorSpec::plain(PriorMethod::Random, p))
}

/// Boosted value prior: P(θ) ∝ ψ(θ)^b, with ψ read off the diagonal.
pub fn value_prior(method: PriorMethod, values: &ValueMatrix, booster: u32) -> Result<PriorSpec> {
    let kind = match (method.value(), method.is_lp()) {
        (Some(k), false) => k,
        _ => return Err(Error::invalid("not a value prior method")),
    };
    let psi: Vec<f64> = (0..values.len()).map(|j| values.value(kind, j, j)).collect();
    let mut spec = boosted(&psi, booster)?;
    spec.method = method;
    Ok(spec)
}

/// Normalised ψ^b, computed as (ψ/max ψ)^b to stay in range.
pub fn boosted(psi: &[f64], booster: u32) -> Result<PriorSpec> {
    if psi.is_empty() {
        return Err(Error::invalid("prior over an empty type set"));
    }
    if psi.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::invalid("value heuristic must be positive"));
    }
    let max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = psi.iter().map(|v| libm::pow(v / max, booster as f64)).collect();
    let total: f64 = w.iter().sum();
    let mut spec = PriorSpec::plain(PriorMethod::Utility, w.into_iter().map(|x| x / total).collect());
    spec.booster = booster;
    Ok(spec)
}

/// Loss matrix A[j][j'] = ψ(θ_j) − value(θ_j | θ_j'), row-major.
pub fn loss_matrix(method: PriorMethod, values: &ValueMatrix) -> Result<Vec<f64>> {
    let kind = match (method.value(), method.is_lp()) {
        (Some(k), true) => k,
        _ => return Err(Error::invalid("not an LP prior method")),
    };
    let n = values.len();
    let mut a = Vec::with_capacity(n * n);
    for j in 0..n {
        let psi = values.value(kind, j, j);
        for jp in 0..n {
            a.push(psi - values.value(kind, j, jp));
        }
    }
    Ok(a)
}

/// Solves min l s.t. (A p)_j <= l for every row j, Σp = 1, p >= floor.
///
/// Among optimal priors the one with the largest minimum entry is returned
/// (a second LP), which makes the answer unique for symmetric instances;
/// for A = 0 it is the uniform prior. The reported loss is max_j (A p)_j at
/// the returned p.
pub fn solve_loss_lp(a: &[f64], n: usize, floor: f64) -> Result<(Vec<f64>, f64)> {
    if n == 0 || a.len() != n * n {
        return Err(Error::invalid("loss matrix must be n*n"));
    }
    if !(floor >= 0.0 && floor * (n as f64) < 1.0) {
        return Err(Error::invalid("epsilon floor times n must be below 1"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite loss matrix".into()));
    }
    // Variables: l+, l-, q_1..q_n with p = floor + q.
    let width = 2 + n;
    let row_constraints = |mut lp: LinearProgram, extra: usize| -> Result<LinearProgram> {
        for j in 0..n {
            let row = &a[j * n..(j + 1) * n];
            let mut c = vec![0.0; width + extra];
            c[0] = -1.0;
            c[1] = 1.0;
            c[2..2 + n].copy_from_slice(row);
            lp = lp.constraint(c, Relation::Le, -floor * row.iter().sum::<f64>())?;
        }
        let mut s = vec![0.0; width + extra];
        s[2..2 + n].iter_mut().for_each(|v| *v = 1.0);
        lp.constraint(s, Relation::Eq, 1.0 - floor * n as f64)
    };
    let mut obj = vec![0.0; width];
    obj[0] = 1.0;
    obj[1] = -1.0;
    let first = row_constraints(LinearProgram::minimize(obj), 0)?.solve()?;
    let l_star = first.objective;

    // Second stage: maximise t <= q_j subject to l <= l* + slack.
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let slack = 1e-12 * scale;
    let mut obj2 = vec![0.0; width + 1];
    obj2[width] = -1.0;
    let mut lp2 = row_constraints(LinearProgram::minimize(obj2), 1)?;
    let mut lrow = vec![0.0; width + 1];
    lrow[0] = 1.0;
    lrow[1] = -1.0;
    lp2 = lp2.constraint(lrow, Relation::Le, l_star + slack)?;
    for j in 0..n {
        let mut c = vec![0.0; width + 1];
        c[width] = 1.0;
        c[2 + j] = -1.0;
        lp2 = lp2.constraint(c, Relation::Le, 0.0)?;
    }
    let finish = |q: &[f64]| {
        let mut p: Vec<f64> = q.iter().map(|q| floor + q.max(0.0)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let l = (0..n)
            .map(|j| a[j * n..(j + 1) * n].iter().zip(&p).map(|(x, y)| x * y).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        (p, l)
    };
    let (p1, l1) = finish(&first.x[2..2 + n]);
    // keep the first-stage prior if the second stage fails or loses ground
    let (p, l) = match lp2.solve() {
        Ok(second) => {
            let (p2, l2) = finish(&second.x[2..2 + n]);
            if l2 <= l1 + slack { (p2, l2) } else { (p1, l1) }
        }
        Err(_) => (p1, l1),
    };
    Ok((p, l))
}

pub fn lp_prior(method: PriorMethod, values: &ValueMatrix, epsilon_floor: f64) -> Result<PriorSpec> {
    let a = loss_matrix(method, values)?;
    let (p, l) = solve_loss_lp(&a, values.len(), epsilon_floor)?;
    Ok(PriorSpec { method, probabilities: p, booster: DEFAULT_BOOSTER, epsilon_floor, loss_bound: Some(l) })
}

/// Builds the prior for `method` from an already estimated value matrix.
pub fn prior_from_values(method: PriorMethod, values: &ValueMatrix, cfg: &PriorConfig) -> Result<PriorSpec> {
    if method.is_lp() {
        lp_prior(method, values, cfg.epsilon_floor)
    } else if method.needs_values() {
        value_prior(method, values, cfg.booster)
    } else {
        Err(Error::invalid("method does not use values"))
    }
}

/// Seed of the Random prior's selection.
pub fn random_prior_seed(seed: u64) -> u64 {
    rng::derive_seed(rng::labeled_seed(seed, StreamLabel::Prior), 0)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CacheKey {
    game: [u8; 8],
    seat: u8,
    genomes: Vec<Vec<u64>>,
    seed: u64,
    horizon: usize,
    t_prior: usize,
    samples: usize,
}

/// Value matrices keyed by game, type set and estimation settings.
#[derive(Debug, Clone, Default)]
pub struct PriorCache {
    values: BTreeMap<CacheKey, ValueMatrix>,
}

impl PriorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_matrix(&mut self, game: &Game, hba_seat: Seat, types: &TypeSet, cfg: &PriorConfig) -> Result<ValueMatrix> {
        let key = CacheKey {
            game: game.encoding(),
            seat: hba_seat.number(),
            genomes: types.members().iter().map(|t| t.genome().iter().map(|v| v.to_bits()).collect()).collect(),
            seed: cfg.seed,
            horizon: cfg.horizon,
            t_prior: cfg.t_prior,
            samples: cfg.samples,
        };
        if let Some(v) = self.values.get(&key) {
            return Ok(v.clone());
        }
        let v = estimate_value_matrix(game, hba_seat, types, cfg)?;
        self.values.insert(key, v.clone());
        Ok(v)
    }
}

pub fn compute_prior(
    method: PriorMethod,
    game: &Game,
    hba_seat: Seat,
    types: &TypeSet,
    cfg: &PriorConfig,
    cache: &mut PriorCache,
) -> Result<PriorSpec> {
    match method {
        PriorMethod::Uniform => uniform_prior(types.len()),
        PriorMethod::Random => random_prior(types.len(), random_prior_seed(cfg.seed)),
        _ => {
            let v = cache.value_matrix(game, hba_seat, types, cfg)?;
            prior_from_values(method, &v, cfg)
        }
    }
}
