//! Runs every (game, play, horizon, prior) combination of a configuration
//! and writes the results directory.
//!
//! Each (game, play) pair gets one seed. The type pool, the opponent's draws
//! and HBA's tie-breaks all derive from it, so the prior methods of one pair
//! are compared on identical conditions.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use typeprior_core::metrics::{slice_play, Criterion, MetricsConfig, TimeSlice};
use typeprior_core::play::{run_play, PlayConfig, HBA_SEAT};
use typeprior_core::policy::sample_type_set_with;
use typeprior_core::prior::{compute_prior, PriorCache, PriorConfig, PriorMethod};
use typeprior_core::rng::derive_seed;
use typeprior_core::{Game, GameClass, JointAction};

use crate::config::{ExperimentConfig, Resolved};
use crate::pool::pool_hash;

pub const WORKERS_ENV: &str = "TYPEPRIOR_WORKERS";
pub const IDENTIFICATION_THRESHOLD: f64 = 0.95;

pub const METRICS_FILE: &str = "metrics.csv";
pub const PLAYS_FILE: &str = "plays.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Seed of one (game, play) pair: master, then opponent, then game id, then
/// play index.
pub fn play_seed(master: u64, opponent_tag: u64, game_id: u16, play: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(master, opponent_tag), u64::from(game_id)), play as u64)
}

#[derive(Debug, Clone)]
pub struct PlayOutcome {
    pub game_id: u16,
    pub class: GameClass,
    pub play: usize,
    pub seed: u64,
    pub horizon: usize,
    pub prior: PriorMethod,
    pub pool_hash: String,
    pub prior_vector: Vec<f64>,
    pub loss_bound: Option<f64>,
    pub collapses: usize,
    /// 1-based round at which the true type's posterior first exceeded
    /// [`IDENTIFICATION_THRESHOLD`]; RT opponents only.
    pub identification_round: Option<usize>,
    pub joints: Vec<JointAction>,
    pub slices: Vec<TimeSlice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayFailure {
    pub game_id: u16,
    pub play: usize,
    pub seed: u64,
    pub horizon: Option<usize>,
    pub prior: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub outcomes: Vec<PlayOutcome>,
    pub failures: Vec<PlayFailure>,
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub game_id: u16,
    pub class: String,
    pub seed: u64,
    pub opponent: String,
    pub prior: String,
    pub h: usize,
    pub slice: usize,
    pub criterion: String,
    pub value: f64,
}

#[derive(Debug, Serialize)]
struct PlayRow<'a> {
    game_id: u16,
    class: &'a str,
    play: usize,
    seed: u64,
    prior: &'a str,
    h: usize,
    pool_hash: &'a str,
    collapses: usize,
    identification_round: Option<usize>,
    loss_bound: Option<f64>,
    prior_vector: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub type_kind: String,
    pub opponent: String,
    pub games: Vec<u16>,
    pub rounds: usize,
    pub outcomes: usize,
    pub failures: usize,
    pub metrics_sha256: String,
    pub plays_sha256: String,
    pub config: ExperimentConfig,
}

fn run_pair(r: &Resolved, game: &Game, play: usize) -> (Vec<PlayOutcome>, Vec<PlayFailure>) {
    let seed = play_seed(r.raw.seed, r.opponent as u64 + 1, game.id(), play);
    let fail = |h: Option<usize>, prior: Option<PriorMethod>, e: &dyn std::fmt::Display| PlayFailure {
        game_id: game.id(),
        play,
        seed,
        horizon: h,
        prior: prior.map(|p| p.name().to_string()),
        message: e.to_string(),
    };
    let types = match sample_type_set_with(r.kind, game, r.raw.n_types, seed, &r.evo) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), vec![fail(None, None, &e)]),
    };
    let hash = pool_hash(game.id(), &types);
    let metrics_cfg = MetricsConfig { slices: r.raw.slices, ..MetricsConfig::default() };
    let mut cache = PriorCache::new();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for &h in &r.raw.horizons {
        let prior_cfg = PriorConfig { t_prior: r.raw.t_prior, samples: r.raw.prior_samples, ..PriorConfig::new(h, seed) };
        for &method in &r.priors {
            let result = compute_prior(method, game, HBA_SEAT, &types, &prior_cfg, &mut cache).and_then(|spec| {
                let rec = run_play(game, &types, &spec.probabilities, r.opponent, &PlayConfig::new(h, r.rounds), seed)?;
                let slices = slice_play(game, &rec.joints, &metrics_cfg)?;
                Ok((spec, rec, slices))
            });
            match result {
                Ok((spec, rec, slices)) => outcomes.push(PlayOutcome {
                    game_id: game.id(),
                    class: game.class(),
                    play,
                    seed,
                    horizon: h,
                    prior: method,
                    pool_hash: hash.clone(),
                    prior_vector: spec.probabilities,
                    loss_bound: spec.loss_bound,
                    collapses: rec.collapses,
                    identification_round: rec.identification_round(IDENTIFICATION_THRESHOLD),
                    joints: rec.joints,
                    slices,
                }),
                Err(e) => failures.push(fail(Some(h), Some(method), &e)),
            }
        }
    }
    (outcomes, failures)
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0).unwrap_or(0)
}

/// Runs all plays on a worker pool sized by `TYPEPRIOR_WORKERS` (all cores
/// when unset). Results come back sorted by game, play, horizon and prior.
pub fn run_suite(r: &Resolved) -> anyhow::Result<SuiteResult> {
    run_suite_with_workers(r, worker_count())
}

/// As [`run_suite`] with an explicit worker count; 0 means all cores.
pub fn run_suite_with_workers(r: &Resolved, workers: usize) -> anyhow::Result<SuiteResult> {
    let jobs: Vec<(&Game, usize)> = r.games.iter().flat_map(|g| (0..r.raw.plays_per_game).map(move |p| (g, p))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let parts: Vec<_> = pool.install(|| jobs.par_iter().map(|&(g, p)| run_pair(r, g, p)).collect());
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (o, f) in parts {
        outcomes.extend(o);
        failures.extend(f);
    }
    outcomes.sort_by_key(|o| (o.game_id, o.play, o.horizon, o.prior));
    Ok(SuiteResult { outcomes, failures })
}

pub fn metric_rows(r: &Resolved, result: &SuiteResult) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for o in &result.outcomes {
        for s in &o.slices {
            for c in Criterion::ALL {
                rows.push(MetricRow {
                    game_id: o.game_id,
                    class: o.class.name().into(),
                    seed: o.seed,
                    opponent: r.opponent.name().into(),
                    prior: o.prior.name().into(),
                    h: o.horizon,
                    slice: s.index,
                    criterion: c.name().into(),
                    value: s.value(c),
                });
            }
        }
    }
    rows
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(w.into_inner()?)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn metrics_csv(r: &Resolved, result: &SuiteResult) -> anyhow::Result<Vec<u8>> {
    csv_bytes(metric_rows(r, result))
}

/// Writes `metrics.csv`, `plays.csv`, `failures.csv` and `manifest.toml`.
pub fn write_results(r: &Resolved, result: &SuiteResult, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let metrics = metrics_csv(r, result)?;
    let plays = csv_bytes(result.outcomes.iter().map(|o| PlayRow {
        game_id: o.game_id,
        class: o.class.name(),
        play: o.play,
        seed: o.seed,
        prior: o.prior.name(),
        h: o.horizon,
        pool_hash: &o.pool_hash,
        collapses: o.collapses,
        identification_round: o.identification_round,
        loss_bound: o.loss_bound,
        prior_vector: o.prior_vector.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
    }))?;
    let failures = if result.failures.is_empty() {
        b"game_id,play,seed,horizon,prior,message\n".to_vec()
    } else {
        csv_bytes(&result.failures)?
    };
    let manifest = Manifest {
        type_kind: r.kind.name().into(),
        opponent: r.opponent.name().into(),
        games: r.games.iter().map(|g| g.id()).collect(),
        rounds: r.rounds,
        outcomes: result.outcomes.len(),
        failures: result.failures.len(),
        metrics_sha256: sha256_hex(&metrics),
        plays_sha256: sha256_hex(&plays),
        config: r.raw.clone(),
    };
    fs::write(dir.join(METRICS_FILE), metrics)?;
    fs::write(dir.join(PLAYS_FILE), plays)?;
    fs::write(dir.join(FAILURES_FILE), failures)?;
    fs::write(dir.join(MANIFEST_FILE), toml::to_string(&manifest)?)?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> anyhow::Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(rdr.deserialize().collect::<Result<Vec<MetricRow>, _>>()?)
}

pub fn read_manifest(dir: &Path) -> anyhow::Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(toml::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use typeprior_core::opponents::OpponentKind;
    use typeprior_core::TypeKind;

    fn tiny(opponent: OpponentKind) -> Resolved {
        let mut cfg = ExperimentConfig::new(TypeKind::Lft, opponent);
        cfg.games = crate::config::GameFilter::Ids(vec![12, 40]);
        cfg.dominance_filter = Some(false);
        cfg.plays_per_game = 2;
        cfg.horizons = vec![1, 2];
        cfg.priors = vec!["Uniform".into(), "Utility".into(), "LP-Welfare".into()];
        cfg.rounds = Some(40);
        cfg.slices = 4;
        cfg.t_prior = 5;
        cfg.prior_samples = 2;
        cfg.n_types = 3;
        cfg.seed = 11;
        cfg.resolve().unwrap()
    }

    #[test]
    fn priors_share_pool_and_seed() {
        let r = tiny(OpponentKind::Rt);
        let res = run_suite(&r).unwrap();
        assert!(res.outcomes.len() + res.failures.len() > 0);
        for o in &res.outcomes {
            for p in &res.outcomes {
                if (o.game_id, o.play) == (p.game_id, p.play) {
                    assert_eq!(o.pool_hash, p.pool_hash);
                    assert_eq!(o.seed, p.seed);
                }
            }
            assert_eq!(o.slices.len(), 4);
            assert!((o.prior_vector.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn written_results_read_back() {
        let r = tiny(OpponentKind::Fp);
        let res = run_suite(&r).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_results(&r, &res, dir.path()).unwrap();
        let rows = read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
        assert_eq!(rows, metric_rows(&r, &res));
        let m = read_manifest(dir.path()).unwrap();
        assert_eq!(m.opponent, "FP");
        assert_eq!(m.metrics_sha256, sha256_hex(&fs::read(dir.path().join(METRICS_FILE)).unwrap()));
    }

    #[test]
    fn seeds_differ_across_pairs() {
        let a = play_seed(1, 2, 3, 0);
        assert_ne!(a, play_seed(1, 2, 3, 1));
        assert_ne!(a, play_seed(1, 2, 4, 0));
        assert_ne!(a, play_seed(1, 3, 3, 0));
        assert_ne!(a, play_seed(2, 2, 3, 0));
    }
}
