//! Suite configuration, read from a flat TOML file.
//!
//! ```toml
//! type_kind = "CDT"
//! opponent = "FP"
//! horizons = [3]
//! games = "conflict"      # "all", "no-conflict", "conflict" or a list of ids
//! game_limit = 10
//! plays_per_game = 5
//! rounds = 1000
//! seed = 7
//! output_dir = "out/cdt-fp"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use typeprior_core::evo::EvoConfig;
use typeprior_core::opponents::OpponentKind;
use typeprior_core::prior::PriorMethod;
use typeprior_core::{enumerate_games, Game, GameClass, TypeKind};

pub const DEFAULT_PLAYS_PER_GAME: usize = 10;
pub const DEFAULT_RT_ROUNDS: usize = 100;
pub const DEFAULT_FICTITIOUS_ROUNDS: usize = 1000;
pub const DEFAULT_N_TYPES: usize = 10;
pub const DEFAULT_HORIZONS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameFilter {
    Named(String),
    Ids(Vec<u16>),
}

impl Default for GameFilter {
    fn default() -> Self {
        GameFilter::Named("all".into())
    }
}

/// Overrides for the evolutionary type generators.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvoOverrides {
    pub pool_size: Option<usize>,
    pub generations: Option<usize>,
    pub evaluation_rounds: Option<usize>,
    pub opponents_per_evaluation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub type_kind: String,
    pub opponent: String,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    /// Prior method names; empty means all ten.
    #[serde(default)]
    pub priors: Vec<String>,
    #[serde(default)]
    pub games: GameFilter,
    /// Keep only the first `game_limit` games (in id order) after filtering.
    pub game_limit: Option<usize>,
    /// Drop games where player 2 has a dominant action. Defaults to on for
    /// FP and CFP opponents and off for RT.
    pub dominance_filter: Option<bool>,
    #[serde(default = "default_plays")]
    pub plays_per_game: usize,
    pub rounds: Option<usize>,
    #[serde(default = "default_n_types")]
    pub n_types: usize,
    #[serde(default = "default_slices")]
    pub slices: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_prior")]
    pub t_prior: usize,
    #[serde(default = "default_samples")]
    pub prior_samples: usize,
    #[serde(default)]
    pub evo: EvoOverrides,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_horizons() -> Vec<usize> {
    DEFAULT_HORIZONS.to_vec()
}
fn default_plays() -> usize {
    DEFAULT_PLAYS_PER_GAME
}
fn default_n_types() -> usize {
    DEFAULT_N_TYPES
}
fn default_slices() -> usize {
    typeprior_core::metrics::DEFAULT_SLICES
}
fn default_t_prior() -> usize {
    20
}
fn default_samples() -> usize {
    20
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// A validated configuration with names resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: ExperimentConfig,
    pub kind: TypeKind,
    pub opponent: OpponentKind,
    pub priors: Vec<PriorMethod>,
    pub games: Vec<Game>,
    pub rounds: usize,
    pub evo: EvoConfig,
}

impl ExperimentConfig {
    pub fn new(kind: TypeKind, opponent: OpponentKind) -> Self {
        ExperimentConfig {
            type_kind: kind.name().into(),
            opponent: opponent.name().into(),
            horizons: default_horizons(),
            priors: Vec::new(),
            games: GameFilter::default(),
            game_limit: None,
            dominance_filter: None,
            plays_per_game: DEFAULT_PLAYS_PER_GAME,
            rounds: None,
            n_types: DEFAULT_N_TYPES,
            slices: default_slices(),
            seed: 0,
            t_prior: default_t_prior(),
            prior_samples: default_samples(),
            evo: EvoOverrides::default(),
            output_dir: default_output(),
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let kind = TypeKind::parse(&self.type_kind).with_context(|| format!("unknown type kind {:?}", self.type_kind))?;
        let opponent: OpponentKind = OpponentKind::parse(&self.opponent).with_context(|| format!("unknown opponent {:?}", self.opponent))?;
        let priors = if self.priors.is_empty() {
            PriorMethod::ALL.to_vec()
        } else {
            self.priors
                .iter()
                .map(|p| PriorMethod::parse(p).with_context(|| format!("unknown prior method {p:?}")))
                .collect::<anyhow::Result<Vec<_>>>()?
        };
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            bail!("horizons must be a non-empty list of positive integers");
        }
        if self.n_types < 2 {
            bail!("n_types must be at least 2");
        }
        if self.plays_per_game == 0 {
            bail!("plays_per_game must be positive");
        }
        let rounds = self.rounds.unwrap_or(match opponent {
            OpponentKind::Rt => DEFAULT_RT_ROUNDS,
            _ => DEFAULT_FICTITIOUS_ROUNDS,
        });
        if self.slices == 0 || rounds < self.slices {
            bail!("rounds ({rounds}) must be at least the slice count ({})", self.slices);
        }
        let filter_dominant = self.dominance_filter.unwrap_or(opponent != OpponentKind::Rt);
        let mut games = select_games(&self.games)?;
        if filter_dominant {
            games.retain(|g| !g.p2_has_dominant());
        }
        if let Some(limit) = self.game_limit {
            games.truncate(limit);
        }
        if games.is_empty() {
            bail!("the game filter selects no games");
        }
        let mut evo = EvoConfig::default();
        let o = &self.evo;
        if let Some(v) = o.pool_size {
            evo.pool_size = v;
        }
        if let Some(v) = o.generations {
            evo.generations = v;
        }
        if let Some(v) = o.evaluation_rounds {
            evo.evaluation_rounds = v;
        }
        if let Some(v) = o.opponents_per_evaluation {
            evo.opponents_per_evaluation = v;
        }
        evo.validate()?;
        Ok(Resolved { raw: self.clone(), kind, opponent, priors, games, rounds, evo })
    }
}

fn select_games(filter: &GameFilter) -> anyhow::Result<Vec<Game>> {
    let all = enumerate_games();
    Ok(match filter {
        GameFilter::Named(name) => match name.to_ascii_lowercase().as_str() {
            "all" => all,
            "no-conflict" | "noconflict" => all.into_iter().filter(|g| g.class() == GameClass::NoConflict).collect(),
            "conflict" => all.into_iter().filter(|g| g.class() == GameClass::Conflict).collect(),
            other => bail!("unknown game filter {other:?}"),
        },
        GameFilter::Ids(ids) => {
            let mut out = Vec::new();
            for &id in ids {
                out.push(all.iter().find(|g| g.id() == id).cloned().with_context(|| format!("no game with id {id}"))?);
            }
            out.sort_by_key(|g| g.id());
            out.dedup_by_key(|g| g.id());
            out
        }
    })
}
