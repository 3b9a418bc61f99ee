use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use typeprior::config::ExperimentConfig;
use typeprior::pool::{format_pool, parse_pool};
use typeprior::{report, suite};
use typeprior_core::evo::EvoConfig;
use typeprior_core::game::game_by_id;
use typeprior_core::play::HBA_SEAT;
use typeprior_core::policy::sample_type_set_with;
use typeprior_core::prior::{compute_prior, PriorCache, PriorConfig, PriorMethod};
use typeprior_core::{enumerate_games, Seat, TypeKind};

#[derive(Parser)]
#[command(name = "typeprior", version, about = "Prior beliefs for type-based opponent modelling in repeated 2x2 games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the 78 canonical ordinal games as CSV.
    EnumerateGames,
    /// Generate a type pool for the column player and print it.
    GenTypes {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        game: u16,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute one prior over a pool file and print it as CSV.
    ComputePrior {
        #[arg(long)]
        method: String,
        #[arg(long)]
        pool: PathBuf,
        /// Defaults to the game recorded in the pool file.
        #[arg(long)]
        game: Option<u16>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        t_prior: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Run a suite described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build significance matrices and payoff curves from a results directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::EnumerateGames => {
            writeln!(out, "id,r00,c00,r01,c01,r10,c10,r11,c11,class,p2_has_dominant")?;
            for g in enumerate_games() {
                let p = g.payoffs();
                write!(out, "{}", g.id())?;
                for row in p {
                    for cell in row {
                        write!(out, ",{},{}", cell[Seat::Row.index()], cell[Seat::Col.index()])?;
                    }
                }
                writeln!(out, ",{},{}", g.class().name(), g.p2_has_dominant())?;
            }
        }
        Command::GenTypes { kind, game, n, seed, out: path } => {
            let kind = TypeKind::parse(&kind).with_context(|| format!("unknown type kind {kind:?}"))?;
            let g = game_by_id(game).with_context(|| format!("no game with id {game}"))?;
            let set = sample_type_set_with(kind, &g, n, seed, &EvoConfig::default())?;
            let text = format_pool(game, &set);
            match path {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::ComputePrior { method, pool, game, seed, horizon, t_prior, samples } => {
            let method = PriorMethod::parse(&method).with_context(|| format!("unknown prior method {method:?}"))?;
            let text = std::fs::read_to_string(&pool).with_context(|| format!("reading {}", pool.display()))?;
            let file = parse_pool(&text)?;
            let id = game.unwrap_or(file.game_id);
            let g = game_by_id(id).with_context(|| format!("no game with id {id}"))?;
            let cfg = PriorConfig { t_prior, samples, ..PriorConfig::new(horizon, seed) };
            let spec = compute_prior(method, &g, HBA_SEAT, &file.types, &cfg, &mut PriorCache::new())?;
            writeln!(out, "type,probability")?;
            for (i, p) in spec.probabilities.iter().enumerate() {
                writeln!(out, "{i},{p}")?;
            }
            if let Some(l) = spec.loss_bound {
                writeln!(out, "# loss_bound,{l}")?;
            }
        }
        Command::Run { config, out: dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(d) = dir {
                cfg.output_dir = d;
            }
            let resolved = cfg.resolve()?;
            let result = suite::run_suite(&resolved)?;
            suite::write_results(&resolved, &result, &cfg.output_dir)?;
            eprintln!(
                "{} plays, {} failures, written to {}",
                result.outcomes.len(),
                result.failures.len(),
                cfg.output_dir.display()
            );
        }
        Command::Report { input } => {
            for p in report::report(&input)? {
                writeln!(out, "{}", p.display())?;
            }
        }
    }
    Ok(())
}
