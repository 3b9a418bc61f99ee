//! Simulation core for studying how prior beliefs over opponent policy types
//! shape the long-run play of a Bayesian best-response agent in repeated 2×2
//! ordinal games.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure,
//! seeded computation; file formats, the suite runner and the CLI live in the
//! `typeprior` companion crate.
//!
//! Module map:
//! - [`game`]: ordinal 2×2 games, the 78-game benchmark, dominance, maximin.
//! - [`history`] and [`policy`]: play histories and the policy-type abstraction.
//! - [`lft`]: leader, follower and trigger agents around target solutions.
//! - [`evo`]: co-evolved decision trees and neural networks.
//! - [`hba`]: type posterior and finite-horizon expected-payoff planning.
//! - [`lp`]: a small dense simplex solver.
//! - [`prior`]: the ten prior-construction methods.
//! - [`opponents`]: fictitious and conditioned fictitious players.
//! - [`metrics`]: per-slice performance criteria.
//! - [`play`]: a single seeded play of HBA against an opponent.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod evo;
pub mod game;
pub mod hba;
pub mod history;
pub mod lft;
pub mod lp;
pub mod metrics;
pub mod opponents;
pub mod play;
pub mod policy;
pub mod prior;
pub mod rng;

pub use error::{Error, Result};
pub use game::{enumerate_games, ActionIndex, Game, GameClass, JointAction, MixedStrategy, Seat};
pub use history::History;
pub use policy::{ActionDist, PolicyType, TypeKind, TypeSet, TypeState};
