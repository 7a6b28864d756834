//! Core engine for running a collaborative fuzzing campaign on a single
//! compute budget.
//!
//! A campaign owns a roster of fuzzers. Each round the orchestrator picks one
//! fuzzer with a Thompson-sampling bandit, synchronizes it against the global
//! seed pool, lets it run a few fuzzing cycles, folds its discoveries back
//! into the pool, and scores the round by how hard the newly covered branches
//! were to reach (the coverage-interval reward). The binary outcome of that
//! score updates the fuzzer's Beta weight distribution.
//!
//! Everything in this crate is deterministic given a seed: randomness flows
//! through an explicit [`rng::Rng`] and all collections iterate in a fixed
//! order, so a campaign trace can be replayed bit for bit. The crate is
//! `no_std` (alloc only); process management, file formats and the CLI live
//! in the companion `fuzzmux` crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod bandit;
pub mod coverage;
pub mod orchestrator;
pub mod pool;
pub mod reward;
pub mod rng;
pub mod runtime;
pub mod score;
pub mod sim;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use coverage::{BlockId, Branch, ContentHash, SeedCoverage};
pub use orchestrator::{Campaign, CampaignConfig, CampaignReport, RoundRecord};
pub use pool::{CandidateSeed, SeedPool, SeedRecord};
pub use runtime::{CycleResult, Fuzzer, FuzzerHandle};
