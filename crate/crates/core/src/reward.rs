//! Coverage-interval reward for a batch of newly generated seeds.
//!
//! A branch's reward is the number of rounds between the first discovery of
//! its predecessor block and the discovery of the branch itself: branches
//! whose entry point has been known for a long time were hard to take, so
//! they pay more. The raw batch reward is the integer sum of those intervals;
//! a running min-max normalizer maps it into `[0, 1]`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::coverage::{BlockId, Branch, SeedCoverage};

/// Campaign-global discovery history: the round at which each basic block
/// was first seen, plus every branch that has ever been scored.
#[derive(Clone, Debug, Default)]
pub struct DiscoveryLog {
    first_round: BTreeMap<BlockId, u64>,
    known_branches: BTreeSet<Branch>,
    max_round: u64,
    corpus_registered: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardError {
    /// `register_initial_corpus` called more than once.
    CorpusAlreadyRegistered,
    /// `evaluate_seeds` called with a round below one already recorded.
    RoundOutOfOrder { round: u64, latest: u64 },
}

impl fmt::Display for RewardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardError::CorpusAlreadyRegistered => {
                write!(f, "initial corpus registered twice")
            }
            RewardError::RoundOutOfOrder { round, latest } => {
                write!(f, "round {round} precedes already-recorded round {latest}")
            }
        }
    }
}

impl core::error::Error for RewardError {}

impl DiscoveryLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seeds the log with the initial corpus before round 1. Every block a
    /// corpus branch touches is recorded at round 0 so that first-round
    /// discoveries can earn nonzero intervals against it.
    pub fn register_initial_corpus(&mut self, seeds: &[SeedCoverage]) -> Result<(), RewardError> {
        if self.corpus_registered {
            return Err(RewardError::CorpusAlreadyRegistered);
        }
        self.corpus_registered = true;
        for seed in seeds {
            for branch in &seed.branches {
                self.first_round.entry(branch.pred).or_insert(0);
                self.first_round.entry(branch.succ).or_insert(0);
                self.known_branches.insert(*branch);
            }
        }
        Ok(())
    }

    /// Scores a batch of new seeds at round `t` and folds their discoveries
    /// into the log. Seeds are processed in ascending `seed_id` order and
    /// branches within a seed in ascending `(pred, succ)` order; a branch
    /// whose predecessor first appears in this very batch is recorded at `t`
    /// and earns interval zero. Already-known branches contribute nothing.
    pub fn evaluate_seeds(
        &mut self,
        t: u64,
        new_seeds: &[SeedCoverage],
    ) -> Result<u64, RewardError> {
        if t < self.max_round {
            return Err(RewardError::RoundOutOfOrder {
                round: t,
                latest: self.max_round,
            });
        }
        self.max_round = t;

        let mut order: Vec<&SeedCoverage> = new_seeds.iter().collect();
        order.sort_by_key(|s| s.seed_id);

        let mut raw = 0u64;
        for seed in order {
            for branch in &seed.branches {
                if self.known_branches.contains(branch) {
                    continue;
                }
                let t_p = *self.first_round.entry(branch.pred).or_insert(t);
                raw += t - t_p;
                self.first_round.entry(branch.succ).or_insert(t);
                self.known_branches.insert(*branch);
            }
        }
        Ok(raw)
    }

    pub fn first_round(&self, block: BlockId) -> Option<u64> {
        self.first_round.get(&block).copied()
    }

    pub fn knows_branch(&self, branch: &Branch) -> bool {
        self.known_branches.contains(branch)
    }

    pub fn known_branch_count(&self) -> usize {
        self.known_branches.len()
    }

    pub fn block_count(&self) -> usize {
        self.first_round.len()
    }
}

/// Running min-max bounds over raw rewards. Both bounds start at zero and
/// are monotone over a campaign; a bandit reset does not touch them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RewardNormalizer {
    r_max: u64,
    r_min: u64,
}

impl RewardNormalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Widens the bounds with `raw` and returns `(raw - r_min) / (r_max -
    /// r_min)` over the updated bounds. When the bounds coincide (only
    /// possible while every reward so far was zero) the result is 0.
    pub fn normalize(&mut self, raw: u64) -> f64 {
        self.r_max = self.r_max.max(raw);
        self.r_min = self.r_min.min(raw);
        if self.r_max == self.r_min {
            0.0
        } else {
            (raw - self.r_min) as f64 / (self.r_max - self.r_min) as f64
        }
    }

    pub fn bounds(&self) -> (u64, u64) {
        (self.r_min, self.r_max)
    }
}
