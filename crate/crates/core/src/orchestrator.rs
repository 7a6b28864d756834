//! The campaign round loop: select a fuzzer, sync it against the global
//! pool, run its cycles, merge discoveries, score the round and update the
//! bandit, with auto-cycle bookkeeping and the periodic arm reset.

use alloc::vec::Vec;
use core::fmt;

use crate::bandit::{argmax, discretize, ArmState, BanditError, BanditState};
use crate::coverage::SeedCoverage;
use crate::pool::{CandidateSeed, SeedOrigin, SeedPool};
use crate::reward::{DiscoveryLog, RewardError, RewardNormalizer};
use crate::runtime::{FuzzerHandle, FuzzerStatus, RunRequest, RuntimeError, Termination};

/// When a campaign ends. Durations run on the campaign clock: the sum of
/// per-round durations, which is virtual time for simulated rosters and
/// adapter-measured wall time for external ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopCondition {
    MaxRounds(u64),
    DurationMs(u64),
    TargetCoverage(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduler {
    /// Thompson sampling over the Beta arms.
    Ts,
    /// Uniform choice each round.
    Random,
    /// Posterior-mean argmax, no sampling: the exploit-only baseline.
    Greedy,
    /// Cyclic visit in roster order.
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardMode {
    /// Coverage-interval reward, min-max normalized, then discretized.
    Interval,
    /// Binary reward: 1 iff the round contributed any accepted seed. Also
    /// pins the cycle count at 1, disabling auto-cycle.
    Naive,
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    /// Per-round time budget, default 120 s.
    pub t_i_ms: u64,
    /// Arm reset interval, default 120 min.
    pub i_r_ms: u64,
    pub reset_enabled: bool,
    pub stop: StopCondition,
    pub rng_seed: u64,
    pub scheduler: Scheduler,
    pub sync_enabled: bool,
    pub reward_mode: RewardMode,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            t_i_ms: 120_000,
            i_r_ms: 7_200_000,
            reset_enabled: true,
            stop: StopCondition::MaxRounds(100),
            rng_seed: 0,
            scheduler: Scheduler::Ts,
            sync_enabled: true,
            reward_mode: RewardMode::Interval,
        }
    }
}

/// Auto-cycle bookkeeping for one fuzzer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FuzzerStats {
    pub total_duration_ms: u64,
    pub num_selection: u64,
    pub avg_cycle_time_ms: u64,
    pub cycles: u64,
}

impl Default for FuzzerStats {
    fn default() -> Self {
        FuzzerStats {
            total_duration_ms: 0,
            num_selection: 0,
            avg_cycle_time_ms: 0,
            cycles: 1,
        }
    }
}

impl FuzzerStats {
    /// Folds a finished round of duration `d_t` into the running average and
    /// recomputes the cycle grant. `num_selection` counts the just-finished
    /// round, so the division is defined from the first selection on; both
    /// the average and the grant are clamped at 1.
    pub fn update_auto_cycle(&mut self, d_t_ms: u64, t_i_ms: u64) {
        self.total_duration_ms += d_t_ms;
        self.num_selection += 1;
        self.avg_cycle_time_ms = (self.total_duration_ms / self.num_selection).max(1);
        self.cycles = (t_i_ms / self.avg_cycle_time_ms).max(1);
    }
}

/// Advances the reset timer by `d_t` and, on crossing the interval, zeroes
/// it and returns every arm to Beta(1, 1). Stats and the reward normalizer
/// are untouched. Returns whether the reset fired.
pub fn check_reset(timer_ms: &mut u64, d_t_ms: u64, i_r_ms: u64, bandit: &mut BanditState) -> bool {
    *timer_ms += d_t_ms;
    if *timer_ms >= i_r_ms {
        *timer_ms = 0;
        bandit.reset();
        true
    } else {
        false
    }
}

/// One line of the campaign trace.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub selected: usize,
    pub cycles_run: u64,
    pub duration_ms: u64,
    pub raw_reward: u64,
    pub reward: f64,
    pub r_hat: bool,
    pub seeds_accepted: u64,
    /// Global branch count after the round.
    pub total_branches: u64,
    /// Arm states after the round's update, before any reset.
    pub arms: Vec<ArmState>,
}

#[derive(Clone, Debug)]
pub enum CampaignError {
    EmptyRoster,
    BadConfig(&'static str),
    Reward(RewardError),
    Bandit(BanditError),
    Runtime(RuntimeError),
    /// Too many consecutive aborted rounds; the roster cannot make progress.
    Stalled { round: u64 },
}

impl fmt::Display for CampaignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CampaignError::EmptyRoster => write!(f, "campaign needs at least one fuzzer"),
            CampaignError::BadConfig(msg) => write!(f, "bad config: {msg}"),
            CampaignError::Reward(e) => write!(f, "reward: {e}"),
            CampaignError::Bandit(e) => write!(f, "bandit: {e}"),
            CampaignError::Runtime(e) => write!(f, "runtime: {e}"),
            CampaignError::Stalled { round } => {
                write!(f, "campaign stalled at round {round}: no fuzzer can run")
            }
        }
    }
}

impl core::error::Error for CampaignError {}

impl From<RewardError> for CampaignError {
    fn from(e: RewardError) -> Self {
        CampaignError::Reward(e)
    }
}

impl From<BanditError> for CampaignError {
    fn from(e: BanditError) -> Self {
        CampaignError::Bandit(e)
    }
}

/// Per-fuzzer totals for the final report.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FuzzerSummary {
    pub selections: u64,
    pub reward_sum: f64,
    pub total_duration_ms: u64,
}

/// Everything a finished campaign hands back: the full trace plus summary
/// aggregates.
#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub rounds: Vec<RoundRecord>,
    pub initial_branches: u64,
    pub final_branches: u64,
    pub elapsed_ms: u64,
    pub resets: u64,
    pub per_fuzzer: Vec<FuzzerSummary>,
}

const MAX_CONSECUTIVE_ABORTS: u32 = 8;

/// A campaign in progress. Rounds are strictly sequential; all mutation goes
/// through `run_round`.
pub struct Campaign {
    config: CampaignConfig,
    handles: Vec<FuzzerHandle>,
    stats: Vec<FuzzerStats>,
    bandit: BanditState,
    pool: SeedPool,
    log: DiscoveryLog,
    normalizer: RewardNormalizer,
    timer_ms: u64,
    elapsed_ms: u64,
    completed_rounds: u64,
    trace: Vec<RoundRecord>,
    resets: u64,
    initial_branches: u64,
}

impl fmt::Debug for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Campaign")
            .field("round", &self.completed_rounds)
            .field("fuzzers", &self.handles.len())
            .field("branches", &self.pool.branch_count())
            .finish()
    }
}

impl Campaign {
    /// Builds a campaign: the initial corpus is merged into the global pool
    /// at round 0 and its blocks registered in the discovery log.
    pub fn new(
        config: CampaignConfig,
        handles: Vec<FuzzerHandle>,
        initial_corpus: Vec<CandidateSeed>,
    ) -> Result<Self, CampaignError> {
        if handles.is_empty() {
            return Err(CampaignError::EmptyRoster);
        }
        if config.t_i_ms == 0 {
            return Err(CampaignError::BadConfig("round budget T_I must be positive"));
        }
        if config.i_r_ms == 0 {
            return Err(CampaignError::BadConfig("reset interval I_R must be positive"));
        }

        let bandit = BanditState::new(handles.len(), config.rng_seed);
        let stats = handles.iter().map(|_| FuzzerStats::default()).collect();
        let mut pool = SeedPool::new();
        let outcome = pool.merge(&initial_corpus, SeedOrigin::InitialCorpus, 0);
        let coverages: Vec<SeedCoverage> = outcome
            .accepted
            .iter()
            .map(|r| r.coverage.clone())
            .collect();
        let mut log = DiscoveryLog::new();
        log.register_initial_corpus(&coverages)?;
        let initial_branches = pool.branch_count() as u64;

        Ok(Campaign {
            config,
            handles,
            stats,
            bandit,
            pool,
            log,
            normalizer: RewardNormalizer::new(),
            timer_ms: 0,
            elapsed_ms: 0,
            completed_rounds: 0,
            trace: Vec::new(),
            resets: 0,
            initial_branches,
        })
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn pool(&self) -> &SeedPool {
        &self.pool
    }

    pub fn bandit(&self) -> &BanditState {
        &self.bandit
    }

    pub fn stats(&self) -> &[FuzzerStats] {
        &self.stats
    }

    pub fn handle(&self, fuzzer: usize) -> &FuzzerHandle {
        &self.handles[fuzzer]
    }

    pub fn trace(&self) -> &[RoundRecord] {
        &self.trace
    }

    pub fn completed_rounds(&self) -> u64 {
        self.completed_rounds
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.elapsed_ms
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn discovery_log(&self) -> &DiscoveryLog {
        &self.log
    }

    /// Manually pushes pool records into one fuzzer's local pool, e.g. to
    /// stage a roster before round 1.
    pub fn import_records(
        &mut self,
        fuzzer: usize,
        records: &[crate::pool::SeedRecord],
    ) -> Result<(), RuntimeError> {
        self.handles[fuzzer].import_seeds(records)
    }

    pub fn stopped(&self) -> bool {
        match self.config.stop {
            StopCondition::MaxRounds(n) => self.completed_rounds >= n,
            StopCondition::DurationMs(ms) => self.elapsed_ms >= ms,
            StopCondition::TargetCoverage(branches) => {
                self.pool.branch_count() as u64 >= branches
            }
        }
    }

    fn select(&mut self, round: u64) -> usize {
        let k = self.handles.len();
        match self.config.scheduler {
            Scheduler::Ts => self.bandit.select(),
            Scheduler::Random => self.bandit.rng_mut().next_below(k as u64) as usize,
            Scheduler::Greedy => {
                let means: Vec<f64> = self
                    .bandit
                    .arms()
                    .iter()
                    .map(|a| a.posterior_mean())
                    .collect();
                argmax(&means, self.bandit.rng_mut())
            }
            Scheduler::RoundRobin => ((round - 1) % k as u64) as usize,
        }
    }

    fn aborted_record(&self, round: u64, selected: usize) -> RoundRecord {
        RoundRecord {
            round,
            selected,
            cycles_run: 0,
            duration_ms: 0,
            raw_reward: 0,
            reward: 0.0,
            r_hat: false,
            seeds_accepted: 0,
            total_branches: self.pool.branch_count() as u64,
            arms: self.bandit.arms().to_vec(),
        }
    }

    /// Executes one full round. A sync failure aborts the round: it still
    /// occupies a round number but leaves arms, stats and the reset timer
    /// untouched, and the fuzzer is restarted for the next attempt.
    pub fn run_round(&mut self) -> Result<RoundRecord, CampaignError> {
        let t = self.completed_rounds + 1;
        let selected = self.select(t);

        if self.handles[selected].status() == FuzzerStatus::Crashed
            && self.handles[selected].watchdog_restart().is_err()
        {
            let record = self.aborted_record(t, selected);
            self.completed_rounds = t;
            self.trace.push(record.clone());
            return Ok(record);
        }

        if self.config.sync_enabled {
            let missing = self.pool.diff(self.handles[selected].local_hashes());
            if self.handles[selected].import_seeds(&missing).is_err() {
                let _ = self.handles[selected].watchdog_restart();
                let record = self.aborted_record(t, selected);
                self.completed_rounds = t;
                self.trace.push(record.clone());
                return Ok(record);
            }
        }

        let stats = self.stats[selected];
        let grace_ms = if stats.num_selection == 0 {
            self.config.t_i_ms
        } else {
            stats.avg_cycle_time_ms.clamp(1, self.config.t_i_ms)
        };
        let request = RunRequest {
            round: t,
            cycles: stats.cycles,
            timeout_ms: 3 * self.config.t_i_ms,
            grace_ms,
        };
        let (result, termination) = self.handles[selected]
            .run_cycles(&request)
            .map_err(CampaignError::Runtime)?;
        let d_t = result.duration_ms.max(1);

        let outcome = self
            .pool
            .merge(&result.new_seeds, SeedOrigin::Fuzzer(selected), t);

        let (raw, reward, r_hat) = match self.config.reward_mode {
            RewardMode::Interval => {
                let coverages: Vec<SeedCoverage> = outcome
                    .accepted
                    .iter()
                    .map(|r| r.coverage.clone())
                    .collect();
                let raw = self.log.evaluate_seeds(t, &coverages)?;
                let reward = self.normalizer.normalize(raw);
                let r_hat = discretize(reward.clamp(0.0, 1.0), self.bandit.rng_mut())?;
                (raw, reward, r_hat)
            }
            RewardMode::Naive => {
                let r_hat = !outcome.accepted.is_empty();
                (0, if r_hat { 1.0 } else { 0.0 }, r_hat)
            }
        };

        self.bandit.update(selected, r_hat)?;
        self.stats[selected].update_auto_cycle(d_t, self.config.t_i_ms);
        if self.config.reward_mode == RewardMode::Naive {
            self.stats[selected].cycles = 1;
        }

        if termination == Termination::Crashed {
            let _ = self.handles[selected].watchdog_restart();
        }

        let record = RoundRecord {
            round: t,
            selected,
            cycles_run: result.cycles_completed,
            duration_ms: d_t,
            raw_reward: raw,
            reward,
            r_hat,
            seeds_accepted: outcome.accepted.len() as u64,
            total_branches: self.pool.branch_count() as u64,
            arms: self.bandit.arms().to_vec(),
        };

        self.elapsed_ms += d_t;
        if self.config.reset_enabled {
            if check_reset(&mut self.timer_ms, d_t, self.config.i_r_ms, &mut self.bandit) {
                self.resets += 1;
            }
        } else {
            self.timer_ms += d_t;
        }
        self.completed_rounds = t;
        self.trace.push(record.clone());
        Ok(record)
    }

    /// Runs rounds until the stopping condition holds, then summarizes.
    pub fn run_to_end(&mut self) -> Result<CampaignReport, CampaignError> {
        let mut consecutive_aborts = 0u32;
        while !self.stopped() {
            let record = self.run_round()?;
            if record.duration_ms == 0 && record.cycles_run == 0 {
                consecutive_aborts += 1;
                if consecutive_aborts >= MAX_CONSECUTIVE_ABORTS {
                    return Err(CampaignError::Stalled {
                        round: self.completed_rounds,
                    });
                }
            } else {
                consecutive_aborts = 0;
            }
        }
        Ok(self.report())
    }

    pub fn report(&self) -> CampaignReport {
        let mut per_fuzzer = alloc::vec![FuzzerSummary::default(); self.handles.len()];
        for record in &self.trace {
            let summary = &mut per_fuzzer[record.selected];
            summary.reward_sum += record.reward;
        }
        for (summary, stats) in per_fuzzer.iter_mut().zip(&self.stats) {
            summary.selections = stats.num_selection;
            summary.total_duration_ms = stats.total_duration_ms;
        }
        CampaignReport {
            rounds: self.trace.clone(),
            initial_branches: self.initial_branches,
            final_branches: self.pool.branch_count() as u64,
            elapsed_ms: self.elapsed_ms,
            resets: self.resets,
            per_fuzzer,
        }
    }

    pub fn shutdown(&mut self) {
        for handle in &mut self.handles {
            handle.shutdown();
        }
    }
}
