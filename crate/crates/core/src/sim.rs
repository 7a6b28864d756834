//! Deterministic simulated fuzzer over a synthetic branch graph.
//!
//! A synthetic target is a DAG of branches. A branch is attemptable once its
//! predecessor block is locally covered (entry blocks always are), and each
//! attempt succeeds with a per-(fuzzer, branch) probability, so "skill" is a
//! probability table and nonstationarity is a scheduled table swap. Every
//! success emits a seed covering a root path to the new branch, which makes
//! pool contents self-describing: the payload is the canonical text of the
//! branch list.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::coverage::{BlockId, Branch};
use crate::pool::{CandidateSeed, SeedRecord};
use crate::rng::Rng;
use crate::runtime::{CycleResult, Fuzzer, RunRequest, RuntimeError, Termination};

/// Per-(fuzzer, branch) success probabilities with a wildcard tier and a
/// default. Lookup precedence: exact entry, any-fuzzer entry, default.
#[derive(Clone, Debug, Default)]
pub struct ProbMap {
    pub exact: BTreeMap<(usize, Branch), f64>,
    pub any_fuzzer: BTreeMap<Branch, f64>,
    pub default: f64,
}

impl ProbMap {
    pub fn solve_prob(&self, fuzzer: usize, branch: Branch) -> f64 {
        if let Some(&p) = self.exact.get(&(fuzzer, branch)) {
            return p;
        }
        if let Some(&p) = self.any_fuzzer.get(&branch) {
            return p;
        }
        self.default
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.exact
            .values()
            .chain(self.any_fuzzer.values())
            .copied()
            .chain(core::iter::once(self.default))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetError {
    UnknownBlock(BlockId),
    /// Branch predecessor is neither an entry block nor any branch's
    /// successor, so the branch could never become attemptable.
    UnreachableBranch(Branch),
    CyclicGraph,
    BadProbability(f64),
    BadCycleTime(u64),
    PhaseOutOfOrder(u64),
}

impl fmt::Display for TargetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetError::UnknownBlock(b) => write!(f, "branch references unlisted block {b}"),
            TargetError::UnreachableBranch(b) => write!(f, "branch {b:?} can never be reached"),
            TargetError::CyclicGraph => write!(f, "branch graph contains a cycle"),
            TargetError::BadProbability(p) => write!(f, "probability {p} outside [0, 1]"),
            TargetError::BadCycleTime(ms) => write!(f, "cycle time {ms} ms must be positive"),
            TargetError::PhaseOutOfOrder(r) => write!(f, "phase at round {r} not in ascending order"),
        }
    }
}

impl core::error::Error for TargetError {}

/// A synthetic program: blocks, a rooted branch DAG, solve probabilities,
/// per-fuzzer cycle times, and an optional schedule of probability-table
/// swaps that models fuzzer skill changing over a campaign.
#[derive(Clone, Debug)]
pub struct SyntheticTarget {
    blocks: BTreeSet<BlockId>,
    branches: Vec<Branch>,
    entries: BTreeSet<BlockId>,
    out_edges: BTreeMap<BlockId, Vec<Branch>>,
    base_probs: ProbMap,
    phases: Vec<(u64, ProbMap)>,
    cycle_ms: BTreeMap<usize, u64>,
    default_cycle_ms: u64,
}

impl SyntheticTarget {
    /// Validates and freezes a target. Entry blocks are the blocks that
    /// never appear as a branch successor.
    pub fn new(
        blocks: impl IntoIterator<Item = u64>,
        branches: impl IntoIterator<Item = (u64, u64)>,
        base_probs: ProbMap,
        phases: Vec<(u64, ProbMap)>,
        cycle_ms: BTreeMap<usize, u64>,
        default_cycle_ms: u64,
    ) -> Result<Self, TargetError> {
        let blocks: BTreeSet<BlockId> = blocks.into_iter().map(BlockId).collect();
        let mut branch_set = BTreeSet::new();
        for (p, s) in branches {
            branch_set.insert(Branch::new(p, s));
        }
        let branches: Vec<Branch> = branch_set.into_iter().collect();

        let succs: BTreeSet<BlockId> = branches.iter().map(|b| b.succ).collect();
        let entries: BTreeSet<BlockId> = blocks.difference(&succs).copied().collect();

        for branch in &branches {
            for block in [branch.pred, branch.succ] {
                if !blocks.contains(&block) {
                    return Err(TargetError::UnknownBlock(block));
                }
            }
            if !entries.contains(&branch.pred) && !succs.contains(&branch.pred) {
                return Err(TargetError::UnreachableBranch(*branch));
            }
        }

        // Kahn's algorithm over the blocks touched by branches.
        let mut indegree: BTreeMap<BlockId, usize> = BTreeMap::new();
        for branch in &branches {
            indegree.entry(branch.pred).or_insert(0);
            *indegree.entry(branch.succ).or_insert(0) += 1;
        }
        let mut queue: Vec<BlockId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&b, _)| b)
            .collect();
        let mut visited = 0usize;
        while let Some(block) = queue.pop() {
            visited += 1;
            for branch in branches.iter().filter(|b| b.pred == block) {
                let d = indegree.get_mut(&branch.succ).expect("counted above");
                *d -= 1;
                if *d == 0 {
                    queue.push(branch.succ);
                }
            }
        }
        if visited != indegree.len() {
            return Err(TargetError::CyclicGraph);
        }

        for p in base_probs
            .values()
            .chain(phases.iter().flat_map(|(_, m)| m.values()))
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(TargetError::BadProbability(p));
            }
        }
        let mut last_switch = 0;
        for &(round, _) in &phases {
            if round <= last_switch {
                return Err(TargetError::PhaseOutOfOrder(round));
            }
            last_switch = round;
        }
        if default_cycle_ms == 0 {
            return Err(TargetError::BadCycleTime(0));
        }
        if let Some((_, &ms)) = cycle_ms.iter().find(|(_, &ms)| ms == 0) {
            return Err(TargetError::BadCycleTime(ms));
        }

        let mut out_edges: BTreeMap<BlockId, Vec<Branch>> = BTreeMap::new();
        for &branch in &branches {
            out_edges.entry(branch.pred).or_default().push(branch);
        }

        Ok(SyntheticTarget {
            blocks,
            branches,
            entries,
            out_edges,
            base_probs,
            phases,
            cycle_ms,
            default_cycle_ms,
        })
    }

    pub fn blocks(&self) -> &BTreeSet<BlockId> {
        &self.blocks
    }

    /// Branches in ascending `(pred, succ)` order, the attempt order.
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn entries(&self) -> &BTreeSet<BlockId> {
        &self.entries
    }

    pub fn out_edges(&self, block: BlockId) -> &[Branch] {
        self.out_edges.get(&block).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn cycle_ms(&self, fuzzer: usize) -> u64 {
        self.cycle_ms
            .get(&fuzzer)
            .copied()
            .unwrap_or(self.default_cycle_ms)
    }

    pub fn default_cycle_ms(&self) -> u64 {
        self.default_cycle_ms
    }

    pub fn cycle_overrides(&self) -> &BTreeMap<usize, u64> {
        &self.cycle_ms
    }

    pub fn phases(&self) -> &[(u64, ProbMap)] {
        &self.phases
    }

    /// The probability table in force at `round`.
    pub fn probs_at(&self, round: u64) -> &ProbMap {
        let mut current = &self.base_probs;
        for (switch_round, map) in &self.phases {
            if *switch_round <= round {
                current = map;
            } else {
                break;
            }
        }
        current
    }
}

/// Canonical text form of a branch set. Simulated seed payloads are exactly
/// this, so payload hash and coverage determine each other.
pub fn canonical_payload(branches: &BTreeSet<Branch>) -> Vec<u8> {
    let mut out = String::new();
    for branch in branches {
        let _ = writeln!(out, "branch {} {}", branch.pred, branch.succ);
    }
    out.into_bytes()
}

/// Deterministic fuzzer over a synthetic target. Holds its own generator
/// stream so campaign results do not depend on how other fuzzers draw.
pub struct SimulatedFuzzer {
    index: usize,
    target: Arc<SyntheticTarget>,
    local: BTreeSet<Branch>,
    covered_blocks: BTreeSet<BlockId>,
    /// Branches whose pred is covered but which are not yet locally
    /// discovered; exactly the attempt set of the next cycle, kept
    /// incrementally so a cycle costs O(frontier), not O(graph).
    attemptable: BTreeSet<Branch>,
    rng: Rng,
}

impl fmt::Debug for SimulatedFuzzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulatedFuzzer")
            .field("index", &self.index)
            .field("local_branches", &self.local.len())
            .finish()
    }
}

impl SimulatedFuzzer {
    pub fn new(index: usize, target: Arc<SyntheticTarget>, seed: u64) -> Self {
        let covered_blocks = target.entries().clone();
        let attemptable = covered_blocks
            .iter()
            .flat_map(|&block| target.out_edges(block).iter().copied())
            .collect();
        SimulatedFuzzer {
            index,
            target,
            local: BTreeSet::new(),
            covered_blocks,
            attemptable,
            rng: Rng::new(seed),
        }
    }

    pub fn local_branches(&self) -> &BTreeSet<Branch> {
        &self.local
    }

    fn absorb(&mut self, branch: Branch) {
        self.local.insert(branch);
        self.attemptable.remove(&branch);
        for block in [branch.pred, branch.succ] {
            if self.covered_blocks.insert(block) {
                for &edge in self.target.out_edges(block) {
                    if !self.local.contains(&edge) {
                        self.attemptable.insert(edge);
                    }
                }
            }
        }
    }

    /// Walks back from `branch.pred` to an entry block along locally covered
    /// branches, taking the smallest covering branch at each step.
    fn root_path(&self, branch: Branch) -> BTreeSet<Branch> {
        let mut path = BTreeSet::new();
        path.insert(branch);
        let mut cur = branch.pred;
        while !self.target.entries().contains(&cur) {
            match self.local.iter().find(|b| b.succ == cur) {
                Some(&b) => {
                    path.insert(b);
                    cur = b.pred;
                }
                None => break,
            }
        }
        path
    }

    /// One fuzzing cycle: a Bernoulli attempt on every branch that is
    /// reachable but locally undiscovered, judged against the coverage state
    /// at cycle start. Each success emits one seed.
    pub fn one_cycle(&mut self, round: u64) -> (Vec<CandidateSeed>, u64) {
        let target = self.target.clone();
        let probs = target.probs_at(round);
        let attempts: Vec<Branch> = self.attemptable.iter().copied().collect();
        let mut seeds = Vec::new();
        let mut successes = Vec::new();
        for branch in attempts {
            let p = probs.solve_prob(self.index, branch);
            if self.rng.next_bernoulli(p) {
                let path = self.root_path(branch);
                seeds.push(CandidateSeed::new(
                    canonical_payload(&path),
                    path.into_iter().collect(),
                ));
                successes.push(branch);
            }
        }
        for branch in successes {
            self.absorb(branch);
        }
        (seeds, self.target.cycle_ms(self.index))
    }
}

impl Fuzzer for SimulatedFuzzer {
    fn run_cycles(&mut self, req: &RunRequest) -> (CycleResult, Termination) {
        let mut result = CycleResult::default();
        for done in 1..=req.cycles {
            let (seeds, duration) = self.one_cycle(req.round);
            result.new_seeds.extend(seeds);
            result.duration_ms += duration;
            result.cycles_completed = done;
            if result.duration_ms >= req.timeout_ms && done < req.cycles {
                return (result, Termination::Skipped);
            }
        }
        (result, Termination::Completed)
    }

    fn import_seeds(&mut self, records: &[SeedRecord]) -> Result<(), RuntimeError> {
        for record in records {
            for &branch in &record.coverage.branches {
                self.absorb(branch);
            }
        }
        Ok(())
    }

    fn restart(&mut self) -> Result<(), RuntimeError> {
        Ok(())
    }
}
