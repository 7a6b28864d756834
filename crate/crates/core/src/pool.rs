//! Global seed pool: the deduplicated union of every fuzzer's discoveries,
//! used for cross-fuzzer synchronization.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::coverage::{Branch, ContentHash, SeedCoverage};

/// Where a pool record came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedOrigin {
    InitialCorpus,
    Fuzzer(usize),
}

/// One pooled seed: payload plus the coverage it was credited with when it
/// was accepted. Coverage is frozen at merge time.
#[derive(Clone, Debug)]
pub struct SeedRecord {
    pub seed_id: u64,
    pub content_hash: ContentHash,
    pub payload: Arc<[u8]>,
    pub coverage: SeedCoverage,
    pub origin: SeedOrigin,
    pub discovered_round: u64,
}

/// A seed a fuzzer reported for this round, before the pool has judged it.
/// Branches arrive in adapter-reported form and may be malformed.
#[derive(Clone, Debug)]
pub struct CandidateSeed {
    pub payload: Vec<u8>,
    pub branches: Vec<Branch>,
}

impl CandidateSeed {
    pub fn new(payload: impl Into<Vec<u8>>, branches: Vec<Branch>) -> Self {
        CandidateSeed {
            payload: payload.into(),
            branches,
        }
    }
}

/// Why a candidate was not merged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    /// Byte-identical payload already pooled.
    DuplicateContent,
    /// Every branch the candidate covers is already in the pool union.
    NoNewCoverage,
    /// Candidate coverage lists the same branch twice.
    DuplicateBranches(Branch),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::DuplicateContent => write!(f, "duplicate payload"),
            RejectReason::NoNewCoverage => write!(f, "no new branch coverage"),
            RejectReason::DuplicateBranches(b) => {
                write!(f, "branch {b:?} listed more than once")
            }
        }
    }
}

/// Outcome of one merge call: accepted records in pool order plus a
/// per-candidate diagnostic for everything that was turned away.
#[derive(Debug, Default)]
pub struct MergeOutcome {
    pub accepted: Vec<SeedRecord>,
    pub rejected: Vec<(usize, RejectReason)>,
}

/// The global pool. Records never leave; `branch_union` is kept equal to the
/// union of all records' coverage.
#[derive(Clone, Debug, Default)]
pub struct SeedPool {
    records: BTreeMap<ContentHash, SeedRecord>,
    by_id: BTreeMap<u64, ContentHash>,
    branch_union: BTreeSet<Branch>,
    next_seed_id: u64,
}

impl SeedPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records whose hash is missing from `local`, in ascending seed id
    /// order. This is the sync payload for a selected fuzzer.
    pub fn diff(&self, local: &BTreeSet<ContentHash>) -> Vec<SeedRecord> {
        self.by_id
            .values()
            .filter(|hash| !local.contains(hash))
            .map(|hash| self.records[hash].clone())
            .collect()
    }

    /// Merges a round's candidates in reported order. A candidate is
    /// accepted iff its payload is unseen and it covers at least one branch
    /// the pool does not already know.
    pub fn merge(
        &mut self,
        candidates: &[CandidateSeed],
        origin: SeedOrigin,
        round: u64,
    ) -> MergeOutcome {
        let mut outcome = MergeOutcome::default();
        for (idx, candidate) in candidates.iter().enumerate() {
            let mut branches = BTreeSet::new();
            let mut malformed = None;
            for branch in &candidate.branches {
                if !branches.insert(*branch) {
                    malformed = Some(*branch);
                    break;
                }
            }
            if let Some(dup) = malformed {
                outcome.rejected.push((idx, RejectReason::DuplicateBranches(dup)));
                continue;
            }

            let hash = ContentHash::of(&candidate.payload);
            if self.records.contains_key(&hash) {
                outcome.rejected.push((idx, RejectReason::DuplicateContent));
                continue;
            }
            if branches.iter().all(|b| self.branch_union.contains(b)) {
                outcome.rejected.push((idx, RejectReason::NoNewCoverage));
                continue;
            }

            let seed_id = self.next_seed_id;
            self.next_seed_id += 1;
            self.branch_union.extend(branches.iter().copied());
            let record = SeedRecord {
                seed_id,
                content_hash: hash,
                payload: candidate.payload.clone().into(),
                coverage: SeedCoverage { seed_id, branches },
                origin,
                discovered_round: round,
            };
            self.records.insert(hash, record.clone());
            self.by_id.insert(seed_id, hash);
            outcome.accepted.push(record);
        }
        outcome
    }

    /// Point-in-time copy of all pooled hashes; later merges do not affect
    /// the returned set.
    pub fn snapshot_hashes(&self) -> BTreeSet<ContentHash> {
        self.records.keys().copied().collect()
    }

    pub fn contains(&self, hash: &ContentHash) -> bool {
        self.records.contains_key(hash)
    }

    pub fn branch_union(&self) -> &BTreeSet<Branch> {
        &self.branch_union
    }

    pub fn branch_count(&self) -> usize {
        self.branch_union.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records with `seed_id >= from`, ascending. Used by file-backed
    /// drivers to persist whatever the last round added.
    pub fn records_from(&self, from: u64) -> Vec<SeedRecord> {
        self.by_id
            .range(from..)
            .map(|(_, hash)| self.records[hash].clone())
            .collect()
    }

    pub fn next_seed_id(&self) -> u64 {
        self.next_seed_id
    }
}
