//! The fuzzer abstraction the orchestrator drives, plus the per-fuzzer
//! handle that enforces the status machine and tracks the local seed view.
//!
//! Two realizations exist: the deterministic simulated fuzzer in
//! [`crate::sim`] and the external-process adapter in the companion crate.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::coverage::ContentHash;
use crate::pool::{CandidateSeed, SeedRecord};

/// Parameters for one round's worth of fuzzing.
#[derive(Clone, Copy, Debug)]
pub struct RunRequest {
    /// Current campaign round, 1-based. Simulated targets use it to apply
    /// phase schedules; external adapters may ignore it.
    pub round: u64,
    /// Number of fuzzing cycles to run.
    pub cycles: u64,
    /// Watchdog budget for the whole run.
    pub timeout_ms: u64,
    /// Extra slack granted after a skip request before the run is declared
    /// dead; roughly one cycle.
    pub grace_ms: u64,
}

/// What a run produced. `duration_ms` is virtual for simulated fuzzers and
/// wall time for external adapters, and is always at least 1.
#[derive(Clone, Debug, Default)]
pub struct CycleResult {
    pub new_seeds: Vec<CandidateSeed>,
    pub duration_ms: u64,
    pub cycles_completed: u64,
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Watchdog stopped the run at the timeout; the result is partial.
    Skipped,
    /// The fuzzer died or broke protocol; the result holds whatever was
    /// delivered before the crash.
    Crashed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuzzerStatus {
    Idle,
    Running,
    Crashed,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuzzerKind {
    Simulated,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuntimeError {
    /// Operation invoked in a state that does not permit it.
    WrongState {
        expected: FuzzerStatus,
        actual: FuzzerStatus,
    },
    /// Seed transfer into the fuzzer's local pool failed.
    SyncFailed(String),
    /// The fuzzer could not be brought back up.
    RestartFailed(String),
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeError::WrongState { expected, actual } => {
                write!(f, "fuzzer is {actual:?}, operation requires {expected:?}")
            }
            RuntimeError::SyncFailed(msg) => write!(f, "seed sync failed: {msg}"),
            RuntimeError::RestartFailed(msg) => write!(f, "restart failed: {msg}"),
        }
    }
}

impl core::error::Error for RuntimeError {}

/// One integrated fuzzer as the orchestrator sees it: run some cycles,
/// absorb pool seeds, come back after a crash.
pub trait Fuzzer {
    fn run_cycles(&mut self, req: &RunRequest) -> (CycleResult, Termination);

    /// Copies pool records into the fuzzer's local pool.
    fn import_seeds(&mut self, records: &[SeedRecord]) -> Result<(), RuntimeError>;

    /// Brings a crashed fuzzer back to a runnable state with its local
    /// queue intact.
    fn restart(&mut self) -> Result<(), RuntimeError>;

    fn shutdown(&mut self) {}
}

/// Roster entry: the backend plus orchestrator-side bookkeeping.
pub struct FuzzerHandle {
    pub index: usize,
    pub kind: FuzzerKind,
    status: FuzzerStatus,
    local_hashes: BTreeSet<ContentHash>,
    backend: Box<dyn Fuzzer>,
}

impl fmt::Debug for FuzzerHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuzzerHandle")
            .field("index", &self.index)
            .field("kind", &self.kind)
            .field("status", &self.status)
            .field("local_seeds", &self.local_hashes.len())
            .finish()
    }
}

impl FuzzerHandle {
    pub fn new(index: usize, kind: FuzzerKind, backend: Box<dyn Fuzzer>) -> Self {
        FuzzerHandle {
            index,
            kind,
            status: FuzzerStatus::Idle,
            local_hashes: BTreeSet::new(),
            backend,
        }
    }

    pub fn status(&self) -> FuzzerStatus {
        self.status
    }

    pub fn local_hashes(&self) -> &BTreeSet<ContentHash> {
        &self.local_hashes
    }

    fn require(&self, expected: FuzzerStatus) -> Result<(), RuntimeError> {
        if self.status == expected {
            Ok(())
        } else {
            Err(RuntimeError::WrongState {
                expected,
                actual: self.status,
            })
        }
    }

    /// Runs up to `req.cycles` cycles. The handle passes through
    /// running and lands on idle (normal or skipped run) or crashed.
    pub fn run_cycles(
        &mut self,
        req: &RunRequest,
    ) -> Result<(CycleResult, Termination), RuntimeError> {
        self.require(FuzzerStatus::Idle)?;
        self.status = FuzzerStatus::Running;
        let (result, termination) = self.backend.run_cycles(req);
        match termination {
            Termination::Completed => self.status = FuzzerStatus::Idle,
            Termination::Skipped => {
                self.watchdog_skip().expect("running");
                self.status = FuzzerStatus::Idle;
            }
            Termination::Crashed => self.status = FuzzerStatus::Crashed,
        }
        // The fuzzer keeps everything it generated in its own local pool,
        // whether or not the global pool accepts it.
        for seed in &result.new_seeds {
            self.local_hashes.insert(ContentHash::of(&seed.payload));
        }
        Ok((result, termination))
    }

    /// Imports pool records into the local queue. A transfer failure marks
    /// the fuzzer crashed and the round is aborted by the caller.
    pub fn import_seeds(&mut self, records: &[SeedRecord]) -> Result<(), RuntimeError> {
        self.require(FuzzerStatus::Idle)?;
        if let Err(e) = self.backend.import_seeds(records) {
            self.status = FuzzerStatus::Crashed;
            return Err(e);
        }
        for record in records {
            self.local_hashes.insert(record.content_hash);
        }
        Ok(())
    }

    /// Pauses a running fuzzer so partial results can be collected.
    pub fn watchdog_skip(&mut self) -> Result<(), RuntimeError> {
        self.require(FuzzerStatus::Running)?;
        self.status = FuzzerStatus::Skipped;
        Ok(())
    }

    /// Reboots a crashed fuzzer; its local queue survives.
    pub fn watchdog_restart(&mut self) -> Result<(), RuntimeError> {
        self.require(FuzzerStatus::Crashed)?;
        self.backend.restart()?;
        self.status = FuzzerStatus::Idle;
        Ok(())
    }

    pub fn shutdown(&mut self) {
        self.backend.shutdown();
    }

    #[doc(hidden)]
    pub fn backend_mut(&mut self) -> &mut dyn Fuzzer {
        &mut *self.backend
    }
}
