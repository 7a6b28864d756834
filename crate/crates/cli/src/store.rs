//! Campaign directory layout and on-disk artifacts.
//!
//! ```text
//! <out_dir>/
//!   trace.tsv              # one tab-separated record per round, append-only
//!   coverage.csv           # round,virtual_ms,branches,selected_fuzzer,reward
//!   summary.txt            # human-readable campaign report
//!   global_queue/<seed_id>_<hash16>
//!   fuzzers/<idx>/queue/   # per-fuzzer local copies, byte-exact on sync
//! ```
//!
//! The trace is the replay and audit artifact: fields in fixed order,
//! flushed after every round, no timestamps, so identical campaigns produce
//! byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fuzzmux_core::orchestrator::{CampaignReport, RoundRecord};
use fuzzmux_core::pool::SeedRecord;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct StoreError {
    pub path: String,
    pub source: std::io::Error,
}

fn store_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError {
        path: path.display().to_string(),
        source,
    }
}

pub fn seed_file_name(record: &SeedRecord) -> String {
    format!("{}_{}", record.seed_id, record.content_hash.short_hex())
}

pub struct CampaignStore {
    root: PathBuf,
    trace: BufWriter<File>,
    csv: BufWriter<File>,
    virtual_ms: u64,
    next_persisted_seed: u64,
}

impl CampaignStore {
    /// Creates the directory tree and both per-round files with headers.
    pub fn create(root: &Path, rng_seed: u64, fuzzer_names: &[String]) -> Result<Self, StoreError> {
        fs::create_dir_all(root).map_err(store_err(root))?;
        let queue = root.join("global_queue");
        fs::create_dir_all(&queue).map_err(store_err(&queue))?;
        for idx in 0..fuzzer_names.len() {
            let local = local_queue_dir(root, idx);
            fs::create_dir_all(&local).map_err(store_err(&local))?;
        }

        let trace_path = root.join("trace.tsv");
        let mut trace = BufWriter::new(File::create(&trace_path).map_err(store_err(&trace_path))?);
        writeln!(trace, "# campaign-trace v1").map_err(store_err(&trace_path))?;
        writeln!(trace, "# seed {rng_seed}").map_err(store_err(&trace_path))?;
        writeln!(trace, "# fuzzers {}", fuzzer_names.join(",")).map_err(store_err(&trace_path))?;
        writeln!(
            trace,
            "round\tselected\tcycles\tduration_ms\traw\treward\tr_hat\taccepted\tbranches\tarms"
        )
        .map_err(store_err(&trace_path))?;

        let csv_path = root.join("coverage.csv");
        let mut csv = BufWriter::new(File::create(&csv_path).map_err(store_err(&csv_path))?);
        writeln!(csv, "round,virtual_ms,branches,selected_fuzzer,reward")
            .map_err(store_err(&csv_path))?;

        Ok(CampaignStore {
            root: root.to_path_buf(),
            trace,
            csv,
            virtual_ms: 0,
            next_persisted_seed: 0,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn local_queue(&self, fuzzer: usize) -> PathBuf {
        local_queue_dir(&self.root, fuzzer)
    }

    /// Appends one round to the trace and coverage files and flushes both.
    pub fn append_round(&mut self, record: &RoundRecord) -> Result<(), StoreError> {
        self.virtual_ms += record.duration_ms;
        let trace_path = self.root.join("trace.tsv");
        writeln!(self.trace, "{}", trace_line(record)).map_err(store_err(&trace_path))?;
        self.trace.flush().map_err(store_err(&trace_path))?;

        let csv_path = self.root.join("coverage.csv");
        writeln!(
            self.csv,
            "{},{},{},{},{}",
            record.round, self.virtual_ms, record.total_branches, record.selected, record.reward
        )
        .map_err(store_err(&csv_path))?;
        self.csv.flush().map_err(store_err(&csv_path))?;
        Ok(())
    }

    /// Writes any pool records not yet on disk into `global_queue/`.
    pub fn persist_new_seeds(
        &mut self,
        pool: &fuzzmux_core::SeedPool,
    ) -> Result<(), StoreError> {
        for record in pool.records_from(self.next_persisted_seed) {
            let path = self.root.join("global_queue").join(seed_file_name(&record));
            fs::write(&path, &record.payload).map_err(store_err(&path))?;
            self.next_persisted_seed = record.seed_id + 1;
        }
        Ok(())
    }

    pub fn write_summary(
        &self,
        report: &CampaignReport,
        fuzzer_names: &[String],
    ) -> Result<(), StoreError> {
        let path = self.root.join("summary.txt");
        let mut out = String::new();
        render_summary(&mut out, report, fuzzer_names);
        fs::write(&path, out).map_err(store_err(&path))
    }
}

fn local_queue_dir(root: &Path, fuzzer: usize) -> PathBuf {
    root.join("fuzzers").join(fuzzer.to_string()).join("queue")
}

/// Fixed-order tab-separated trace line. Arm states render as
/// `alpha:beta` pairs joined by `|`.
pub fn trace_line(record: &RoundRecord) -> String {
    let arms = record
        .arms
        .iter()
        .map(|a| format!("{}:{}", a.alpha, a.beta))
        .collect::<Vec<_>>()
        .join("|");
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        record.round,
        record.selected,
        record.cycles_run,
        record.duration_ms,
        record.raw_reward,
        record.reward,
        record.r_hat as u8,
        record.seeds_accepted,
        record.total_branches,
        arms
    )
}

pub fn render_summary(out: &mut String, report: &CampaignReport, fuzzer_names: &[String]) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "campaign summary");
    let _ = writeln!(out, "rounds: {}", report.rounds.len());
    let _ = writeln!(out, "campaign time: {} ms", report.elapsed_ms);
    let _ = writeln!(out, "initial branches: {}", report.initial_branches);
    let _ = writeln!(out, "final branches: {}", report.final_branches);
    let _ = writeln!(out, "arm resets: {}", report.resets);
    for (idx, summary) in report.per_fuzzer.iter().enumerate() {
        let name = fuzzer_names
            .get(idx)
            .map(String::as_str)
            .unwrap_or("fuzzer");
        let _ = writeln!(
            out,
            "fuzzer {idx} ({name}): selections {}, reward sum {:.4}, total {} ms",
            summary.selections, summary.reward_sum, summary.total_duration_ms
        );
    }
}

/// Mirrors synced seeds of an in-process fuzzer into its on-disk local
/// queue so the campaign directory looks the same for every roster kind.
pub struct FileMirror<B> {
    inner: B,
    queue_dir: PathBuf,
}

impl<B> FileMirror<B> {
    pub fn new(inner: B, queue_dir: PathBuf) -> Self {
        FileMirror { inner, queue_dir }
    }
}

impl<B: fuzzmux_core::Fuzzer> fuzzmux_core::Fuzzer for FileMirror<B> {
    fn run_cycles(
        &mut self,
        req: &fuzzmux_core::runtime::RunRequest,
    ) -> (fuzzmux_core::CycleResult, fuzzmux_core::runtime::Termination) {
        self.inner.run_cycles(req)
    }

    fn import_seeds(
        &mut self,
        records: &[SeedRecord],
    ) -> Result<(), fuzzmux_core::runtime::RuntimeError> {
        std::fs::create_dir_all(&self.queue_dir).map_err(|e| {
            fuzzmux_core::runtime::RuntimeError::SyncFailed(format!(
                "{}: {e}",
                self.queue_dir.display()
            ))
        })?;
        for record in records {
            let path = self.queue_dir.join(seed_file_name(record));
            std::fs::write(&path, &record.payload).map_err(|e| {
                fuzzmux_core::runtime::RuntimeError::SyncFailed(format!(
                    "{}: {e}",
                    path.display()
                ))
            })?;
        }
        self.inner.import_seeds(records)
    }

    fn restart(&mut self) -> Result<(), fuzzmux_core::runtime::RuntimeError> {
        self.inner.restart()
    }

    fn shutdown(&mut self) {
        self.inner.shutdown();
    }
}
