//! External fuzzer adapters: child processes driven over a line protocol on
//! their standard streams.
//!
//! Orchestrator to adapter:
//! `INIT <queue_dir>`, `IMPORT <n>` followed by n file paths,
//! `RUN <cycles> <timeout_ms>`, `SKIP`, `SHUTDOWN`.
//!
//! Adapter to orchestrator:
//! `READY` (ack for INIT and IMPORT), `RESULT <duration_ms>
//! <cycles_completed>` followed by a coverage report terminated by `END`,
//! or `ERROR <message>`.
//!
//! One control thread owns the conversation; a reader thread pumps stdout
//! lines into a channel so every wait can carry a wall-clock deadline. If a
//! RUN overshoots its budget the watchdog sends `SKIP` and accepts a partial
//! result within the grace window; an adapter that stays silent is killed
//! and reported crashed.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use fuzzmux_core::coverage::ContentHash;
use fuzzmux_core::pool::{CandidateSeed, SeedRecord};
use fuzzmux_core::runtime::{CycleResult, Fuzzer, RunRequest, RuntimeError, Termination};

use crate::report::parse_report;

/// How long adapters get to answer INIT and IMPORT.
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);

pub struct ExternalFuzzer {
    index: usize,
    cmd: Vec<String>,
    queue_dir: PathBuf,
    child: Option<Child>,
    stdin: Option<ChildStdin>,
    lines: Option<Receiver<String>>,
}

impl std::fmt::Debug for ExternalFuzzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalFuzzer")
            .field("index", &self.index)
            .field("cmd", &self.cmd)
            .finish()
    }
}

impl ExternalFuzzer {
    /// Spawns the adapter process and completes the INIT handshake.
    pub fn spawn(
        index: usize,
        cmd: Vec<String>,
        queue_dir: PathBuf,
    ) -> Result<Self, RuntimeError> {
        let mut fuzzer = ExternalFuzzer {
            index,
            cmd,
            queue_dir,
            child: None,
            stdin: None,
            lines: None,
        };
        fuzzer.boot()?;
        Ok(fuzzer)
    }

    fn boot(&mut self) -> Result<(), RuntimeError> {
        std::fs::create_dir_all(&self.queue_dir)
            .map_err(|e| RuntimeError::RestartFailed(format!("queue dir: {e}")))?;
        let mut child = Command::new(&self.cmd[0])
            .args(&self.cmd[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RuntimeError::RestartFailed(format!("spawn {:?}: {e}", self.cmd[0])))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                match line {
                    Ok(line) => {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });

        self.child = Some(child);
        self.stdin = Some(stdin);
        self.lines = Some(rx);

        self.send(&format!("INIT {}", self.queue_dir.display()))?;
        self.expect_ready(HANDSHAKE_TIMEOUT)
            .map_err(|e| RuntimeError::RestartFailed(format!("INIT: {e}")))?;
        debug_log!("adapter {} ready: {:?}", self.index, self.cmd);
        Ok(())
    }

    fn send(&mut self, line: &str) -> Result<(), RuntimeError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| RuntimeError::SyncFailed("adapter not running".into()))?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| RuntimeError::SyncFailed(format!("write to adapter: {e}")))
    }

    fn recv(&self, deadline: Instant) -> Result<String, RecvTimeoutError> {
        let rx = self.lines.as_ref().expect("reader attached");
        let now = Instant::now();
        let budget = deadline.saturating_duration_since(now);
        rx.recv_timeout(budget)
    }

    fn expect_ready(&self, timeout: Duration) -> Result<(), String> {
        let deadline = Instant::now() + timeout;
        match self.recv(deadline) {
            Ok(line) if line.trim() == "READY" => Ok(()),
            Ok(line) if line.trim_start().starts_with("ERROR") => Err(line),
            Ok(line) => Err(format!("unexpected reply {line:?}")),
            Err(_) => Err("no reply within timeout".into()),
        }
    }

    fn kill(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
        self.stdin = None;
        self.lines = None;
    }

    /// Reads the RESULT body (report stanzas terminated by `END`) and turns
    /// the stanzas into candidates by loading seed files from the queue.
    fn collect_result(
        &mut self,
        duration_ms: u64,
        cycles_completed: u64,
        deadline: Instant,
    ) -> Result<CycleResult, String> {
        let mut body = Vec::new();
        loop {
            match self.recv(deadline) {
                Ok(line) => {
                    if line.trim() == "END" {
                        break;
                    }
                    body.push(line);
                }
                Err(_) => return Err("adapter stopped mid-report".into()),
            }
        }
        let stanzas =
            parse_report(body.iter().map(|s| s.as_str())).map_err(|e| e.to_string())?;

        let mut new_seeds = Vec::new();
        for stanza in stanzas {
            let rel = Path::new(&stanza.name);
            if rel.is_absolute() || rel.components().any(|c| c.as_os_str() == "..") {
                warn_log!(
                    "adapter {}: refusing seed path {:?}",
                    self.index,
                    stanza.name
                );
                continue;
            }
            let path = self.queue_dir.join(rel);
            let payload = match std::fs::read(&path) {
                Ok(bytes) => bytes,
                Err(e) => {
                    warn_log!("adapter {}: cannot read seed {:?}: {e}", self.index, path);
                    continue;
                }
            };
            if ContentHash::of(&payload) != stanza.hash {
                warn_log!(
                    "adapter {}: hash mismatch for seed {:?}, dropping",
                    self.index,
                    stanza.name
                );
                continue;
            }
            new_seeds.push(CandidateSeed::new(payload, stanza.branches));
        }
        Ok(CycleResult {
            new_seeds,
            duration_ms: duration_ms.max(1),
            cycles_completed,
        })
    }

    fn run_protocol(&mut self, req: &RunRequest) -> (CycleResult, Termination) {
        if let Err(e) = self.send(&format!("RUN {} {}", req.cycles, req.timeout_ms)) {
            warn_log!("adapter {}: {e}", self.index);
            self.kill();
            return (CycleResult::default(), Termination::Crashed);
        }

        let start = Instant::now();
        let run_deadline = start + Duration::from_millis(req.timeout_ms);
        let mut skipped = false;
        loop {
            let deadline = if skipped {
                run_deadline + Duration::from_millis(req.grace_ms)
            } else {
                run_deadline
            };
            match self.recv(deadline) {
                Ok(line) => {
                    let line = line.trim().to_string();
                    let mut parts = line.split_ascii_whitespace();
                    match parts.next() {
                        Some("RESULT") => {
                            let parsed = (
                                parts.next().and_then(|d| d.parse::<u64>().ok()),
                                parts.next().and_then(|c| c.parse::<u64>().ok()),
                            );
                            let (Some(duration_ms), Some(cycles)) = parsed else {
                                warn_log!("adapter {}: bad RESULT {line:?}", self.index);
                                self.kill();
                                return (CycleResult::default(), Termination::Crashed);
                            };
                            let body_deadline = Instant::now() + Duration::from_secs(10);
                            match self.collect_result(duration_ms, cycles, body_deadline) {
                                Ok(result) => {
                                    let termination = if skipped {
                                        Termination::Skipped
                                    } else {
                                        Termination::Completed
                                    };
                                    return (result, termination);
                                }
                                Err(e) => {
                                    warn_log!("adapter {}: {e}", self.index);
                                    self.kill();
                                    return (CycleResult::default(), Termination::Crashed);
                                }
                            }
                        }
                        Some("ERROR") => {
                            warn_log!("adapter {}: reported {line:?}", self.index);
                            self.kill();
                            return (CycleResult::default(), Termination::Crashed);
                        }
                        _ => {
                            warn_log!("adapter {}: protocol violation {line:?}", self.index);
                            self.kill();
                            return (CycleResult::default(), Termination::Crashed);
                        }
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    if skipped {
                        warn_log!(
                            "adapter {}: ignored skip, killing after grace",
                            self.index
                        );
                        self.kill();
                        return (CycleResult::default(), Termination::Crashed);
                    }
                    info_log!(
                        "adapter {}: run exceeded {} ms, skipping",
                        self.index,
                        req.timeout_ms
                    );
                    skipped = true;
                    if self.send("SKIP").is_err() {
                        self.kill();
                        return (CycleResult::default(), Termination::Crashed);
                    }
                }
                Err(RecvTimeoutError::Disconnected) => {
                    warn_log!("adapter {}: exited during run", self.index);
                    self.kill();
                    return (CycleResult::default(), Termination::Crashed);
                }
            }
        }
    }
}

impl Fuzzer for ExternalFuzzer {
    fn run_cycles(&mut self, req: &RunRequest) -> (CycleResult, Termination) {
        self.run_protocol(req)
    }

    /// Copies payloads into the adapter's queue directory and announces the
    /// paths with IMPORT; the adapter acknowledges with READY.
    fn import_seeds(&mut self, records: &[SeedRecord]) -> Result<(), RuntimeError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut names = Vec::with_capacity(records.len());
        for record in records {
            let name = format!("{}_{}", record.seed_id, record.content_hash.short_hex());
            let path = self.queue_dir.join(&name);
            std::fs::write(&path, &record.payload)
                .map_err(|e| RuntimeError::SyncFailed(format!("write {path:?}: {e}")))?;
            names.push(name);
        }
        self.send(&format!("IMPORT {}", names.len()))?;
        for name in &names {
            self.send(name)?;
        }
        self.expect_ready(HANDSHAKE_TIMEOUT)
            .map_err(RuntimeError::SyncFailed)
    }

    /// Kills whatever is left of the process and boots a fresh one against
    /// the same queue directory.
    fn restart(&mut self) -> Result<(), RuntimeError> {
        self.kill();
        self.boot()
    }

    fn shutdown(&mut self) {
        let _ = self.send("SHUTDOWN");
        if let Some(mut child) = self.child.take() {
            std::thread::sleep(Duration::from_millis(50));
            let _ = child.kill();
            let _ = child.wait();
        }
        self.stdin = None;
        self.lines = None;
    }
}

impl Drop for ExternalFuzzer {
    fn drop(&mut self) {
        self.kill();
    }
}
