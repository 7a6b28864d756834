//! Reference external adapter: wraps the deterministic simulated fuzzer
//! behind the orchestrator's line protocol, so the external code path can be
//! exercised end to end without a real fuzzer. Fault-injection flags make
//! hangs, crashes and sync failures reproducible for watchdog testing.
//!
//! Protocol (stdin -> stdout):
//! `INIT <queue_dir>` -> `READY`
//! `IMPORT <n>` + n path lines -> `READY` (or `ERROR ...`)
//! `RUN <cycles> <timeout_ms>` -> `RESULT <duration_ms> <cycles>` + report + `END`
//! `SKIP` -> accelerates the in-flight RUN, which answers with its partial RESULT
//! `SHUTDOWN` -> exit

use std::io::Write as _;
use std::path::PathBuf;
use std::sync::mpsc::RecvTimeoutError;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;

use fuzzmux::report::{emit_report, ReportSeed};
use fuzzmux::target_file::load_target;
use fuzzmux_core::coverage::{Branch, ContentHash};
use fuzzmux_core::pool::{SeedOrigin, SeedRecord};
use fuzzmux_core::rng::derive_seed;
use fuzzmux_core::runtime::{Fuzzer, RunRequest};
use fuzzmux_core::sim::SimulatedFuzzer;
use fuzzmux_core::SeedCoverage;

#[derive(Parser)]
#[command(name = "fuzzmux-adapter", version, about)]
struct Args {
    /// Synthetic target file to fuzz.
    #[arg(long)]
    target: PathBuf,
    /// Roster index of this fuzzer (selects its probability column).
    #[arg(long)]
    fuzzer: usize,
    /// RNG seed; the orchestrator-side convention derives per-fuzzer
    /// streams from the campaign seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hang on the Nth RUN (1-based) instead of fuzzing.
    #[arg(long, value_name = "N")]
    hang_on_run: Option<u64>,
    /// While hanging, ignore SKIP too, forcing the orchestrator to kill us.
    #[arg(long)]
    ignore_skip: bool,
    /// Exit with status 1 on the Nth RUN (1-based). Leaves a marker file in
    /// the queue dir so the crash fires only once across restarts.
    #[arg(long, value_name = "N")]
    crash_on_run: Option<u64>,
    /// Answer every IMPORT with ERROR.
    #[arg(long)]
    fail_imports: bool,
}

fn reply(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Parses a canonical simulated payload (`branch <pred> <succ>` lines) back
/// into coverage.
fn coverage_from_payload(payload: &[u8]) -> Option<Vec<Branch>> {
    let text = std::str::from_utf8(payload).ok()?;
    let mut branches = Vec::new();
    for line in text.lines() {
        let mut parts = line.split_ascii_whitespace();
        if parts.next()? != "branch" {
            return None;
        }
        let pred = u64::from_str_radix(parts.next()?, 16).ok()?;
        let succ = u64::from_str_radix(parts.next()?, 16).ok()?;
        branches.push(Branch::new(pred, succ));
    }
    Some(branches)
}

fn main() {
    let args = Args::parse();
    let target = match load_target(&args.target) {
        Ok(target) => Arc::new(target),
        Err(e) => {
            eprintln!("adapter: cannot load target: {e}");
            std::process::exit(2);
        }
    };
    let mut sim = SimulatedFuzzer::new(
        args.fuzzer,
        target,
        derive_seed(args.seed, args.fuzzer as u64),
    );

    // Stdin flows through a channel so a hang can still observe SKIP.
    let (tx, rx) = std::sync::mpsc::channel::<String>();
    std::thread::spawn(move || {
        let stdin = std::io::stdin();
        let mut line = String::new();
        loop {
            line.clear();
            match stdin.read_line(&mut line) {
                Ok(0) | Err(_) => break,
                Ok(_) => {
                    if tx.send(line.trim_end().to_string()).is_err() {
                        break;
                    }
                }
            }
        }
    });

    let mut queue_dir: Option<PathBuf> = None;
    let mut import_id = 0u64;
    let mut own_counter = 0u64;
    let mut runs_seen = 0u64;
    let mut round = 0u64;

    loop {
        let Ok(line) = rx.recv() else { return };
        let mut parts = line.split_ascii_whitespace();
        match parts.next() {
            Some("INIT") => {
                let Some(dir) = parts.next() else {
                    reply("ERROR INIT needs a queue dir");
                    continue;
                };
                let dir = PathBuf::from(dir);
                if let Err(e) = std::fs::create_dir_all(&dir) {
                    reply(&format!("ERROR cannot create queue dir: {e}"));
                    continue;
                }
                queue_dir = Some(dir);
                reply("READY");
            }
            Some("IMPORT") => {
                let count: usize = match parts.next().and_then(|n| n.parse().ok()) {
                    Some(n) => n,
                    None => {
                        reply("ERROR IMPORT needs a count");
                        continue;
                    }
                };
                let mut names = Vec::with_capacity(count);
                for _ in 0..count {
                    match rx.recv() {
                        Ok(name) => names.push(name),
                        Err(_) => return,
                    }
                }
                if args.fail_imports {
                    reply("ERROR imports disabled");
                    continue;
                }
                let Some(dir) = &queue_dir else {
                    reply("ERROR IMPORT before INIT");
                    continue;
                };
                let mut records = Vec::new();
                for name in names {
                    let path = dir.join(&name);
                    let payload = match std::fs::read(&path) {
                        Ok(bytes) => bytes,
                        Err(e) => {
                            reply(&format!("ERROR cannot read {name}: {e}"));
                            records.clear();
                            break;
                        }
                    };
                    if let Some(branches) = coverage_from_payload(&payload) {
                        let hash = ContentHash::of(&payload);
                        records.push(SeedRecord {
                            seed_id: import_id,
                            content_hash: hash,
                            payload: payload.into(),
                            coverage: SeedCoverage::new(import_id, branches),
                            origin: SeedOrigin::InitialCorpus,
                            discovered_round: 0,
                        });
                        import_id += 1;
                    }
                }
                let _ = sim.import_seeds(&records);
                reply("READY");
            }
            Some("RUN") => {
                runs_seen += 1;
                round += 1;
                let (cycles, timeout_ms) = match (
                    parts.next().and_then(|n| n.parse::<u64>().ok()),
                    parts.next().and_then(|n| n.parse::<u64>().ok()),
                ) {
                    (Some(c), Some(t)) => (c, t),
                    _ => {
                        reply("ERROR RUN needs cycles and timeout");
                        continue;
                    }
                };

                if args.crash_on_run == Some(runs_seen) {
                    let marker = queue_dir
                        .as_ref()
                        .map(|dir| dir.join(".crash-injected"));
                    let already = marker.as_ref().is_some_and(|m| m.exists());
                    if !already {
                        if let Some(marker) = marker {
                            let _ = std::fs::write(marker, b"");
                        }
                        eprintln!("adapter: injected crash on run {runs_seen}");
                        std::process::exit(1);
                    }
                }
                if args.hang_on_run == Some(runs_seen) {
                    // Simulate a stuck fuzzer: wait for SKIP (unless told to
                    // ignore it) and then hand back an empty partial result.
                    loop {
                        match rx.recv_timeout(Duration::from_millis(20)) {
                            Ok(cmd) if cmd.trim() == "SKIP" && !args.ignore_skip => {
                                reply("RESULT 1 0");
                                reply("END");
                                break;
                            }
                            Ok(cmd) if cmd.trim() == "SHUTDOWN" => return,
                            Ok(_) | Err(RecvTimeoutError::Timeout) => {}
                            Err(RecvTimeoutError::Disconnected) => return,
                        }
                    }
                    continue;
                }

                let Some(dir) = &queue_dir else {
                    reply("ERROR RUN before INIT");
                    continue;
                };
                let request = RunRequest {
                    round,
                    cycles,
                    timeout_ms,
                    grace_ms: 0,
                };
                let (result, _) = sim.run_cycles(&request);
                let mut stanzas = Vec::with_capacity(result.new_seeds.len());
                let mut ok = true;
                for seed in &result.new_seeds {
                    let hash = ContentHash::of(&seed.payload);
                    let name = format!("own_{own_counter}_{}", hash.short_hex());
                    own_counter += 1;
                    if let Err(e) = std::fs::write(dir.join(&name), &seed.payload) {
                        reply(&format!("ERROR cannot write seed: {e}"));
                        ok = false;
                        break;
                    }
                    stanzas.push(ReportSeed {
                        name,
                        hash,
                        branches: seed.branches.clone(),
                    });
                }
                if !ok {
                    continue;
                }
                reply(&format!(
                    "RESULT {} {}",
                    result.duration_ms, result.cycles_completed
                ));
                let report = emit_report(&stanzas);
                if !report.is_empty() {
                    print!("{report}");
                }
                reply("END");
            }
            Some("SKIP") => {
                // No run in flight; nothing to do.
            }
            Some("SHUTDOWN") => return,
            Some(other) => {
                reply(&format!("ERROR unknown command {other:?}"));
            }
            None => {}
        }
    }
}
