//! Shared builders for the acceptance experiments: parameterized synthetic
//! target suites and campaign configs written into a scratch directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A straight-line target with a gated deep section: a preamble chain every
/// fuzzer can walk, one gate branch only the specialist solves reliably, and
/// a long chain behind it the specialist grinds much faster than the rest.
pub struct Breakthrough {
    pub specialist: usize,
    pub preamble: u64,
    pub deep: u64,
    pub preamble_p: f64,
    pub gate_p_specialist: f64,
    pub gate_p_other: f64,
    pub deep_p_specialist: f64,
    pub deep_p_other: f64,
    pub cycle_ms: u64,
}

impl Breakthrough {
    pub fn render(&self) -> String {
        let total_blocks = self.preamble + 1 + self.deep + 1;
        let mut out = String::from("[blocks]\n");
        for block in 1..=total_blocks {
            let _ = writeln!(out, "{block:x}");
        }
        let _ = writeln!(out, "[branches]");
        for block in 1..total_blocks {
            let _ = writeln!(out, "{:x} {:x}", block, block + 1);
        }
        let _ = writeln!(out, "[probs]");
        let _ = writeln!(out, "default {}", self.preamble_p);
        let gate_pred = self.preamble + 1;
        let _ = writeln!(
            out,
            "* {:x} {:x} {}",
            gate_pred,
            gate_pred + 1,
            self.gate_p_other
        );
        let _ = writeln!(
            out,
            "{} {:x} {:x} {}",
            self.specialist,
            gate_pred,
            gate_pred + 1,
            self.gate_p_specialist
        );
        for block in (gate_pred + 1)..total_blocks {
            let _ = writeln!(out, "* {:x} {:x} {}", block, block + 1, self.deep_p_other);
            let _ = writeln!(
                out,
                "{} {:x} {:x} {}",
                self.specialist,
                block,
                block + 1,
                self.deep_p_specialist
            );
        }
        let _ = writeln!(out, "[cycle_ms]");
        let _ = writeln!(out, "default {}", self.cycle_ms);
        out
    }
}

/// Writes the three-target breakthrough suite used by the scheduler and
/// sync experiments: five fuzzers, a different specialist per target.
pub fn write_breakthrough_suite(dir: &Path) -> Vec<PathBuf> {
    let targets = [
        Breakthrough {
            specialist: 0,
            preamble: 8,
            deep: 80,
            preamble_p: 0.5,
            gate_p_specialist: 0.15,
            gate_p_other: 0.000001,
            deep_p_specialist: 0.18,
            deep_p_other: 0.02,
            cycle_ms: 30_000,
        },
        Breakthrough {
            specialist: 2,
            preamble: 6,
            deep: 70,
            preamble_p: 0.45,
            gate_p_specialist: 0.12,
            gate_p_other: 0.000001,
            deep_p_specialist: 0.2,
            deep_p_other: 0.02,
            cycle_ms: 30_000,
        },
        Breakthrough {
            specialist: 4,
            preamble: 10,
            deep: 90,
            preamble_p: 0.5,
            gate_p_specialist: 0.18,
            gate_p_other: 0.000001,
            deep_p_specialist: 0.15,
            deep_p_other: 0.015,
            cycle_ms: 30_000,
        },
    ];
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = dir.join(format!("breakthrough_{i}.txt"));
            std::fs::write(&path, t.render()).unwrap();
            path
        })
        .collect()
}

/// Three-fuzzer target for the hyper-parameter sweep: a quick gate for the
/// specialist, then a wide rake of parallel chains behind it. The rake keeps
/// the specialist's per-round yield high and steady for the whole campaign,
/// so the bandit re-locks within a few rounds after every reset and an
/// eight-virtual-hour run neither saturates nor stays in the noisy opening.
pub fn write_insensitivity_target(dir: &Path) -> PathBuf {
    let preamble = 8u64;
    let rake_chains = 6u64;
    let chain_len = 150u64;

    let mut blocks: Vec<u64> = (1..=preamble + 2).collect();
    let mut branches: Vec<(u64, u64)> = (1..=preamble + 1).map(|b| (b, b + 1)).collect();
    let gate = (preamble + 1, preamble + 2);
    let hub = preamble + 2;
    let mut probs: Vec<String> = vec!["default 0.5".to_string()];
    probs.push(format!("* {:x} {:x} 0.000001", gate.0, gate.1));
    probs.push(format!("0 {:x} {:x} 0.3", gate.0, gate.1));

    let mut next = hub + 1;
    for _ in 0..rake_chains {
        let mut pred = hub;
        for _ in 0..chain_len {
            blocks.push(next);
            branches.push((pred, next));
            probs.push(format!("* {pred:x} {next:x} 0.05"));
            probs.push(format!("0 {pred:x} {next:x} 0.12"));
            pred = next;
            next += 1;
        }
    }

    let mut out = String::from("[blocks]\n");
    for block in &blocks {
        let _ = writeln!(out, "{block:x}");
    }
    let _ = writeln!(out, "[branches]");
    for (p, s) in &branches {
        let _ = writeln!(out, "{p:x} {s:x}");
    }
    let _ = writeln!(out, "[probs]");
    for line in &probs {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "[cycle_ms]\ndefault 30000");
    let path = dir.join("insensitivity.txt");
    std::fs::write(&path, out).unwrap();
    path
}

/// Two-fuzzer target with heterogeneous branch difficulty. Fuzzer 0 (the
/// sprayer) lives off long junk chains with short coverage intervals;
/// fuzzer 1 (the solver) works a staircase of hard gates, each opening a
/// fan of easy branches. A frequency-based reward cannot tell them apart; an
/// interval-based one can.
pub fn write_heterogeneous_target(dir: &Path) -> PathBuf {
    let junk_chains = 2u64;
    let junk_len = 350u64;
    let segments = 50u64;
    let fan = 12u64;

    let mut blocks: Vec<u64> = vec![1];
    let mut branches: Vec<(u64, u64)> = Vec::new();
    let mut probs: Vec<String> = vec!["default 0.0".to_string()];
    let mut push_prob = |fuzzer: Option<usize>, p: u64, s: u64, prob: f64| {
        probs.push(match fuzzer {
            Some(f) => format!("{f} {p:x} {s:x} {prob}"),
            None => format!("* {p:x} {s:x} {prob}"),
        });
    };

    // Junk lanes off the entry: sprayer 0.3 per cycle, solver a stumble.
    let mut next = 2u64;
    for _ in 0..junk_chains {
        let mut pred = 1u64;
        for _ in 0..junk_len {
            blocks.push(next);
            branches.push((pred, next));
            push_prob(Some(0), pred, next, 0.3);
            push_prob(Some(1), pred, next, 0.01);
            pred = next;
            next += 1;
        }
    }

    // Staircase: gate -> fan hub -> fan children; the next gate hangs off
    // the first fan child, so segments unlock strictly in order.
    let mut gate_pred = 1u64;
    for _ in 0..segments {
        let hub = next;
        next += 1;
        blocks.push(hub);
        branches.push((gate_pred, hub));
        push_prob(Some(0), gate_pred, hub, 0.0000001);
        push_prob(Some(1), gate_pred, hub, 0.06);
        let mut first_child = 0u64;
        for j in 0..fan {
            let child = next;
            next += 1;
            blocks.push(child);
            branches.push((hub, child));
            push_prob(Some(0), hub, child, 0.02);
            push_prob(Some(1), hub, child, 0.45);
            if j == 0 {
                first_child = child;
            }
        }
        gate_pred = first_child;
    }

    let mut out = String::from("[blocks]\n");
    for block in &blocks {
        let _ = writeln!(out, "{block:x}");
    }
    let _ = writeln!(out, "[branches]");
    for (p, s) in &branches {
        let _ = writeln!(out, "{p:x} {s:x}");
    }
    let _ = writeln!(out, "[probs]");
    for line in &probs {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "[cycle_ms]\ndefault 30000");

    let path = dir.join("heterogeneous.txt");
    std::fs::write(&path, out).unwrap();
    path
}

/// Two-fuzzer nonstationary target: a shared preamble and one long deep
/// chain. Fuzzer 0 is the specialist until the phase switch swaps the
/// skill table to fuzzer 1.
pub fn write_nonstationary_target(dir: &Path, switch_round: u64) -> PathBuf {
    let preamble = 6u64;
    let deep = 200u64;
    let total_blocks = preamble + 1 + deep;

    let mut out = String::from("[blocks]\n");
    for block in 1..=total_blocks {
        let _ = writeln!(out, "{block:x}");
    }
    let _ = writeln!(out, "[branches]");
    for block in 1..total_blocks {
        let _ = writeln!(out, "{:x} {:x}", block, block + 1);
    }

    let phase_lines = |out: &mut String, skilled: usize, dud: usize| {
        let _ = writeln!(out, "default 0.5");
        for block in (preamble + 1)..total_blocks {
            let _ = writeln!(out, "{} {:x} {:x} 0.3", skilled, block, block + 1);
            let _ = writeln!(out, "{} {:x} {:x} 0.005", dud, block, block + 1);
        }
    };
    let _ = writeln!(out, "[probs]");
    phase_lines(&mut out, 0, 1);
    let _ = writeln!(out, "[cycle_ms]\ndefault 30000");
    let _ = writeln!(out, "[phases]");
    let _ = writeln!(out, "phase {switch_round}");
    phase_lines(&mut out, 1, 0);

    let path = dir.join("nonstationary.txt");
    std::fs::write(&path, out).unwrap();
    path
}

/// Knobs for a generated campaign config over simulated fuzzers.
pub struct Knobs<'a> {
    pub fuzzers: usize,
    pub scheduler: &'a str,
    pub sync: bool,
    pub reward: &'a str,
    pub reset: bool,
    pub t_i_ms: u64,
    pub i_r_ms: u64,
    pub stop: &'a str,
    pub seed: u64,
}

impl Default for Knobs<'_> {
    fn default() -> Self {
        Knobs {
            fuzzers: 5,
            scheduler: "ts",
            sync: true,
            reward: "interval",
            reset: true,
            t_i_ms: 120_000,
            i_r_ms: 7_200_000,
            stop: "rounds 250",
            seed: 1,
        }
    }
}

pub fn write_config(dir: &Path, name: &str, target: &Path, knobs: &Knobs) -> PathBuf {
    let mut out = String::new();
    let _ = writeln!(out, "target = {}", target.display());
    let _ = writeln!(out, "t_i_ms = {}", knobs.t_i_ms);
    let _ = writeln!(out, "i_r_ms = {}", knobs.i_r_ms);
    let _ = writeln!(out, "scheduler = {}", knobs.scheduler);
    let _ = writeln!(out, "sync = {}", if knobs.sync { "on" } else { "off" });
    let _ = writeln!(out, "reward = {}", knobs.reward);
    let _ = writeln!(out, "reset = {}", if knobs.reset { "on" } else { "off" });
    let _ = writeln!(out, "seed = {}", knobs.seed);
    let _ = writeln!(out, "stop = {}", knobs.stop);
    for idx in 0..knobs.fuzzers {
        let _ = writeln!(out, "[fuzzer.{idx}]\nkind = sim");
    }
    let path = dir.join(format!("{name}.conf"));
    std::fs::write(&path, out).unwrap();
    path
}
