//! Text format for synthetic targets.
//!
//! ```text
//! # comment
//! [blocks]
//! 01                      # 1-16 lowercase hex digits per block id
//! 02
//! [branches]
//! 01 02                   # pred succ
//! [probs]
//! default 0.05            # fallback solve probability (0 when omitted)
//! * 01 02 0.5             # any fuzzer, this branch
//! 2 01 02 0.9             # fuzzer 2, this branch (wins over `*`)
//! [cycle_ms]
//! default 1000
//! 0 2500                  # fuzzer 0 takes 2.5 virtual seconds per cycle
//! [phases]
//! phase 100               # replacement probability table from round 100 on
//! default 0.0
//! 1 01 02 0.8
//! ```
//!
//! Entry blocks are the blocks that never appear as a branch successor.
//! `[probs]`, `[cycle_ms]` and `[phases]` are optional; a `phase` line opens
//! a fresh table that fully replaces the previous one and phases must be in
//! ascending round order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use fuzzmux_core::sim::{ProbMap, SyntheticTarget, TargetError};

#[derive(Debug, thiserror::Error)]
pub enum TargetFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid target: {0}")]
    Invalid(#[from] TargetError),
}

fn parse_err(line: usize, message: impl Into<String>) -> TargetFileError {
    TargetFileError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_block(token: &str, line: usize) -> Result<u64, TargetFileError> {
    if token.is_empty() || token.len() > 16 || token.chars().any(|c| c.is_ascii_uppercase()) {
        return Err(parse_err(line, format!("bad block id {token:?}")));
    }
    u64::from_str_radix(token, 16).map_err(|_| parse_err(line, format!("bad block id {token:?}")))
}

fn parse_prob(token: &str, line: usize) -> Result<f64, TargetFileError> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("bad probability {token:?}")))
}

#[derive(Debug, Default, Clone, Copy, PartialEq)]
enum Section {
    #[default]
    Preamble,
    Blocks,
    Branches,
    Probs,
    CycleMs,
    Phases,
}

/// Parses the textual form into a validated [`SyntheticTarget`].
pub fn parse_target(text: &str) -> Result<SyntheticTarget, TargetFileError> {
    let mut section = Section::Preamble;
    let mut blocks: Vec<u64> = Vec::new();
    let mut branches: Vec<(u64, u64)> = Vec::new();
    let mut base = ProbMap::default();
    let mut phases: Vec<(u64, ProbMap)> = Vec::new();
    let mut cycle_ms: BTreeMap<usize, u64> = BTreeMap::new();
    let mut default_cycle_ms = 1_000u64;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed {
            "[blocks]" => {
                section = Section::Blocks;
                continue;
            }
            "[branches]" => {
                section = Section::Branches;
                continue;
            }
            "[probs]" => {
                section = Section::Probs;
                continue;
            }
            "[cycle_ms]" => {
                section = Section::CycleMs;
                continue;
            }
            "[phases]" => {
                section = Section::Phases;
                continue;
            }
            _ if trimmed.starts_with('[') => {
                return Err(parse_err(line, format!("unknown section {trimmed:?}")));
            }
            _ => {}
        }

        let tokens: Vec<&str> = trimmed.split_ascii_whitespace().collect();
        match section {
            Section::Preamble => {
                return Err(parse_err(line, "content before first section header"));
            }
            Section::Blocks => {
                if tokens.len() != 1 {
                    return Err(parse_err(line, "expected one block id per line"));
                }
                blocks.push(parse_block(tokens[0], line)?);
            }
            Section::Branches => {
                if tokens.len() != 2 {
                    return Err(parse_err(line, "expected `pred succ`"));
                }
                branches.push((parse_block(tokens[0], line)?, parse_block(tokens[1], line)?));
            }
            Section::Probs => {
                parse_prob_line(&tokens, line, &mut base)?;
            }
            Section::CycleMs => match tokens.as_slice() {
                ["default", ms] => {
                    default_cycle_ms = ms
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad duration {ms:?}")))?;
                }
                [fuzzer, ms] => {
                    let idx: usize = fuzzer
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad fuzzer index {fuzzer:?}")))?;
                    let ms: u64 = ms
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad duration {ms:?}")))?;
                    cycle_ms.insert(idx, ms);
                }
                _ => return Err(parse_err(line, "expected `<fuzzer>|default <ms>`")),
            },
            Section::Phases => {
                if tokens.as_slice().first() == Some(&"phase") {
                    if tokens.len() != 2 {
                        return Err(parse_err(line, "expected `phase <round>`"));
                    }
                    let round: u64 = tokens[1]
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad round {:?}", tokens[1])))?;
                    phases.push((round, ProbMap::default()));
                } else {
                    let map = match phases.last_mut() {
                        Some((_, map)) => map,
                        None => return Err(parse_err(line, "probability line before `phase`")),
                    };
                    parse_prob_line(&tokens, line, map)?;
                }
            }
        }
    }

    Ok(SyntheticTarget::new(
        blocks,
        branches,
        base,
        phases,
        cycle_ms,
        default_cycle_ms,
    )?)
}

fn parse_prob_line(tokens: &[&str], line: usize, map: &mut ProbMap) -> Result<(), TargetFileError> {
    match tokens {
        ["default", p] => {
            map.default = parse_prob(p, line)?;
            Ok(())
        }
        ["*", pred, succ, p] => {
            let branch = fuzzmux_core::Branch::new(
                parse_block(pred, line)?,
                parse_block(succ, line)?,
            );
            map.any_fuzzer.insert(branch, parse_prob(p, line)?);
            Ok(())
        }
        [fuzzer, pred, succ, p] => {
            let idx: usize = fuzzer
                .parse()
                .map_err(|_| parse_err(line, format!("bad fuzzer index {fuzzer:?}")))?;
            let branch = fuzzmux_core::Branch::new(
                parse_block(pred, line)?,
                parse_block(succ, line)?,
            );
            map.exact.insert((idx, branch), parse_prob(p, line)?);
            Ok(())
        }
        _ => Err(parse_err(
            line,
            "expected `default <p>`, `* <pred> <succ> <p>` or `<fuzzer> <pred> <succ> <p>`",
        )),
    }
}

pub fn load_target(path: &Path) -> Result<SyntheticTarget, TargetFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TargetFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_target(&text)
}

/// Renders a probability table in file syntax.
fn emit_prob_map(out: &mut String, map: &ProbMap) {
    let _ = writeln!(out, "default {}", map.default);
    for (branch, p) in &map.any_fuzzer {
        let _ = writeln!(out, "* {} {} {}", branch.pred, branch.succ, p);
    }
    for ((fuzzer, branch), p) in &map.exact {
        let _ = writeln!(out, "{} {} {} {}", fuzzer, branch.pred, branch.succ, p);
    }
}

/// Renders a target back into the file format; used by the target
/// generators in the test suites.
pub fn emit_target(target: &SyntheticTarget) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[blocks]");
    for block in target.blocks() {
        let _ = writeln!(out, "{block}");
    }
    let _ = writeln!(out, "[branches]");
    for branch in target.branches() {
        let _ = writeln!(out, "{} {}", branch.pred, branch.succ);
    }
    let _ = writeln!(out, "[probs]");
    emit_prob_map(&mut out, target.probs_at(0));
    let _ = writeln!(out, "[cycle_ms]");
    let _ = writeln!(out, "default {}", target.default_cycle_ms());
    for (fuzzer, ms) in target.cycle_overrides() {
        let _ = writeln!(out, "{fuzzer} {ms}");
    }
    let phases = target.phases();
    if !phases.is_empty() {
        let _ = writeln!(out, "[phases]");
        for (round, map) in phases {
            let _ = writeln!(out, "phase {round}");
            emit_prob_map(&mut out, map);
        }
    }
    out
}
