//! Campaign config files: flat `key = value` pairs with `[fuzzer.N]`
//! sections.
//!
//! ```text
//! # global knobs (defaults in parentheses)
//! target = targets/demo.txt     # synthetic target, needed for sim fuzzers
//! corpus = corpus/manifest.txt  # optional initial-corpus report
//! t_i_ms = 120000               # per-round budget (120000)
//! i_r_ms = 7200000              # arm reset interval (7200000)
//! scheduler = ts                # ts | random | greedy | round_robin (ts)
//! sync = on                     # on | off (on)
//! reward = interval             # interval | naive (interval)
//! reset = on                    # on | off (on)
//! seed = 42                     # campaign RNG seed (0)
//! stop = rounds 500             # rounds N | duration_ms N | coverage N
//!
//! [fuzzer.0]
//! kind = sim
//! name = alpha                  # optional label
//!
//! [fuzzer.1]
//! kind = external
//! cmd = ./my-adapter --flag     # whitespace-split command line
//! ```
//!
//! Fuzzer sections must be numbered contiguously from 0. Paths are resolved
//! relative to the config file's directory.

use std::path::{Path, PathBuf};

use fuzzmux_core::orchestrator::{RewardMode, Scheduler, StopCondition};

#[derive(Clone, Debug, PartialEq)]
pub enum FuzzerSpec {
    Simulated { name: String },
    External { name: String, cmd: Vec<String> },
}

impl FuzzerSpec {
    pub fn name(&self) -> &str {
        match self {
            FuzzerSpec::Simulated { name } => name,
            FuzzerSpec::External { name, .. } => name,
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self, FuzzerSpec::External { .. })
    }
}

/// A fully parsed config, paths resolved.
#[derive(Clone, Debug)]
pub struct CampaignSpec {
    pub target: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub t_i_ms: u64,
    pub i_r_ms: u64,
    pub scheduler: Scheduler,
    pub sync_enabled: bool,
    pub reward_mode: RewardMode,
    pub reset_enabled: bool,
    pub rng_seed: u64,
    pub stop: StopCondition,
    pub fuzzers: Vec<FuzzerSpec>,
}

impl CampaignSpec {
    pub fn core_config(&self) -> fuzzmux_core::CampaignConfig {
        fuzzmux_core::CampaignConfig {
            t_i_ms: self.t_i_ms,
            i_r_ms: self.i_r_ms,
            reset_enabled: self.reset_enabled,
            stop: self.stop,
            rng_seed: self.rng_seed,
            scheduler: self.scheduler,
            sync_enabled: self.sync_enabled,
            reward_mode: self.reward_mode,
        }
    }

    pub fn has_external(&self) -> bool {
        self.fuzzers.iter().any(|f| f.is_external())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Semantic(String),
}

fn perr(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_switch(value: &str, line: usize) -> Result<bool, ConfigError> {
    match value {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(perr(line, format!("expected on/off, got {value:?}"))),
    }
}

#[derive(Default)]
struct FuzzerDraft {
    kind: Option<String>,
    name: Option<String>,
    cmd: Option<Vec<String>>,
}

/// Parses config text; `base_dir` anchors relative paths.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<CampaignSpec, ConfigError> {
    let mut spec = CampaignSpec {
        target: None,
        corpus: None,
        t_i_ms: 120_000,
        i_r_ms: 7_200_000,
        scheduler: Scheduler::Ts,
        sync_enabled: true,
        reward_mode: RewardMode::Interval,
        reset_enabled: true,
        rng_seed: 0,
        stop: StopCondition::MaxRounds(100),
        fuzzers: Vec::new(),
    };
    let mut drafts: Vec<(usize, FuzzerDraft)> = Vec::new();
    let mut in_fuzzer: Option<usize> = None;

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
        if let Some(rest) = trimmed.strip_prefix("[fuzzer.") {
            let index: usize = rest
                .strip_suffix(']')
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| perr(line, format!("bad fuzzer section {trimmed:?}")))?;
            drafts.push((index, FuzzerDraft::default()));
            in_fuzzer = Some(drafts.len() - 1);
            continue;
        }
        if trimmed.starts_with('[') {
            return Err(perr(line, format!("unknown section {trimmed:?}")));
        }

        let (key, value) = trimmed
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| perr(line, format!("expected `key = value`, got {trimmed:?}")))?;
        if value.is_empty() {
            return Err(perr(line, format!("empty value for {key:?}")));
        }

        if let Some(slot) = in_fuzzer {
            let draft = &mut drafts[slot].1;
            match key {
                "kind" => draft.kind = Some(value.to_string()),
                "name" => draft.name = Some(value.to_string()),
                "cmd" => {
                    draft.cmd = Some(value.split_ascii_whitespace().map(String::from).collect())
                }
                _ => return Err(perr(line, format!("unknown fuzzer key {key:?}"))),
            }
            continue;
        }

        match key {
            "target" => spec.target = Some(base_dir.join(value)),
            "corpus" => spec.corpus = Some(base_dir.join(value)),
            "t_i_ms" => {
                spec.t_i_ms = value
                    .parse()
                    .map_err(|_| perr(line, format!("bad t_i_ms {value:?}")))?
            }
            "i_r_ms" => {
                spec.i_r_ms = value
                    .parse()
                    .map_err(|_| perr(line, format!("bad i_r_ms {value:?}")))?
            }
            "seed" => {
                spec.rng_seed = value
                    .parse()
                    .map_err(|_| perr(line, format!("bad seed {value:?}")))?
            }
            "scheduler" => {
                spec.scheduler = match value {
                    "ts" => Scheduler::Ts,
                    "random" => Scheduler::Random,
                    "greedy" => Scheduler::Greedy,
                    "round_robin" => Scheduler::RoundRobin,
                    _ => return Err(perr(line, format!("unknown scheduler {value:?}"))),
                }
            }
            "sync" => spec.sync_enabled = parse_switch(value, line)?,
            "reset" => spec.reset_enabled = parse_switch(value, line)?,
            "reward" => {
                spec.reward_mode = match value {
                    "interval" => RewardMode::Interval,
                    "naive" => RewardMode::Naive,
                    _ => return Err(perr(line, format!("unknown reward mode {value:?}"))),
                }
            }
            "stop" => {
                let (what, amount) = value
                    .split_once(' ')
                    .map(|(w, a)| (w.trim(), a.trim()))
                    .ok_or_else(|| perr(line, format!("bad stop condition {value:?}")))?;
                let amount: u64 = amount
                    .parse()
                    .map_err(|_| perr(line, format!("bad stop amount {amount:?}")))?;
                spec.stop = match what {
                    "rounds" => StopCondition::MaxRounds(amount),
                    "duration_ms" => StopCondition::DurationMs(amount),
                    "coverage" => StopCondition::TargetCoverage(amount),
                    _ => return Err(perr(line, format!("unknown stop kind {what:?}"))),
                };
            }
            _ => return Err(perr(line, format!("unknown key {key:?}"))),
        }
    }

    drafts.sort_by_key(|(index, _)| *index);
    for (pos, (index, draft)) in drafts.into_iter().enumerate() {
        if index != pos {
            return Err(ConfigError::Semantic(format!(
                "fuzzer sections must be contiguous from 0; found [fuzzer.{index}] at position {pos}"
            )));
        }
        let name = draft.name.unwrap_or_else(|| format!("fuzzer-{index}"));
        let kind = draft
            .kind
            .ok_or_else(|| ConfigError::Semantic(format!("[fuzzer.{index}] is missing `kind`")))?;
        let fuzzer = match kind.as_str() {
            "sim" | "simulated" => FuzzerSpec::Simulated { name },
            "external" => {
                let cmd = draft.cmd.ok_or_else(|| {
                    ConfigError::Semantic(format!("[fuzzer.{index}] is external but has no `cmd`"))
                })?;
                if cmd.is_empty() {
                    return Err(ConfigError::Semantic(format!(
                        "[fuzzer.{index}] has an empty `cmd`"
                    )));
                }
                FuzzerSpec::External { name, cmd }
            }
            _ => {
                return Err(ConfigError::Semantic(format!(
                    "[fuzzer.{index}] has unknown kind {kind:?}"
                )))
            }
        };
        spec.fuzzers.push(fuzzer);
    }

    if spec.fuzzers.is_empty() {
        return Err(ConfigError::Semantic("config declares no fuzzers".into()));
    }
    if spec.t_i_ms == 0 || spec.i_r_ms == 0 {
        return Err(ConfigError::Semantic(
            "t_i_ms and i_r_ms must be positive".into(),
        ));
    }
    let needs_target = spec.fuzzers.iter().any(|f| !f.is_external());
    if needs_target && spec.target.is_none() {
        return Err(ConfigError::Semantic(
            "simulated fuzzers need a `target =` entry".into(),
        ));
    }
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<CampaignSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}
