//! Builds campaigns out of parsed configs and runs them, either purely in
//! memory (comparison sweeps) or against a campaign directory (`run`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fuzzmux_core::orchestrator::{CampaignError, CampaignReport, StopCondition};
use fuzzmux_core::pool::CandidateSeed;
use fuzzmux_core::rng::derive_seed;
use fuzzmux_core::runtime::{FuzzerKind, FuzzerHandle};
use fuzzmux_core::sim::{SimulatedFuzzer, SyntheticTarget};
use fuzzmux_core::{Campaign, ContentHash};

use crate::adapter::ExternalFuzzer;
use crate::config::{CampaignSpec, FuzzerSpec};
use crate::report::parse_report;
use crate::store::{CampaignStore, FileMirror};
use crate::target_file::{load_target, TargetFileError};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("config: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("target: {0}")]
    Target(#[from] TargetFileError),
    #[error("corpus {path}: {message}")]
    Corpus { path: String, message: String },
    #[error("store: {0}")]
    Store(#[from] crate::store::StoreError),
    #[error("adapter: {0}")]
    Adapter(fuzzmux_core::runtime::RuntimeError),
    #[error("campaign: {0}")]
    Campaign(#[from] CampaignError),
    #[error("{0}")]
    Invalid(String),
}

impl DriverError {
    /// Usage/config problems exit 2, campaign failures exit 1.
    pub fn is_usage(&self) -> bool {
        !matches!(self, DriverError::Campaign(_))
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rounds: Option<u64>,
    pub duration_min: Option<u64>,
    pub target: Option<PathBuf>,
}

pub fn apply_overrides(spec: &mut CampaignSpec, overrides: &Overrides) {
    if let Some(seed) = overrides.seed {
        spec.rng_seed = seed;
    }
    if let Some(rounds) = overrides.rounds {
        spec.stop = StopCondition::MaxRounds(rounds);
    }
    if let Some(minutes) = overrides.duration_min {
        spec.stop = StopCondition::DurationMs(minutes * 60_000);
    }
    if let Some(target) = &overrides.target {
        spec.target = Some(target.clone());
    }
}

/// Loads an initial-corpus manifest: a coverage report whose seed names are
/// payload paths relative to the manifest's directory.
pub fn load_corpus(path: &Path) -> Result<Vec<CandidateSeed>, DriverError> {
    let text = std::fs::read_to_string(path).map_err(|e| DriverError::Corpus {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let stanzas = parse_report(text.lines()).map_err(|e| DriverError::Corpus {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seeds = Vec::with_capacity(stanzas.len());
    for stanza in stanzas {
        let payload_path = base.join(&stanza.name);
        let payload = std::fs::read(&payload_path).map_err(|e| DriverError::Corpus {
            path: payload_path.display().to_string(),
            message: e.to_string(),
        })?;
        if ContentHash::of(&payload) != stanza.hash {
            return Err(DriverError::Corpus {
                path: payload_path.display().to_string(),
                message: "content hash does not match manifest".into(),
            });
        }
        seeds.push(CandidateSeed::new(payload, stanza.branches));
    }
    Ok(seeds)
}

/// Instantiates the roster and assembles a [`Campaign`].
///
/// `queue_root`: campaign directory whose `fuzzers/<idx>/queue/` paths back
/// the local pools. Without one, simulated fuzzers stay memory-only and
/// external fuzzers are refused.
pub fn build_campaign(
    spec: &CampaignSpec,
    queue_root: Option<&Path>,
) -> Result<(Campaign, Vec<String>), DriverError> {
    let target: Option<Arc<SyntheticTarget>> = match &spec.target {
        Some(path) if spec.fuzzers.iter().any(|f| !f.is_external()) => {
            Some(Arc::new(load_target(path)?))
        }
        _ => None,
    };

    let mut handles = Vec::with_capacity(spec.fuzzers.len());
    let mut names = Vec::with_capacity(spec.fuzzers.len());
    for (index, fuzzer) in spec.fuzzers.iter().enumerate() {
        names.push(fuzzer.name().to_string());
        let handle = match fuzzer {
            FuzzerSpec::Simulated { .. } => {
                let target = target.as_ref().expect("validated by config").clone();
                let sim =
                    SimulatedFuzzer::new(index, target, derive_seed(spec.rng_seed, index as u64));
                match queue_root {
                    Some(root) => FuzzerHandle::new(
                        index,
                        FuzzerKind::Simulated,
                        Box::new(FileMirror::new(sim, local_queue(root, index))),
                    ),
                    None => FuzzerHandle::new(index, FuzzerKind::Simulated, Box::new(sim)),
                }
            }
            FuzzerSpec::External { cmd, .. } => {
                let root = queue_root.ok_or_else(|| {
                    DriverError::Invalid(
                        "external fuzzers need a campaign directory (--out)".into(),
                    )
                })?;
                let external = ExternalFuzzer::spawn(index, cmd.clone(), local_queue(root, index))
                    .map_err(DriverError::Adapter)?;
                FuzzerHandle::new(index, FuzzerKind::External, Box::new(external))
            }
        };
        handles.push(handle);
    }

    let corpus = match &spec.corpus {
        Some(path) => load_corpus(path)?,
        None => Vec::new(),
    };

    let campaign = Campaign::new(spec.core_config(), handles, corpus)?;
    Ok((campaign, names))
}

fn local_queue(root: &Path, fuzzer: usize) -> PathBuf {
    root.join("fuzzers").join(fuzzer.to_string()).join("queue")
}

/// Runs a campaign against a directory: trace and coverage rows are flushed
/// per round, pool payloads land in `global_queue/`, and a summary is
/// written at the end. On a campaign error the partial artifacts remain.
pub fn run_to_dir(spec: &CampaignSpec, out_dir: &Path) -> Result<CampaignReport, DriverError> {
    let names: Vec<String> = spec.fuzzers.iter().map(|f| f.name().to_string()).collect();
    let mut store = CampaignStore::create(out_dir, spec.rng_seed, &names)?;
    let (mut campaign, _) = build_campaign(spec, Some(out_dir))?;
    store.persist_new_seeds(campaign.pool())?;

    let mut consecutive_aborts = 0u32;
    while !campaign.stopped() {
        let record = campaign.run_round()?;
        store.append_round(&record)?;
        store.persist_new_seeds(campaign.pool())?;
        debug_log!(
            "round {}: fuzzer {} reward {:.3} branches {}",
            record.round,
            record.selected,
            record.reward,
            record.total_branches
        );
        if record.duration_ms == 0 && record.cycles_run == 0 {
            consecutive_aborts += 1;
            if consecutive_aborts >= 8 {
                campaign.shutdown();
                return Err(CampaignError::Stalled {
                    round: campaign.completed_rounds(),
                }
                .into());
            }
        } else {
            consecutive_aborts = 0;
        }
    }

    let report = campaign.report();
    store.write_summary(&report, &names)?;
    campaign.shutdown();
    info_log!(
        "campaign done: {} rounds, {} branches",
        report.rounds.len(),
        report.final_branches
    );
    Ok(report)
}
