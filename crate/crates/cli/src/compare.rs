//! Comparison sweeps: run several strategy configs over a target suite for
//! multiple seeded trials, score them relative to each other and emit the
//! aggregate artifacts.
//!
//! Outputs under the sweep directory:
//! `results.csv` (one row per campaign), `scores.txt` (score table, medians
//! and coverage-enhancement lines) and `curves/<strategy>__<target>.csv`
//! (per-round median coverage).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use fuzzmux_core::score::{compute_scores, lower_median, CoverageMatrix, ScoreTable};

use crate::config::CampaignSpec;
use crate::driver::{apply_overrides, build_campaign, DriverError, Overrides};

#[derive(Clone, Debug)]
pub struct CompareOptions {
    /// Strategy configs; the first one is the reference for enhancement
    /// metrics.
    pub configs: Vec<(String, CampaignSpec)>,
    /// Target files to run every strategy on. Empty means each config uses
    /// its own `target =` entry as a single-target suite.
    pub targets: Vec<PathBuf>,
    pub trials: u64,
    /// Base RNG seed; trial i runs with `base + i`. Falls back to each
    /// config's own seed.
    pub base_seed: Option<u64>,
    pub jobs: usize,
}

/// Outcome of a single campaign in the sweep.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub strategy: String,
    pub target: String,
    pub trial: u64,
    pub seed: u64,
    /// None when the campaign aborted; the cell is marked invalid.
    pub final_branches: Option<u64>,
    /// Branch count after each round, for the median curves.
    pub curve: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct CompareOutcome {
    pub table: ScoreTable,
    pub outcomes: Vec<TrialOutcome>,
    pub rendered: String,
}

fn target_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Work list entry: indices into strategies/targets plus the trial number.
struct Job {
    strategy: usize,
    target: usize,
    trial: u64,
}

pub fn run_compare(
    options: &CompareOptions,
    work_dir: Option<&Path>,
) -> Result<CompareOutcome, DriverError> {
    if options.configs.len() < 2 {
        return Err(DriverError::Invalid(
            "compare needs at least two configs".into(),
        ));
    }
    if options.trials == 0 {
        return Err(DriverError::Invalid("compare needs at least one trial".into()));
    }

    // Resolve the target suite per strategy.
    let suite: Vec<(String, Option<PathBuf>)> = if options.targets.is_empty() {
        let own: Vec<Option<&PathBuf>> =
            options.configs.iter().map(|(_, s)| s.target.as_ref()).collect();
        let first = own[0].ok_or_else(|| {
            DriverError::Invalid("configs have no target and none were passed".into())
        })?;
        if own.iter().any(|t| t != &Some(first)) {
            return Err(DriverError::Invalid(
                "configs name different targets; pass an explicit --targets suite".into(),
            ));
        }
        vec![(target_label(first), None)]
    } else {
        options
            .targets
            .iter()
            .map(|p| (target_label(p), Some(p.clone())))
            .collect()
    };

    let mut jobs = Vec::new();
    for strategy in 0..options.configs.len() {
        for target in 0..suite.len() {
            for trial in 0..options.trials {
                jobs.push(Job {
                    strategy,
                    target,
                    trial,
                });
            }
        }
    }

    let results: Mutex<Vec<TrialOutcome>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let next: Mutex<usize> = Mutex::new(0);
    let worker_count = options.jobs.max(1).min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let job = {
                    let mut cursor = next.lock().expect("job cursor");
                    if *cursor >= jobs.len() {
                        break;
                    }
                    let job = &jobs[*cursor];
                    *cursor += 1;
                    job
                };
                let (name, spec) = &options.configs[job.strategy];
                let (target_name, target_path) = &suite[job.target];
                let mut spec = spec.clone();
                let overrides = Overrides {
                    seed: Some(options.base_seed.unwrap_or(spec.rng_seed) + job.trial),
                    target: target_path.clone(),
                    ..Overrides::default()
                };
                apply_overrides(&mut spec, &overrides);

                let queue_root = work_dir.map(|dir| {
                    dir.join(format!("{}__{}__{}", name, target_name, job.trial))
                });
                let outcome = run_single(&spec, queue_root.as_deref());
                let (final_branches, curve) = match outcome {
                    Ok((branches, curve)) => (Some(branches), curve),
                    Err(e) => {
                        warn_log!(
                            "campaign {name}/{target_name}/trial {} aborted: {e}",
                            job.trial
                        );
                        (None, Vec::new())
                    }
                };
                results.lock().expect("results").push(TrialOutcome {
                    strategy: name.clone(),
                    target: target_name.clone(),
                    trial: job.trial,
                    seed: spec.rng_seed,
                    final_branches,
                    curve,
                });
            });
        }
    });

    let mut outcomes = results.into_inner().expect("results");
    let strategy_names: Vec<String> =
        options.configs.iter().map(|(n, _)| n.clone()).collect();
    let target_names: Vec<String> = suite.iter().map(|(n, _)| n.clone()).collect();
    // Command-line strategy order, so results.csv and every rendering keep
    // the roster order regardless of worker scheduling.
    outcomes.sort_by_key(|o| {
        (
            strategy_names.iter().position(|n| n == &o.strategy),
            target_names.iter().position(|n| n == &o.target),
            o.trial,
        )
    });

    let mut trials_matrix =
        vec![vec![Vec::new(); target_names.len()]; strategy_names.len()];
    for outcome in &outcomes {
        if let Some(branches) = outcome.final_branches {
            let s = strategy_names
                .iter()
                .position(|n| n == &outcome.strategy)
                .expect("known strategy");
            let t = target_names
                .iter()
                .position(|n| n == &outcome.target)
                .expect("known target");
            trials_matrix[s][t].push(branches);
        }
    }
    // An all-abort cell still needs a value to score against; it counts as
    // zero coverage and is flagged in the rendering.
    let mut invalid_cells = Vec::new();
    for (s, row) in trials_matrix.iter_mut().enumerate() {
        for (t, cell) in row.iter_mut().enumerate() {
            if cell.is_empty() {
                invalid_cells.push((s, t));
                cell.push(0);
            }
        }
    }

    let matrix = CoverageMatrix {
        strategies: strategy_names.clone(),
        targets: target_names.clone(),
        trials: trials_matrix,
    };
    let table = compute_scores(&matrix).map_err(|e| DriverError::Invalid(e.to_string()))?;
    let rendered = render_table(&table, &invalid_cells);

    Ok(CompareOutcome {
        table,
        outcomes,
        rendered,
    })
}

fn run_single(
    spec: &CampaignSpec,
    queue_root: Option<&Path>,
) -> Result<(u64, Vec<u64>), DriverError> {
    if let Some(root) = queue_root {
        std::fs::create_dir_all(root).map_err(|e| DriverError::Invalid(e.to_string()))?;
    }
    let (mut campaign, _) = build_campaign(spec, queue_root)?;
    let report = campaign.run_to_end()?;
    campaign.shutdown();
    let curve = report.rounds.iter().map(|r| r.total_branches).collect();
    Ok((report.final_branches, curve))
}

/// Renders scores, medians and the coverage-enhancement comparison of the
/// first strategy against each other one. The enhancement is reported both
/// ways the aggregate can be read: as the mean of per-target median ratios
/// and as the ratio of summed medians.
pub fn render_table(table: &ScoreTable, invalid_cells: &[(usize, usize)]) -> String {
    let mut out = String::new();
    let name_width = table
        .strategies
        .iter()
        .map(|s| s.len())
        .max()
        .unwrap_or(8)
        .max(8);

    let _ = writeln!(out, "scores (100 = best median coverage on the target)");
    let _ = write!(out, "{:<name_width$}", "strategy");
    for target in &table.targets {
        let _ = write!(out, "  {target:>12}");
    }
    let _ = writeln!(out, "  {:>8}", "average");
    for (s, strategy) in table.strategies.iter().enumerate() {
        let _ = write!(out, "{strategy:<name_width$}");
        for t in 0..table.targets.len() {
            if invalid_cells.contains(&(s, t)) {
                let _ = write!(out, "  {:>12}", "-");
            } else {
                let _ = write!(out, "  {:>12.1}", table.scores[s][t]);
            }
        }
        let _ = writeln!(out, "  {:>8.1}", table.average[s]);
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "median final coverage (branches)");
    let _ = write!(out, "{:<name_width$}", "strategy");
    for target in &table.targets {
        let _ = write!(out, "  {target:>12}");
    }
    let _ = writeln!(out);
    for (s, strategy) in table.strategies.iter().enumerate() {
        let _ = write!(out, "{strategy:<name_width$}");
        for t in 0..table.targets.len() {
            if invalid_cells.contains(&(s, t)) {
                let _ = write!(out, "  {:>12}", "-");
            } else {
                let _ = write!(out, "  {:>12}", table.medians[s][t]);
            }
        }
        let _ = writeln!(out);
    }

    if table.strategies.len() >= 2 {
        let _ = writeln!(out);
        let reference = &table.strategies[0];
        for s in 1..table.strategies.len() {
            let other = &table.strategies[s];
            let mut ratios = Vec::new();
            let mut ref_sum = 0u64;
            let mut other_sum = 0u64;
            for t in 0..table.targets.len() {
                let r = table.medians[0][t];
                let o = table.medians[s][t];
                ref_sum += r;
                other_sum += o;
                if o > 0 {
                    ratios.push(r as f64 / o as f64);
                }
            }
            let mean_of_ratios = if ratios.is_empty() {
                None
            } else {
                Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
            };
            let ratio_of_sums = if other_sum > 0 {
                Some(ref_sum as f64 / other_sum as f64)
            } else {
                None
            };
            let fmt = |v: Option<f64>| match v {
                Some(v) => format!("{:+.1}%", (v - 1.0) * 100.0),
                None => "n/a".to_string(),
            };
            let _ = writeln!(
                out,
                "coverage enhancement of {reference} over {other}: \
                 mean of per-target ratios {}, ratio of summed medians {}",
                fmt(mean_of_ratios),
                fmt(ratio_of_sums)
            );
        }
    }
    out
}

/// Writes `results.csv`, `scores.txt` and the per-cell median curves.
pub fn write_artifacts(out_dir: &Path, outcome: &CompareOutcome) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("strategy,target,trial,seed,final_branches,status\n");
    for trial in &outcome.outcomes {
        let (value, status) = match trial.final_branches {
            Some(v) => (v.to_string(), "ok"),
            None => (String::new(), "abort"),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            trial.strategy, trial.target, trial.trial, trial.seed, value, status
        );
    }
    std::fs::write(out_dir.join("results.csv"), csv)?;
    std::fs::write(out_dir.join("scores.txt"), &outcome.rendered)?;

    let curves_dir = out_dir.join("curves");
    std::fs::create_dir_all(&curves_dir)?;
    let mut grouped: BTreeMap<(String, String), Vec<&TrialOutcome>> = BTreeMap::new();
    for trial in &outcome.outcomes {
        grouped
            .entry((trial.strategy.clone(), trial.target.clone()))
            .or_default()
            .push(trial);
    }
    for ((strategy, target), trials) in grouped {
        let longest = trials.iter().map(|t| t.curve.len()).max().unwrap_or(0);
        let mut text = String::from("round,median_branches\n");
        for round in 0..longest {
            let at_round: Vec<u64> = trials
                .iter()
                .filter_map(|t| t.curve.get(round).copied())
                .collect();
            if let Some(median) = lower_median(&at_round) {
                let _ = writeln!(text, "{},{}", round + 1, median);
            }
        }
        std::fs::write(curves_dir.join(format!("{strategy}__{target}.csv")), text)?;
    }
    Ok(())
}

/// Rebuilds a score table from a previously written `results.csv`.
pub fn score_from_results(dir: &Path) -> Result<(ScoreTable, String), DriverError> {
    let path = dir.join("results.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| DriverError::Invalid(format!(
        "cannot read {}: {e}",
        path.display()
    )))?;
    let mut strategies: Vec<String> = Vec::new();
    let mut targets: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), Vec<u64>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(DriverError::Invalid(format!(
                "{}: line {} is not a results row",
                path.display(),
                idx + 1
            )));
        }
        let strategy = fields[0].to_string();
        let target = fields[1].to_string();
        let s = match strategies.iter().position(|s| s == &strategy) {
            Some(pos) => pos,
            None => {
                strategies.push(strategy);
                strategies.len() - 1
            }
        };
        let t = match targets.iter().position(|t| t == &target) {
            Some(pos) => pos,
            None => {
                targets.push(target);
                targets.len() - 1
            }
        };
        if fields[5] == "ok" {
            let branches: u64 = fields[4].parse().map_err(|_| {
                DriverError::Invalid(format!(
                    "{}: line {} has a bad branch count",
                    path.display(),
                    idx + 1
                ))
            })?;
            cells.entry((s, t)).or_default().push(branches);
        }
    }
    if strategies.is_empty() {
        return Err(DriverError::Invalid(format!(
            "{} holds no results",
            path.display()
        )));
    }

    let mut invalid = Vec::new();
    let mut trials = vec![vec![Vec::new(); targets.len()]; strategies.len()];
    for (s, row) in trials.iter_mut().enumerate() {
        for (t, cell) in row.iter_mut().enumerate() {
            match cells.remove(&(s, t)) {
                Some(values) => *cell = values,
                None => {
                    invalid.push((s, t));
                    *cell = vec![0];
                }
            }
        }
    }
    let table = compute_scores(&CoverageMatrix {
        strategies,
        targets,
        trials,
    })
    .map_err(|e| DriverError::Invalid(e.to_string()))?;
    let rendered = render_table(&table, &invalid);
    Ok((table, rendered))
}
