//! Relative scoring of strategies across targets, benchmark-report style:
//! a strategy's score on a target is its median final coverage divided by
//! the best median any strategy reached there, times 100.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Final branch coverage of every (strategy, target, trial) campaign.
#[derive(Clone, Debug, Default)]
pub struct CoverageMatrix {
    pub strategies: Vec<String>,
    pub targets: Vec<String>,
    /// `trials[strategy][target]` holds one final coverage value per trial.
    pub trials: Vec<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug)]
pub struct ScoreTable {
    pub strategies: Vec<String>,
    pub targets: Vec<String>,
    /// `medians[strategy][target]`, lower median over trials.
    pub medians: Vec<Vec<u64>>,
    /// `scores[strategy][target]` in [0, 100].
    pub scores: Vec<Vec<f64>>,
    /// Mean score over targets, per strategy.
    pub average: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreError {
    EmptyMatrix,
    MissingTrials,
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::EmptyMatrix => write!(f, "coverage matrix is empty"),
            ScoreError::MissingTrials => write!(f, "a (strategy, target) cell has no trials"),
        }
    }
}

impl core::error::Error for ScoreError {}

/// Lower median: the element at index `(n - 1) / 2` of the sorted values,
/// so the result is always an observed value even for even counts.
pub fn lower_median(values: &[u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<u64> = values.to_vec();
    sorted.sort_unstable();
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Computes per-target scores and per-strategy averages. Strategies tied at
/// a target's maximum median all score 100 there; a target where every
/// strategy found nothing counts as an all-way tie.
pub fn compute_scores(matrix: &CoverageMatrix) -> Result<ScoreTable, ScoreError> {
    if matrix.strategies.is_empty() || matrix.targets.is_empty() {
        return Err(ScoreError::EmptyMatrix);
    }
    let mut medians = Vec::with_capacity(matrix.strategies.len());
    for per_target in &matrix.trials {
        let mut row = Vec::with_capacity(matrix.targets.len());
        for trials in per_target {
            row.push(lower_median(trials).ok_or(ScoreError::MissingTrials)?);
        }
        if row.len() != matrix.targets.len() {
            return Err(ScoreError::MissingTrials);
        }
        medians.push(row);
    }

    let mut scores = alloc::vec![alloc::vec![0.0; matrix.targets.len()]; matrix.strategies.len()];
    for target in 0..matrix.targets.len() {
        let best = medians.iter().map(|row| row[target]).max().unwrap_or(0);
        for strategy in 0..matrix.strategies.len() {
            scores[strategy][target] = if best == 0 {
                100.0
            } else {
                100.0 * medians[strategy][target] as f64 / best as f64
            };
        }
    }

    let average = scores
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();

    Ok(ScoreTable {
        strategies: matrix.strategies.clone(),
        targets: matrix.targets.clone(),
        medians,
        scores,
        average,
    })
}
