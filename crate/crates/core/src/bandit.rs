//! Thompson-sampling bandit over the fuzzer roster.
//!
//! Each arm carries a Beta(alpha, beta) weight distribution. Selection draws
//! one sample per arm and takes the argmax; the continuous round reward is
//! first discretized through a Bernoulli draw so the standard Beta-Bernoulli
//! update applies. A full-state reset returns every arm to Beta(1, 1) to
//! track nonstationary fuzzer effectiveness.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::Rng;

/// Beta weight-distribution parameters of one arm. Both start at 1 and each
/// update adds exactly 1 across the pair, so `alpha + beta - 2` counts the
/// updates since the last reset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmState {
    pub alpha: f64,
    pub beta: f64,
}

impl ArmState {
    pub fn uniform() -> Self {
        ArmState { alpha: 1.0, beta: 1.0 }
    }

    pub fn posterior_mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BanditError {
    InvalidArm { arm: usize, arms: usize },
    RewardOutOfRange(f64),
}

impl fmt::Display for BanditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BanditError::InvalidArm { arm, arms } => {
                write!(f, "arm index {arm} out of range for {arms} arms")
            }
            BanditError::RewardOutOfRange(r) => write!(f, "reward {r} outside [0, 1]"),
        }
    }
}

impl core::error::Error for BanditError {}

/// Argmax over sampled weights, breaking exact ties uniformly at random so
/// no roster position is systematically favored.
pub fn argmax(samples: &[f64], rng: &mut Rng) -> usize {
    debug_assert!(!samples.is_empty());
    let mut best = samples[0];
    let mut tied: Vec<usize> = vec![0];
    for (i, &v) in samples.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            tied.clear();
            tied.push(i);
        } else if v == best {
            tied.push(i);
        }
    }
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.next_below(tied.len() as u64) as usize]
    }
}

/// Bernoulli discretization of a continuous reward in `[0, 1]`. Always
/// consumes one draw, so the stream layout of a round does not depend on the
/// reward value.
pub fn discretize(r: f64, rng: &mut Rng) -> Result<bool, BanditError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(BanditError::RewardOutOfRange(r));
    }
    Ok(rng.next_bernoulli(r))
}

/// The arms plus the generator every stochastic decision of a campaign draws
/// from. The arm count is fixed for the lifetime of a campaign.
#[derive(Clone, Debug)]
pub struct BanditState {
    arms: Vec<ArmState>,
    rng: Rng,
}

impl BanditState {
    pub fn new(num_arms: usize, seed: u64) -> Self {
        assert!(num_arms >= 1, "bandit needs at least one arm");
        BanditState {
            arms: vec![ArmState::uniform(); num_arms],
            rng: Rng::new(seed),
        }
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn rng_mut(&mut self) -> &mut Rng {
        &mut self.rng
    }

    /// Thompson selection: one Beta sample per arm in roster order, then
    /// argmax with uniform tie-breaking.
    pub fn select(&mut self) -> usize {
        let samples: Vec<f64> = self
            .arms
            .iter()
            .map(|a| self.rng.next_beta(a.alpha, a.beta))
            .collect();
        argmax(&samples, &mut self.rng)
    }

    /// Applies the Beta-Bernoulli update to the selected arm only:
    /// alpha += r_hat, beta += 1 - r_hat.
    pub fn update(&mut self, arm: usize, r_hat: bool) -> Result<(), BanditError> {
        let arms = self.arms.len();
        let state = self
            .arms
            .get_mut(arm)
            .ok_or(BanditError::InvalidArm { arm, arms })?;
        if r_hat {
            state.alpha += 1.0;
        } else {
            state.beta += 1.0;
        }
        Ok(())
    }

    /// Returns every arm to Beta(1, 1). The generator keeps its state.
    pub fn reset(&mut self) {
        for arm in &mut self.arms {
            *arm = ArmState::uniform();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::{any, prop_assert_eq, proptest};

    #[test]
    fn single_arm_is_always_selected() {
        let mut bandit = BanditState::new(1, 99);
        for _ in 0..50 {
            assert_eq!(bandit.select(), 0);
        }
    }

    #[test]
    fn argmax_picks_highest_sample() {
        // Appendix worked example: samples 0.57, 0.32, 0.81 select arm 2.
        let mut rng = Rng::new(0);
        assert_eq!(argmax(&[0.57, 0.32, 0.81], &mut rng), 2);
    }

    #[test]
    fn select_golden_trace() {
        // Frozen from the pinned sampler at seed 1234 over arms
        // (2,2), (3,4), (5,4). Any change to the RNG or Beta draw order
        // must show up here.
        let mut bandit = BanditState::new(3, 1234);
        bandit.arms = alloc::vec![
            ArmState { alpha: 2.0, beta: 2.0 },
            ArmState { alpha: 3.0, beta: 4.0 },
            ArmState { alpha: 5.0, beta: 4.0 },
        ];
        let picks: Vec<usize> = (0..8).map(|_| bandit.select()).collect();
        assert_eq!(picks, alloc::vec![0, 2, 0, 1, 1, 1, 2, 0]);
    }

    #[test]
    fn success_update_matches_worked_example() {
        let mut bandit = BanditState::new(3, 0);
        bandit.arms[2] = ArmState { alpha: 5.0, beta: 4.0 };
        bandit.update(2, true).unwrap();
        assert_eq!(bandit.arms[2], ArmState { alpha: 6.0, beta: 4.0 });
    }

    #[test]
    fn failure_update_from_prior() {
        let mut bandit = BanditState::new(1, 0);
        bandit.update(0, false).unwrap();
        assert_eq!(bandit.arms[0], ArmState { alpha: 1.0, beta: 2.0 });
    }

    #[test]
    fn success_update_direct_substitution() {
        let mut bandit = BanditState::new(1, 0);
        bandit.arms[0] = ArmState { alpha: 3.0, beta: 4.0 };
        bandit.update(0, true).unwrap();
        assert_eq!(bandit.arms[0], ArmState { alpha: 4.0, beta: 4.0 });
    }

    #[test]
    fn update_rejects_bad_index() {
        let mut bandit = BanditState::new(2, 0);
        assert_eq!(
            bandit.update(2, true),
            Err(BanditError::InvalidArm { arm: 2, arms: 2 })
        );
    }

    #[test]
    fn reset_returns_all_arms_to_uniform() {
        let mut bandit = BanditState::new(2, 0);
        bandit.arms[0] = ArmState { alpha: 6.0, beta: 4.0 };
        bandit.arms[1] = ArmState { alpha: 1.0, beta: 9.0 };
        bandit.reset();
        assert!(bandit.arms.iter().all(|a| *a == ArmState::uniform()));
        // Idempotent.
        bandit.reset();
        assert!(bandit.arms.iter().all(|a| *a == ArmState::uniform()));
    }

    #[test]
    fn reset_preserves_rng_state() {
        let mut a = BanditState::new(2, 7);
        let mut b = BanditState::new(2, 7);
        a.update(0, true).unwrap();
        a.reset();
        b.update(0, true).unwrap();
        b.reset();
        assert_eq!(a.select(), b.select());
    }

    #[test]
    fn post_reset_selection_is_symmetric() {
        let mut bandit = BanditState::new(2, 321);
        bandit.arms[0] = ArmState { alpha: 40.0, beta: 2.0 };
        bandit.reset();
        let trials = 10_000;
        let zeros = (0..trials).filter(|_| bandit.select() == 0).count();
        let freq = zeros as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn discretize_boundaries_are_deterministic() {
        let mut rng = Rng::new(11);
        for _ in 0..1_000 {
            assert!(!discretize(0.0, &mut rng).unwrap());
            assert!(discretize(1.0, &mut rng).unwrap());
        }
    }

    #[test]
    fn discretize_rejects_out_of_domain() {
        let mut rng = Rng::new(0);
        assert!(discretize(-0.01, &mut rng).is_err());
        assert!(discretize(1.01, &mut rng).is_err());
    }

    #[test]
    fn discretize_mean_tracks_probability() {
        let mut rng = Rng::new(12);
        let n = 100_000;
        let ones = (0..n).filter(|_| discretize(0.78, &mut rng).unwrap()).count();
        let mean = ones as f64 / n as f64;
        assert!((0.775..=0.785).contains(&mean), "mean {mean}");
    }

    #[test]
    fn identical_seed_gives_identical_trace() {
        let run = |seed: u64| -> Vec<(usize, bool)> {
            let mut bandit = BanditState::new(4, seed);
            (0..200)
                .map(|i| {
                    let arm = bandit.select();
                    let r = (i % 10) as f64 / 10.0;
                    let r_hat = discretize(r, bandit.rng_mut()).unwrap();
                    bandit.update(arm, r_hat).unwrap();
                    (arm, r_hat)
                })
                .collect()
        };
        assert_eq!(run(77), run(77));
    }

    #[test]
    fn stationary_two_arm_problem_converges() {
        // Arms pay Bernoulli(0.8) vs Bernoulli(0.2); the better arm should
        // dominate rounds 1001..2000 in the median over 20 seeded runs.
        let mut fractions: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut bandit = BanditState::new(2, seed);
                let mut reward_rng = Rng::new(seed ^ 0xabcdef);
                let mut hits = 0u32;
                for round in 0..2_000 {
                    let arm = bandit.select();
                    let p = if arm == 0 { 0.8 } else { 0.2 };
                    let r_hat = reward_rng.next_bernoulli(p);
                    bandit.update(arm, r_hat).unwrap();
                    if round >= 1_000 && arm == 0 {
                        hits += 1;
                    }
                }
                hits as f64 / 1_000.0
            })
            .collect();
        fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = fractions[(fractions.len() - 1) / 2];
        assert!(median >= 0.85, "median best-arm fraction {median}");
    }

    proptest! {
        // Any strictly increasing transform of the samples leaves the
        // selected index unchanged (ties map to ties).
        #[test]
        fn argmax_invariant_under_monotone_transform(
            samples in proptest::collection::vec(0.0f64..1.0, 1..12),
            tie_seed in any::<u64>(),
            scale in 0.5f64..4.0,
            shift in -2.0f64..2.0,
        ) {
            let transformed: Vec<f64> =
                samples.iter().map(|&x| scale * x + shift).collect();
            let a = argmax(&samples, &mut Rng::new(tie_seed));
            let b = argmax(&transformed, &mut Rng::new(tie_seed));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn update_count_matches_alpha_beta_sum(
            rewards in proptest::collection::vec(any::<bool>(), 0..200),
        ) {
            let mut bandit = BanditState::new(3, 5);
            for (i, &r) in rewards.iter().enumerate() {
                bandit.update(i % 3, r).unwrap();
            }
            let total: f64 = bandit
                .arms()
                .iter()
                .map(|a| a.alpha + a.beta - 2.0)
                .sum();
            prop_assert_eq!(total as usize, rewards.len());
        }
    }
}
