//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines for passing criteria too).

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use fuzzmux::compare::{run_compare, CompareOptions};
use fuzzmux::config::load_config;
use fuzzmux::driver::run_to_dir;
use fuzzmux_core::bandit::{argmax, discretize, BanditState};
use fuzzmux_core::coverage::{Branch, SeedCoverage};
use fuzzmux_core::orchestrator::{Campaign, CampaignConfig, RewardMode, StopCondition};
use fuzzmux_core::pool::{CandidateSeed, SeedRecord};
use fuzzmux_core::reward::{DiscoveryLog, RewardNormalizer};
use fuzzmux_core::rng::Rng;
use fuzzmux_core::runtime::{
    CycleResult, Fuzzer, FuzzerHandle, FuzzerKind, RunRequest, RuntimeError, Termination,
};
use fuzzmux_core::score::lower_median;
use fuzzmux_core::testkit::{
    brute_force_register, brute_force_reward, random_scenario, OracleLog, OracleSeed,
};

use common::{
    write_breakthrough_suite, write_config, write_heterogeneous_target,
    write_nonstationary_target, Knobs,
};

fn to_coverage(seeds: &[OracleSeed]) -> Vec<SeedCoverage> {
    seeds
        .iter()
        .map(|(id, branches)| {
            SeedCoverage::new(*id, branches.iter().map(|&(p, s)| Branch::new(p, s)))
        })
        .collect()
}

/// Criterion 1: the reward engine matches an independent brute-force replay
/// exactly on 1,000 random scenarios, in under 10 seconds.
#[test]
fn c01_reward_oracle_equivalence() {
    let start = Instant::now();
    for seed in 0..1_000u64 {
        let scenario = random_scenario(seed);
        let mut log = DiscoveryLog::new();
        log.register_initial_corpus(&to_coverage(&scenario.initial))
            .unwrap();
        let mut oracle = OracleLog::default();
        brute_force_register(&mut oracle, &scenario.initial);
        for (t, batch) in &scenario.rounds {
            let got = log.evaluate_seeds(*t, &to_coverage(batch)).unwrap();
            let want = brute_force_reward(&mut oracle, *t, batch);
            assert_eq!(got, want, "scenario {seed}, round {t}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("criterion 1 PASS: 1000 scenarios matched the oracle exactly in {elapsed:?}");
}

/// Criterion 2: the worked bandit fixtures — Beta(5,4) with a success
/// updates to Beta(6,4); samples (0.57, 0.32, 0.81) select arm 2.
#[test]
fn c02_appendix_fixture() {
    // Build the Beta(5, 4) prior through the public update path, then apply
    // the fixture's success.
    let mut fixture = BanditState::new(3, 0);
    for _ in 0..4 {
        fixture.update(2, true).unwrap();
    }
    for _ in 0..3 {
        fixture.update(2, false).unwrap();
    }
    assert_eq!(
        (fixture.arms()[2].alpha, fixture.arms()[2].beta),
        (5.0, 4.0)
    );
    fixture.update(2, true).unwrap();
    assert_eq!(
        (fixture.arms()[2].alpha, fixture.arms()[2].beta),
        (6.0, 4.0)
    );

    let mut rng = Rng::new(0);
    let selected = argmax(&[0.57, 0.32, 0.81], &mut rng);
    assert_eq!(selected, 2);
    println!("criterion 2 PASS: Beta(5,4)+1 -> Beta(6,4); samples (0.57,0.32,0.81) select arm 2");
}

/// Criterion 3: discretization statistics — 1e5 Bernoulli draws at 0.78
/// land within ±0.005 of 0.78, in under a second.
#[test]
fn c03_discretization_statistics() {
    let start = Instant::now();
    let mut rng = Rng::new(20260808);
    let n = 100_000;
    let ones = (0..n)
        .filter(|_| discretize(0.78, &mut rng).unwrap())
        .count();
    let mean = ones as f64 / n as f64;
    let elapsed = start.elapsed();
    assert!((mean - 0.78).abs() <= 0.005, "mean {mean}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 3 PASS: mean of 1e5 draws at 0.78 = {mean:.4} in {elapsed:?}");
}

/// Scripted backend for the convergence experiment: each round it emits one
/// seed with a globally fresh branch with fixed probability, nothing else.
struct BernoulliSpring {
    p: f64,
    rng: Rng,
    namespace: u64,
    counter: u64,
}

impl Fuzzer for BernoulliSpring {
    fn run_cycles(&mut self, req: &RunRequest) -> (CycleResult, Termination) {
        let mut new_seeds = Vec::new();
        if self.rng.next_bernoulli(self.p) {
            self.counter += 1;
            let block = (self.namespace << 32) | self.counter;
            let payload = format!("spring {} {}", self.namespace, self.counter).into_bytes();
            new_seeds.push(CandidateSeed::new(payload, vec![Branch::new(1, block)]));
        }
        (
            CycleResult {
                new_seeds,
                duration_ms: 1_000,
                cycles_completed: req.cycles,
            },
            Termination::Completed,
        )
    }

    fn import_seeds(&mut self, _records: &[SeedRecord]) -> Result<(), RuntimeError> {
        Ok(())
    }

    fn restart(&mut self) -> Result<(), RuntimeError> {
        Ok(())
    }
}

/// Criterion 4: Thompson-sampling convergence in the orchestrator loop —
/// two arms paying at 0.8 vs 0.2, 2,000 rounds x 20 seeds, better arm
/// selected in at least 85% of rounds 1001..2000 (median over seeds).
#[test]
fn c04_ts_convergence() {
    let start = Instant::now();
    let mut fractions: Vec<f64> = (0..20u64)
        .map(|seed| {
            let config = CampaignConfig {
                t_i_ms: 1_000,
                stop: StopCondition::MaxRounds(2_000),
                rng_seed: seed,
                reward_mode: RewardMode::Naive,
                ..CampaignConfig::default()
            };
            let handles = vec![
                FuzzerHandle::new(
                    0,
                    FuzzerKind::Simulated,
                    Box::new(BernoulliSpring {
                        p: 0.8,
                        rng: Rng::new(seed ^ 0x51ab),
                        namespace: 1,
                        counter: 0,
                    }),
                ),
                FuzzerHandle::new(
                    1,
                    FuzzerKind::Simulated,
                    Box::new(BernoulliSpring {
                        p: 0.2,
                        rng: Rng::new(seed ^ 0xf00d),
                        namespace: 2,
                        counter: 0,
                    }),
                ),
            ];
            let mut campaign = Campaign::new(config, handles, vec![]).unwrap();
            let report = campaign.run_to_end().unwrap();
            let late = &report.rounds[1_000..2_000];
            late.iter().filter(|r| r.selected == 0).count() as f64 / late.len() as f64
        })
        .collect();
    fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = fractions[(fractions.len() - 1) / 2];
    let elapsed = start.elapsed();
    assert!(median >= 0.85, "median best-arm share {median}");
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "criterion 4 PASS: median best-arm share in rounds 1001-2000 = {median:.3} in {elapsed:?}"
    );
}

struct SuiteOutcome {
    medians: Vec<Vec<u64>>,
    targets: Vec<String>,
}

fn run_suite(
    dir: &Path,
    configs: &[(&str, &Path)],
    targets: &[std::path::PathBuf],
    trials: u64,
) -> SuiteOutcome {
    let named = configs
        .iter()
        .map(|(name, path)| (name.to_string(), load_config(path).unwrap()))
        .collect();
    let options = CompareOptions {
        configs: named,
        targets: targets.to_vec(),
        trials,
        base_seed: Some(1_000),
        jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2),
    };
    let outcome = run_compare(&options, None).unwrap();
    std::fs::write(dir.join("scores.txt"), &outcome.rendered).unwrap();
    SuiteOutcome {
        medians: outcome.table.medians.clone(),
        targets: outcome.table.targets.clone(),
    }
}

/// Criterion 5: scheduler ablation — on the breakthrough suite the bandit
/// scheduler beats uniform-random selection by at least 5% in median final
/// coverage (summed over the three targets), winning on every target.
#[test]
fn c05_scheduler_beats_random() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let targets = write_breakthrough_suite(dir.path());
    let ts = write_config(dir.path(), "ts", &targets[0], &Knobs::default());
    let random = write_config(
        dir.path(),
        "random",
        &targets[0],
        &Knobs {
            scheduler: "random",
            ..Knobs::default()
        },
    );
    let outcome = run_suite(dir.path(), &[("ts", &ts), ("random", &random)], &targets, 10);

    let ts_row = &outcome.medians[0];
    let random_row = &outcome.medians[1];
    for (t, target) in outcome.targets.iter().enumerate() {
        assert!(
            ts_row[t] > random_row[t],
            "{target}: ts {} vs random {}",
            ts_row[t],
            random_row[t]
        );
    }
    let ts_sum: u64 = ts_row.iter().sum();
    let random_sum: u64 = random_row.iter().sum();
    let margin = ts_sum as f64 / random_sum as f64;
    assert!(
        margin >= 1.05,
        "ts {ts_sum} vs random {random_sum} (x{margin:.3})"
    );
    assert!(start.elapsed() < Duration::from_secs(120));
    println!(
        "criterion 5 PASS: ts medians {ts_row:?} vs random {random_row:?}, margin x{margin:.3}, {:?}",
        start.elapsed()
    );
}

/// Criterion 6: sync ablation — seed synchronization never hurts median
/// final coverage on the breakthrough suite.
#[test]
fn c06_sync_helps() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let targets = write_breakthrough_suite(dir.path());
    let sync = write_config(dir.path(), "sync", &targets[0], &Knobs::default());
    let nosync = write_config(
        dir.path(),
        "nosync",
        &targets[0],
        &Knobs {
            sync: false,
            ..Knobs::default()
        },
    );
    let outcome = run_suite(dir.path(), &[("sync", &sync), ("nosync", &nosync)], &targets, 10);
    for (t, target) in outcome.targets.iter().enumerate() {
        assert!(
            outcome.medians[0][t] >= outcome.medians[1][t],
            "{target}: sync {} vs no-sync {}",
            outcome.medians[0][t],
            outcome.medians[1][t]
        );
    }
    println!(
        "criterion 6 PASS: sync medians {:?} vs no-sync {:?}, {:?}",
        outcome.medians[0],
        outcome.medians[1],
        start.elapsed()
    );
}

/// Criterion 7: reward ablation — the coverage-interval reward beats the
/// naive any-new-coverage reward on a target with heterogeneous branch
/// difficulty.
#[test]
fn c07_interval_reward_helps() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let target = write_heterogeneous_target(dir.path());
    let knobs = Knobs {
        fuzzers: 2,
        stop: "rounds 300",
        ..Knobs::default()
    };
    let interval = write_config(dir.path(), "interval", &target, &knobs);
    let naive = write_config(
        dir.path(),
        "naive",
        &target,
        &Knobs {
            reward: "naive",
            ..knobs
        },
    );
    let outcome = run_suite(
        dir.path(),
        &[("interval", &interval), ("naive", &naive)],
        &[target],
        10,
    );
    assert!(
        outcome.medians[0][0] >= outcome.medians[1][0],
        "interval {} vs naive {}",
        outcome.medians[0][0],
        outcome.medians[1][0]
    );
    println!(
        "criterion 7 PASS: interval median {} vs naive {} in {:?}",
        outcome.medians[0][0],
        outcome.medians[1][0],
        start.elapsed()
    );
}

/// Criterion 8: reset ablation — on a target whose fuzzer skill flips at
/// the midpoint, the periodic arm reset never hurts median final coverage.
#[test]
fn c08_reset_helps_on_nonstationary_target() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let target = write_nonstationary_target(dir.path(), 150);
    let knobs = Knobs {
        fuzzers: 2,
        stop: "rounds 300",
        i_r_ms: 4_800_000,
        ..Knobs::default()
    };
    let with_reset = write_config(dir.path(), "reset", &target, &knobs);
    let no_reset = write_config(
        dir.path(),
        "noreset",
        &target,
        &Knobs {
            reset: false,
            ..knobs
        },
    );
    let outcome = run_suite(
        dir.path(),
        &[("reset", &with_reset), ("noreset", &no_reset)],
        &[target],
        10,
    );
    assert!(
        outcome.medians[0][0] >= outcome.medians[1][0],
        "reset {} vs no-reset {}",
        outcome.medians[0][0],
        outcome.medians[1][0]
    );
    println!(
        "criterion 8 PASS: with-reset median {} vs no-reset {} in {:?}",
        outcome.medians[0][0],
        outcome.medians[1][0],
        start.elapsed()
    );
}

/// Criterion 9: hyper-parameter insensitivity — varying the round budget
/// and the reset interval around the defaults moves the median final
/// coverage by at most 10% of the default setting's value.
#[test]
fn c09_hyperparameter_insensitivity() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let target = common::write_insensitivity_target(dir.path());

    let mut settings: Vec<(String, u64, u64)> = Vec::new();
    for t_i_s in [90u64, 120, 150, 180] {
        settings.push((format!("ti{t_i_s}"), t_i_s * 1_000, 7_200_000));
    }
    for i_r_min in [90u64, 150, 180] {
        settings.push((format!("ir{i_r_min}"), 120_000, i_r_min * 60_000));
    }

    let mut medians = Vec::new();
    for (name, t_i_ms, i_r_ms) in &settings {
        let config = write_config(
            dir.path(),
            name,
            &target,
            &Knobs {
                fuzzers: 3,
                t_i_ms: *t_i_ms,
                i_r_ms: *i_r_ms,
                stop: "duration_ms 28800000",
                ..Knobs::default()
            },
        );
        let spec = load_config(&config).unwrap();
        let finals: Vec<u64> = (0..15u64)
            .map(|trial| {
                let mut spec = spec.clone();
                spec.rng_seed = 2_000 + trial;
                let (mut campaign, _) =
                    fuzzmux::driver::build_campaign(&spec, None).unwrap();
                campaign.run_to_end().unwrap().final_branches
            })
            .collect();
        medians.push((name.clone(), lower_median(&finals).unwrap()));
    }

    let default_median = medians
        .iter()
        .find(|(name, _)| name == "ti120")
        .map(|(_, m)| *m)
        .unwrap();
    let max = medians.iter().map(|(_, m)| *m).max().unwrap();
    let min = medians.iter().map(|(_, m)| *m).min().unwrap();
    let spread = (max - min) as f64 / default_median as f64;
    assert!(
        spread <= 0.10,
        "spread {spread:.3} over settings {medians:?}"
    );
    println!(
        "criterion 9 PASS: medians {medians:?}, spread {:.1}% of default, {:?}",
        spread * 100.0,
        start.elapsed()
    );
}

/// Criterion 10: determinism — two independent runs with the same config
/// and seed produce byte-identical campaign traces.
#[test]
fn c10_replay_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let targets = write_breakthrough_suite(dir.path());
    let config = write_config(
        dir.path(),
        "replay",
        &targets[0],
        &Knobs {
            stop: "rounds 120",
            seed: 77,
            ..Knobs::default()
        },
    );
    let spec = load_config(&config).unwrap();
    run_to_dir(&spec, &dir.path().join("a")).unwrap();
    run_to_dir(&spec, &dir.path().join("b")).unwrap();
    let a = std::fs::read(dir.path().join("a/trace.tsv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trace.tsv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    println!(
        "criterion 10 PASS: two runs produced byte-identical traces ({} bytes)",
        a.len()
    );
}

/// Criterion 11: invariant suites — normalization stays in [0,1] on fuzzed
/// inputs, the pool union matches brute force, the sync-closure property
/// holds after every synced round, and arm counts track updates since the
/// last reset across a 500-round campaign.
#[test]
fn c11_invariant_suites() {
    // Normalization on fuzzed input sequences.
    let mut rng = Rng::new(99);
    for _ in 0..200 {
        let mut norm = RewardNormalizer::new();
        for _ in 0..50 {
            let raw = rng.next_u64() % 1_000_000;
            let value = norm.normalize(raw);
            assert!((0.0..=1.0).contains(&value), "normalize({raw}) = {value}");
        }
    }

    // Pool union vs brute force over random merges.
    let mut pool = fuzzmux_core::SeedPool::new();
    for round in 0..100u64 {
        let candidates: Vec<CandidateSeed> = (0..rng.next_below(6))
            .map(|_| {
                let branches: Vec<Branch> = (0..1 + rng.next_below(4))
                    .map(|_| Branch::new(rng.next_below(30), rng.next_below(30)))
                    .collect();
                CandidateSeed::new(rng.next_u64().to_le_bytes().to_vec(), branches)
            })
            .collect();
        pool.merge(&candidates, fuzzmux_core::pool::SeedOrigin::Fuzzer(0), round);
        let brute: BTreeSet<Branch> = pool
            .records_from(0)
            .iter()
            .flat_map(|r| r.coverage.branches.iter().copied())
            .collect();
        assert_eq!(&brute, pool.branch_union());
    }

    // Sync closure plus arm accounting over a 500-round campaign with
    // several resets.
    let dir = tempfile::tempdir().unwrap();
    let targets = write_breakthrough_suite(dir.path());
    let config = write_config(
        dir.path(),
        "invariants",
        &targets[2],
        &Knobs {
            stop: "rounds 500",
            i_r_ms: 1_800_000,
            seed: 5,
            ..Knobs::default()
        },
    );
    let spec = load_config(&config).unwrap();
    let (mut campaign, _) = fuzzmux::driver::build_campaign(&spec, None).unwrap();
    let fuzzer_count = spec.fuzzers.len();
    let mut updates_since_reset = vec![0u64; fuzzer_count];
    let mut resets_seen = 0u64;
    while !campaign.stopped() {
        let snapshot = campaign.pool().snapshot_hashes();
        let record = campaign.run_round().unwrap();
        assert!(
            campaign
                .handle(record.selected)
                .local_hashes()
                .is_superset(&snapshot),
            "round {}: local pool missing synced seeds",
            record.round
        );
        updates_since_reset[record.selected] += 1;
        // Recorded arm states are post-update, pre-reset.
        for (arm, &updates) in record.arms.iter().zip(&updates_since_reset) {
            assert_eq!(
                (arm.alpha + arm.beta - 2.0) as u64,
                updates,
                "round {}",
                record.round
            );
        }
        if campaign.resets() > resets_seen {
            resets_seen = campaign.resets();
            updates_since_reset.iter_mut().for_each(|u| *u = 0);
        }
    }
    assert!(resets_seen >= 2, "campaign saw {resets_seen} resets");
    println!(
        "criterion 11 PASS: normalization, union, sync closure and arm accounting hold \
         ({resets_seen} resets over 500 rounds)"
    );
}

/// Criterion 12: watchdog — a hanging adapter is skipped within 3 x T_I of
/// wall time and a crashing adapter is restarted with its arm still
/// updated from the partial round.
#[test]
fn c12_watchdog_skip_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let target_path = dir.path().join("target.txt");
    std::fs::write(
        &target_path,
        "[blocks]\n01\n02\n03\n[branches]\n01 02\n02 03\n\
         [probs]\ndefault 0.9\n[cycle_ms]\ndefault 50\n",
    )
    .unwrap();
    let adapter = env!("CARGO_BIN_EXE_fuzzmux-adapter");
    let t_i_ms = 300u64;

    let spawn = |queue: &Path, extra: &[&str]| -> FuzzerHandle {
        let mut cmd = vec![
            adapter.to_string(),
            "--target".into(),
            target_path.display().to_string(),
            "--fuzzer".into(),
            "0".into(),
        ];
        cmd.extend(extra.iter().map(|s| s.to_string()));
        FuzzerHandle::new(
            0,
            FuzzerKind::External,
            Box::new(
                fuzzmux::adapter::ExternalFuzzer::spawn(0, cmd, queue.to_path_buf()).unwrap(),
            ),
        )
    };
    let config = CampaignConfig {
        t_i_ms,
        stop: StopCondition::MaxRounds(2),
        rng_seed: 3,
        ..CampaignConfig::default()
    };

    // Hanging adapter: the skip lands within the round timeout plus grace.
    let handles = vec![spawn(&dir.path().join("hang"), &["--hang-on-run", "1"])];
    let mut campaign = Campaign::new(config.clone(), handles, vec![]).unwrap();
    let wall = Instant::now();
    let record = campaign.run_round().unwrap();
    let elapsed = wall.elapsed();
    assert!(
        elapsed < Duration::from_millis(3 * t_i_ms + t_i_ms + 500),
        "skip took {elapsed:?}"
    );
    assert_eq!(record.cycles_run, 0);
    assert_eq!(
        campaign.handle(0).status(),
        fuzzmux_core::runtime::FuzzerStatus::Idle
    );
    // The arm still took the round's (empty) update.
    assert_eq!(campaign.stats()[0].num_selection, 1);
    let arm = record.arms[0];
    assert_eq!(arm.alpha + arm.beta - 2.0, 1.0);
    campaign.shutdown();

    // Crashing adapter: restarted, queue intact, arm updated with the
    // partial-round reward.
    let queue = dir.path().join("crash");
    let handles = vec![spawn(&queue, &["--crash-on-run", "1"])];
    let mut campaign = Campaign::new(config, handles, vec![]).unwrap();
    let record = campaign.run_round().unwrap();
    assert_eq!(campaign.stats()[0].num_selection, 1);
    let arm = record.arms[0];
    assert_eq!(arm.alpha + arm.beta - 2.0, 1.0);
    assert_eq!(
        campaign.handle(0).status(),
        fuzzmux_core::runtime::FuzzerStatus::Idle,
        "restart should bring the adapter back"
    );
    // Next round runs normally on the restarted process.
    let record = campaign.run_round().unwrap();
    assert!(record.cycles_run > 0);
    assert!(queue.join(".crash-injected").exists());
    campaign.shutdown();
    println!("criterion 12 PASS: hang skipped within 3xT_I; crash restarted with arm updated");
}
