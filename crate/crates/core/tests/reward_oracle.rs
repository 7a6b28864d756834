//! Cross-checks the reward implementation against the independent
//! brute-force oracle on randomly generated campaign-shaped scenarios.

use fuzzmux_core::coverage::{Branch, SeedCoverage};
use fuzzmux_core::reward::DiscoveryLog;
use fuzzmux_core::testkit::{
    brute_force_register, brute_force_reward, random_scenario, OracleLog, OracleSeed,
};

fn to_coverage(seeds: &[OracleSeed]) -> Vec<SeedCoverage> {
    seeds
        .iter()
        .map(|(id, branches)| {
            SeedCoverage::new(*id, branches.iter().map(|&(p, s)| Branch::new(p, s)))
        })
        .collect()
}

#[test]
fn rewards_match_brute_force_on_random_scenarios() {
    for seed in 0..300u64 {
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

        // Final states agree block by block and branch by branch.
        assert_eq!(log.block_count(), oracle.first_round.len(), "scenario {seed}");
        assert_eq!(log.known_branch_count(), oracle.known.len(), "scenario {seed}");
        for (&block, &round) in &oracle.first_round {
            assert_eq!(
                log.first_round(fuzzmux_core::BlockId(block)),
                Some(round),
                "scenario {seed}, block {block}"
            );
        }
    }
}
