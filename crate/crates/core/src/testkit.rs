//! Test support: an independent brute-force replay of the reward procedure
//! and a seeded scenario generator, used to cross-check the production
//! implementation on random inputs.
//!
//! Nothing here may call into [`crate::reward`]; the whole point is a
//! second, separately written route to the same numbers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::rng::Rng;

/// A scenario round: `(round_number, seeds)`, each seed being
/// `(seed_id, branches)` over plain integer block ids.
pub type OracleSeed = (u64, Vec<(u64, u64)>);
pub type OracleRound = (u64, Vec<OracleSeed>);

/// Plain-map state of the brute-force oracle.
#[derive(Clone, Debug, Default)]
pub struct OracleLog {
    pub first_round: BTreeMap<u64, u64>,
    pub known: BTreeSet<(u64, u64)>,
}

/// Literal walk of the reward procedure: seeds ordered by id, branches by
/// `(pred, succ)`; for each not-yet-known branch, the interval is the round
/// minus the predecessor's first-round entry (inserting the predecessor at
/// the current round when absent), successors record on first sight.
pub fn brute_force_reward(log: &mut OracleLog, t: u64, seeds: &[OracleSeed]) -> u64 {
    let mut ordered: Vec<&OracleSeed> = seeds.iter().collect();
    ordered.sort_by_key(|(id, _)| *id);

    let mut total = 0u64;
    for (_, branches) in ordered {
        let mut sorted = branches.clone();
        sorted.sort_unstable();
        sorted.dedup();
        for (pred, succ) in sorted {
            if log.known.contains(&(pred, succ)) {
                continue;
            }
            let t_p = match log.first_round.get(&pred) {
                Some(&r) => r,
                None => {
                    log.first_round.insert(pred, t);
                    t
                }
            };
            total += t - t_p;
            log.first_round.entry(succ).or_insert(t);
            log.known.insert((pred, succ));
        }
    }
    total
}

/// A full random campaign-shaped scenario: an initial corpus plus per-round
/// seed batches, bounded by the usual desk-scale limits (at most 50 blocks,
/// 200 branches, 20 rounds).
#[derive(Clone, Debug)]
pub struct Scenario {
    pub initial: Vec<OracleSeed>,
    pub rounds: Vec<OracleRound>,
}

pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = Rng::new(seed);
    let num_blocks = 2 + rng.next_below(49); // 2..=50
    let block = |rng: &mut Rng| rng.next_below(num_blocks);

    // A fixed universe of candidate branches, some of which will repeat
    // across rounds to exercise the already-known path.
    let num_branches = 1 + rng.next_below(200);
    let universe: Vec<(u64, u64)> = (0..num_branches)
        .map(|_| (block(&mut rng), block(&mut rng)))
        .collect();
    let pick = |rng: &mut Rng| universe[rng.next_below(universe.len() as u64) as usize];

    let mut next_seed_id = 0u64;
    let mut make_batch = |rng: &mut Rng, max_seeds: u64| -> Vec<OracleSeed> {
        let count = rng.next_below(max_seeds + 1);
        (0..count)
            .map(|_| {
                let branches: Vec<(u64, u64)> =
                    (0..1 + rng.next_below(8)).map(|_| pick(rng)).collect();
                let id = next_seed_id;
                next_seed_id += 1;
                (id, branches)
            })
            .collect()
    };

    let initial = make_batch(&mut rng, 4);
    let num_rounds = 1 + rng.next_below(20);
    // Rounds advance but may repeat batches at the same round number gap.
    let mut rounds = Vec::new();
    let mut t = 0u64;
    for _ in 0..num_rounds {
        t += 1 + rng.next_below(3);
        rounds.push((t, make_batch(&mut rng, 5)));
    }
    Scenario { initial, rounds }
}

/// Registers an initial corpus into the oracle log the way the campaign
/// does: every touched block at round 0, every branch known.
pub fn brute_force_register(log: &mut OracleLog, seeds: &[OracleSeed]) {
    for (_, branches) in seeds {
        for &(pred, succ) in branches {
            log.first_round.entry(pred).or_insert(0);
            log.first_round.entry(succ).or_insert(0);
            log.known.insert((pred, succ));
        }
    }
}
