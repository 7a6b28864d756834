//! Deterministic random number generation.
//!
//! Campaign replay requires that every stochastic decision be reproducible
//! from a single 64-bit seed, on any platform. We therefore pin the whole
//! stack ourselves instead of depending on an external RNG crate whose
//! stream might change between releases: xoshiro256++ for raw bits,
//! seeded through splitmix64, Marsaglia-Tsang for Gamma variates and the
//! two-Gamma construction for Beta. Changing any of these invalidates all
//! recorded golden traces.

use libm::{log, pow, sqrt};

/// splitmix64 step; also used to derive independent sub-streams.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives the seed for sub-stream `stream` of a campaign seed, e.g. one
/// stream per simulated fuzzer. Distinct streams never overlap in practice.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut s = base ^ stream.wrapping_mul(0xd1b54a32d192ed03);
    splitmix64(&mut s)
}

/// xoshiro256++ generator state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in `[0, n)` without modulo bias.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let bound = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < bound {
                return v % n;
            }
        }
    }

    /// Standard normal via the Marsaglia polar method. One variate per call;
    /// the second root of each accepted pair is discarded to keep the draw
    /// order independent of call history.
    pub fn next_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * sqrt(-2.0 * log(s) / s);
            }
        }
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang, with the `U^(1/shape)` boost for
    /// shape < 1.
    pub fn next_gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let boost = loop {
                let u = self.next_f64();
                if u > 0.0 {
                    break pow(u, 1.0 / shape);
                }
            };
            return self.next_gamma(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / sqrt(9.0 * d);
        loop {
            let x = self.next_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.next_f64();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)) {
                return d * v;
            }
        }
    }

    /// Beta(alpha, beta) as X/(X+Y) over two Gamma draws (alpha first).
    pub fn next_beta(&mut self, alpha: f64, beta: f64) -> f64 {
        let x = self.next_gamma(alpha);
        let y = self.next_gamma(beta);
        x / (x + y)
    }

    /// Bernoulli(p), valid for p in [0, 1]. Always consumes one draw.
    pub fn next_bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn f64_in_unit_interval() {
        let mut rng = Rng::new(1);
        for _ in 0..10_000 {
            let v = rng.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn below_respects_bound() {
        let mut rng = Rng::new(2);
        let mut seen = [false; 5];
        for _ in 0..1_000 {
            let v = rng.next_below(5) as usize;
            assert!(v < 5);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn bernoulli_extremes_are_deterministic() {
        let mut rng = Rng::new(3);
        for _ in 0..1_000 {
            assert!(!rng.next_bernoulli(0.0));
            assert!(rng.next_bernoulli(1.0));
        }
    }

    #[test]
    fn gamma_mean_matches_shape() {
        // E[Gamma(k, 1)] = k; 1e5 samples put the sample mean well within 1%.
        for &shape in &[0.5, 1.0, 2.5, 9.0] {
            let mut rng = Rng::new(4);
            let n = 100_000;
            let mean: f64 = (0..n).map(|_| rng.next_gamma(shape)).sum::<f64>() / n as f64;
            assert!(
                (mean - shape).abs() < 0.05 * shape.max(1.0),
                "shape {shape}: mean {mean}"
            );
        }
    }

    #[test]
    fn beta_mean_within_three_sigma() {
        // E[Beta(a,b)] = a/(a+b); checked at the 3-sigma level for 1e5 draws.
        for &(a, b) in &[(1.0, 1.0), (2.0, 2.0), (5.0, 4.0), (1.0, 9.0)] {
            let mut rng = Rng::new(5);
            let n = 100_000u32;
            let mean: f64 = (0..n).map(|_| rng.next_beta(a, b)).sum::<f64>() / n as f64;
            let expect = a / (a + b);
            let var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
            let sigma = sqrt(var / n as f64);
            assert!(
                (mean - expect).abs() < 3.0 * sigma,
                "Beta({a},{b}): mean {mean}, expect {expect}"
            );
        }
    }

    #[test]
    fn beta_stays_in_unit_interval() {
        let mut rng = Rng::new(6);
        for _ in 0..10_000 {
            let v = rng.next_beta(1.0, 1.0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn derived_streams_differ() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, 0));
    }
}
