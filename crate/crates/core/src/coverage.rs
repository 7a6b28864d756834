//! Coverage domain types: basic blocks, branches, per-seed coverage and
//! content hashing of seed payloads.

use alloc::collections::BTreeSet;
use core::fmt;

/// Opaque identifier of a basic block, stable for the lifetime of a campaign.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u64);

impl fmt::Debug for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockId({:016x})", self.0)
    }
}

impl fmt::Display for BlockId {
    /// Canonical form: 16 lowercase hex digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A control-flow edge from a predecessor block to a successor block.
/// Direction matters: `(a, b)` and `(b, a)` are distinct branches.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    pub pred: BlockId,
    pub succ: BlockId,
}

impl Branch {
    pub fn new(pred: u64, succ: u64) -> Self {
        Branch {
            pred: BlockId(pred),
            succ: BlockId(succ),
        }
    }
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}->{:016x}", self.pred.0, self.succ.0)
    }
}

/// The set of branches one seed exercises. `branches` is a sorted set, so
/// iteration is always in ascending `(pred, succ)` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedCoverage {
    /// Identifier used to order seeds within a batch; the pool assigns these
    /// monotonically, so batch order and id order coincide.
    pub seed_id: u64,
    pub branches: BTreeSet<Branch>,
}

impl SeedCoverage {
    pub fn new(seed_id: u64, branches: impl IntoIterator<Item = Branch>) -> Self {
        SeedCoverage {
            seed_id,
            branches: branches.into_iter().collect(),
        }
    }
}

/// 128-bit content digest of a seed payload. Within a campaign two payloads
/// with the same hash are treated as the same seed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(pub u128);

const FNV128_OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
const FNV128_PRIME: u128 = 0x0000000001000000000000000000013b;

impl ContentHash {
    /// FNV-1a over the payload bytes. Pinned so that hashes are stable across
    /// platforms and releases; trace files and seed file names depend on it.
    pub fn of(payload: &[u8]) -> Self {
        let mut h = FNV128_OFFSET;
        for &b in payload {
            h ^= b as u128;
            h = h.wrapping_mul(FNV128_PRIME);
        }
        ContentHash(h)
    }

    /// First 64 bits as 16 hex digits, used in seed file names.
    pub fn short_hex(&self) -> impl fmt::Display + '_ {
        ShortHex(self)
    }
}

struct ShortHex<'a>(&'a ContentHash);

impl fmt::Display for ShortHex<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", (self.0 .0 >> 64) as u64)
    }
}

impl fmt::Display for ContentHash {
    /// Canonical form: 32 lowercase hex digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", self)
    }
}
