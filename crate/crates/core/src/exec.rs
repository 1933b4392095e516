//! Scheduling-independent execution of independent work items.
//!
//! The library never spawns threads. Operations that fan out over samples or
//! grid points take a [`Runner`]; the CLI supplies a thread-pool runner and
//! everything else uses [`Serial`]. Runners must return results in index
//! order, and every random draw is keyed by `(master seed, index)`, so the
//! output does not depend on how the work was scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Maps `f` over `0..n`, returning results in index order.
pub trait Runner: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;

    /// Like [`Runner::map`] for fallible items; the lowest-index error wins.
    fn try_map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Runner for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Independent random stream for work item `index` under `master`.
///
/// ChaCha's 64-bit stream id is the counter-based split: every index gets a
/// disjoint keystream of the same key, with no sequential dependence.
pub fn task_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Derives a master seed for a sub-computation, so nested fan-outs (e.g. one
/// scan per atom count) do not share streams.
pub fn sub_seed(master: u64, label: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = master ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
