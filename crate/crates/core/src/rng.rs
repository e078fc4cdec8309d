//! Seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator whose 64-bit seed is
//! derived from the run seed, a purpose tag and an index (usually a walker
//! id):
//!
//! ```text
//! seed' = splitmix64(splitmix64(seed ^ purpose * GOLDEN) ^ index * GOLDEN)
//! ```
//!
//! Streams never share state, so a walker's trajectory does not depend on
//! how many other walkers exist or in which order they are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Purpose tags for [`derive_seed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Data = 2,
    Partition = 3,
    Init = 4,
    Walk = 5,
    Train = 6,
    Swarm = 7,
    Placement = 8,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(seed ^ (stream as u64).wrapping_mul(GOLDEN));
    splitmix64(a ^ index.wrapping_mul(GOLDEN))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(seed: u64, stream: Stream, index: u64) -> SimRng {
    rng_from_seed(derive_seed(seed, stream, index))
}
