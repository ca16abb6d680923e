//! Seeded substreams.
//!
//! Every experiment is driven by one `u64` seed. Each consumer asks for a
//! ChaCha8 stream keyed by `(seed, domain, index)`: the domain selects the key
//! and the index selects the ChaCha stream, so trial `i` of a Monte Carlo run
//! draws the same numbers no matter how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Connectivity = 1,
    Staleness = 2,
    Participants = 3,
    Burgers = 4,
    FnoInit = 5,
    Afl = 6,
    Toy = 7,
    Realization = 8,
    Dataset = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for item `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> SimRng {
    let key = splitmix64(seed ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
