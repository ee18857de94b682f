//! Seeded random streams.
//!
//! Every unit of parallel work (one sample, one ball, one tuple) draws from its
//! own ChaCha stream, addressed by `(seed, purpose, index)`. Results therefore do
//! not depend on how rayon splits the work or on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Distinct purposes never share a stream for the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Axioms = 1,
    Fibre = 2,
    EquicontinuityBall = 3,
    SensitivityBall = 4,
    BasePoint = 5,
    Modulus = 6,
    Probe = 7,
    Anchor = 8,
    Global = 9,
    Seed = 10,
}

/// Independent generator for the `index`-th work item of `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    // splitmix64 finaliser so that nearby seeds and purposes land far apart
    let mut z = seed ^ (purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    let mut rng = ChaCha8Rng::seed_from_u64(z);
    rng.set_stream(index);
    rng
}

/// Sub-stream for nested work (e.g. the j-th sample inside the i-th ball).
pub fn substream(seed: u64, purpose: Purpose, outer: u64, inner: u64) -> ChaCha8Rng {
    stream(seed.wrapping_add(outer.wrapping_mul(0xD1B5_4A32_D192_ED03)), purpose, inner)
}
