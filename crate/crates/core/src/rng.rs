//! Counter-based random streams. Each work unit (trajectory, trial, shot)
//! gets its own ChaCha8 stream selected by `(seed, family, index)`, so the
//! draws it sees do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream families keep independent uses of one seed from overlapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Family {
    Thermal = 1,
    Trajectory = 2,
    Loading = 3,
    Counts = 4,
    Retention = 5,
    FieldNoise = 6,
    RabiJitter = 7,
}

pub fn stream(seed: u64, family: Family, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((family as u64) << 56));
    rng.set_stream(index);
    rng
}
