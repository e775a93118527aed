//! Named random substreams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Generation = 1,
    Selection = 2,
    Mutation = 3,
    FleetPlacement = 4,
}

/// Independent generator for `(stream, index)` under `seed`. The index is
/// typically the iteration number.
pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}
