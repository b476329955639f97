//! Deterministic RNG derivation from a master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Independent ChaCha stream `stream` under `master`.
pub fn derive(master: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(master);
    r.set_stream(stream);
    r
}
