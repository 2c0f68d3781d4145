use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for a `(seed, stream)` pair. Independent streams let
/// parallel trials stay reproducible regardless of scheduling.
pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
