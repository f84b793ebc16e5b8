use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream for `(seed, domain, index)`. Streams are
/// counter based, so any subset can be regenerated without the others.
pub(crate) fn stream(seed: u64, domain: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(domain) << 32) | u64::from(index));
    rng
}
