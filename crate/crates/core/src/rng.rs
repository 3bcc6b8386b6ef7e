//! Deterministic seed derivation and small sampling helpers.
//!
//! Every randomized component derives an independent per-item generator as
//! `seeded(master_seed, index)`. Streams therefore depend only on the seed
//! and the item index — never on thread count or iteration order — which is
//! what makes parallel dataset generation byte-reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mix a master seed and an item index into an independent 64-bit seed
/// (two rounds of the splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for _ in 0..2 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Independent generator for item `index` under `master` seed.
pub fn seeded(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

/// One standard-normal deviate via Box-Muller (stateless: draws two
/// uniforms per call, discards the paired value).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Normal deviate with the given mean and standard deviation.
pub fn normal<R: Rng>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    mean + sigma * standard_normal(rng)
}
