//! Counter-based, splittable random number generation.
//!
//! Every random value in the crate is a pure function of a 64-bit key and a
//! set of integer coordinates (replica index, step index, lattice site).
//! This makes environments reproducible independently of evaluation order and
//! lets independent replicas run in parallel with no shared state.
//!
//! Seed derivation scheme (documented for external reproducibility):
//! replica `r` of base seed `s` uses `split_seed(s, r) = mix64(s ^ GAMMA.wrapping_mul(r + 1))`.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a strong 64-bit avalanche mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for replica `r` from a base seed.
#[inline]
pub fn split_seed(base: u64, r: u64) -> u64 {
    mix64(base ^ GAMMA.wrapping_mul(r.wrapping_add(1)))
}

/// Starts a coordinate-keyed hash chain for (seed, stream tag).
#[inline]
pub fn key_begin(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ GAMMA) ^ mix64(tag.wrapping_mul(0xA24B_AED4_963E_E407))
}

/// Folds one coordinate into the chain; order-sensitive.
#[inline]
pub fn key_push(h: u64, coord: i64) -> u64 {
    mix64(h ^ (coord as u64).wrapping_add(GAMMA))
}

/// Finalizes the chain into a uniform 64-bit word.
#[inline]
pub fn key_finish(h: u64) -> u64 {
    mix64(h)
}

/// Hashes a (seed, stream tag, integer coordinates) tuple to one u64.
///
/// The chain is order-sensitive, so permuted coordinates give unrelated
/// values.
#[inline]
pub fn key_at(seed: u64, tag: u64, coords: &[i64]) -> u64 {
    let mut h = key_begin(seed, tag);
    for &c in coords {
        h = key_push(h, c);
    }
    key_finish(h)
}

/// Uniform double in the open interval (0, 1), 52 bits of precision;
/// the half-step offset keeps both endpoints strictly excluded.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Stateful SplitMix64 stream for places where a plain sequence is enough
/// (test-data generation, replica loops).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform in 0..bound.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        // Modulo bias is irrelevant at the bounds used here.
        self.next_u64() % bound
    }
}
