//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator. The 32-byte key is expanded from the
//! 64-bit seed with `rand_core`'s `seed_from_u64` (PCG32 expansion), and the
//! 64-bit ChaCha stream id selects the substream. Uniform variates take the
//! top 53 bits of `next_u64`, so identical seeds give identical draws on every
//! platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// A seed from which independent, reproducible substreams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Substream `id` of this seed. Streams with distinct ids do not overlap.
    pub fn stream(&self, id: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        Stream { rng }
    }

    /// A derived source for an independent purpose (e.g. one optimizer restart).
    pub fn child(&self, domain: u64) -> RandomSource {
        RandomSource::new(splitmix64(self.seed ^ splitmix64(domain.wrapping_add(SPLITMIX_GAMMA))))
    }
}

/// One random stream. All model samplers draw through this type.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (n > 0), by rejection to avoid modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.rng.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse-CDF draw from a cumulative table.
///
/// Class `k` owns the left-closed interval `[cdf[k-1], cdf[k])`, so
/// zero-probability classes are never selected. If `u` lands above the last
/// cumulative value (rounding), the last class with positive mass is returned.
#[inline]
pub fn sample_cumulative(cdf: &[f64], u: f64) -> usize {
    for (k, &c) in cdf.iter().enumerate() {
        if u < c {
            return k;
        }
    }
    let mut prev = 0.0;
    let mut last = 0;
    for (k, &c) in cdf.iter().enumerate() {
        if c > prev {
            last = k;
        }
        prev = c;
    }
    last
}

/// Running sums of `probs`.
pub fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}
