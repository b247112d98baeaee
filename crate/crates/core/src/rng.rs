//! Portable pseudo-random streams.
//!
//! Every random draw in the crate goes through these helpers so that a seed
//! reproduces the same instances and runs on any platform and in any port:
//!
//! * generator: xoshiro256++ seeded with `seed_from_u64`, i.e. the 256-bit
//!   state is filled by four successive SplitMix64 outputs of the seed;
//! * bounded integers: Lemire's multiply-shift with rejection on the low word;
//! * unit floats: the top 53 bits of `next_u64` scaled by 2^-53;
//! * shuffles: Fisher-Yates from the last index down.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng64 = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a labelled sub-task of a master seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Uniform integer in `0..n`. `n` must be positive.
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "empty range");
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = (rng.next_u64() as u128) * (n as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

pub fn index<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> usize {
    below(rng, len as u64) as usize
}

/// Uniform integer in `lo..=hi`.
pub fn int_inclusive<R: RngCore + ?Sized>(rng: &mut R, lo: i64, hi: i64) -> i64 {
    assert!(lo <= hi);
    lo + below(rng, (hi - lo) as u64 + 1) as i64
}

/// Uniform float in `[0, 1)`.
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn coin<R: RngCore + ?Sized>(rng: &mut R) -> bool {
    rng.next_u64() >> 63 == 1
}

pub fn shuffle<R: RngCore + ?Sized, T>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}

/// Roulette-wheel pick: index `i` with probability `weights[i] / sum`.
/// Negative weights count as zero; if nothing has positive weight the pick
/// is uniform. Returns `None` for an empty slice.
pub fn roulette<R: RngCore + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    if weights.is_empty() {
        return None;
    }
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return Some(index(rng, weights.len()));
    }
    let mut target = unit(rng) * total;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        let w = w.max(0.0);
        if w > 0.0 {
            if target < w {
                return Some(i);
            }
            target -= w;
            last_positive = i;
        }
    }
    Some(last_positive)
}
