//! Named, reproducible random streams and low-discrepancy sequences.
//!
//! Every stochastic routine draws from its own stream keyed by a name, so
//! adding a new consumer never shifts the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a, used only to turn stream names into stream ids.
fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Generator for the stream `name` under the run seed `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name));
    rng
}

/// Standard normal deviate by Box-Muller.
pub fn normal(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

/// Radical inverse of `index` in the base of the `dim`-th prime.
///
/// Dimensions past the prime table wrap around with a scrambled index, which
/// keeps the points deterministic at the cost of some uniformity.
pub fn halton(index: u64, dim: usize) -> f64 {
    let base = PRIMES[dim % PRIMES.len()];
    let mut i = index + 1 + (dim / PRIMES.len()) as u64 * 7919;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton point mapped to a Gaussian vector of length `len` (Box-Muller pairs).
pub fn halton_gaussian(index: u64, first_dim: usize, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut d = first_dim;
    while out.len() < len {
        let u1 = halton(index, d).max(1e-300);
        let u2 = halton(index, d + 1);
        let rad = (-2.0 * u1.ln()).sqrt();
        let ang = std::f64::consts::TAU * u2;
        out.push(rad * ang.cos());
        if out.len() < len {
            out.push(rad * ang.sin());
        }
        d += 2;
    }
    out
}
