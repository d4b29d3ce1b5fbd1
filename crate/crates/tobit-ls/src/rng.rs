//! Reproducible random number streams.
//!
//! Every stochastic entry point in the crate takes either a `u64` seed or a
//! caller-owned [`SimRng`]. Parallel work derives one substream per unit of
//! work from `(seed, ids...)` through a SplitMix64 mix, so results are
//! independent of worker count and scheduling order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout; ChaCha8 keeps streams stable across platforms.
pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root stream for a seed.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix64(seed))
}

/// Independent substream derived from `(seed, ids...)`.
///
/// Each id is folded into the state through SplitMix64, so nearby ids give
/// unrelated streams.
pub fn substream(seed: u64, ids: &[u64]) -> SimRng {
    let mut state = splitmix64(seed);
    for &id in ids {
        state = splitmix64(state ^ splitmix64(id));
    }
    SimRng::seed_from_u64(state)
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn uniform_open(rng: &mut SimRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// Standard normal draw (Marsaglia polar method).
pub fn standard_normal(rng: &mut SimRng) -> f64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Gamma(shape, 1) draw by the Marsaglia-Tsang squeeze method.
pub fn standard_gamma(rng: &mut SimRng, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        // boost: Gamma(a) = Gamma(a + 1) * U^{1/a}
        let g = standard_gamma(rng, shape + 1.0);
        return g * uniform_open(rng).powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = uniform_open(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Student-t draw with `df` degrees of freedom.
pub fn student_t(rng: &mut SimRng, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    let z = standard_normal(rng);
    let chi2 = 2.0 * standard_gamma(rng, 0.5 * df);
    z / (chi2 / df).sqrt()
}
