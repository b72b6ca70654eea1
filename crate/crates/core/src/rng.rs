//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit seed. Independent work items
//! (paths, Monte Carlo batches) draw from stream `(master_seed, index)` of a
//! ChaCha8 generator, so results do not depend on how items are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval `(0, 1)`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Exponential waiting time with the given rate, by inversion of a strictly
/// positive uniform.
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

/// Advances `now` by an exponential holding time, redrawing when the increment
/// is lost to rounding so that event times stay strictly increasing.
pub fn next_event_time<R: Rng + ?Sized>(rng: &mut R, now: f64, rate: f64) -> f64 {
    loop {
        let t = now + exponential(rng, rate);
        if t > now {
            return t;
        }
    }
}

/// Index drawn with probability proportional to `weights` (total `total`).
pub fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[f64], total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding can leave u marginally above the last cumulative weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}
