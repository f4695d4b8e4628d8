//! Seeded random streams and the samplers shared by the randomized checks.
//!
//! Every randomized scan is split into fixed-size chunks, and chunk `k` draws
//! from ChaCha stream `k` of the run seed. Results therefore do not depend on
//! how chunks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::FiniteDistribution;

/// Samples per independently seeded chunk.
pub const CHUNK: usize = 4096;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `total` samples into `(chunk_index, len)` pieces of at most [`CHUNK`].
pub fn chunks(total: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..total.div_ceil(CHUNK)).map(move |k| (k as u64, CHUNK.min(total - k * CHUNK)))
}

/// Uniform point on the probability simplex with `n` vertices.
pub fn flat_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Uniform in the open interval `(0, 1]`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// A distribution with `1..=max_atoms` atoms, flat-simplex weights and
/// uniform values. A tenth of the values are pinned to 0 or 1 so the
/// endpoint conventions get exercised.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize) -> FiniteDistribution {
    loop {
        let n = rng.random_range(1..=max_atoms);
        let weights = flat_simplex(rng, n);
        let atoms: Vec<(f64, f64)> = weights
            .into_iter()
            .map(|w| {
                let v = match rng.random_range(0..20) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => rng.random::<f64>(),
                };
                (w, v)
            })
            .collect();
        // Weights from the simplex sampler sum to 1 up to rounding; a
        // rejected draw here can only come from an underflowed weight.
        if let Ok(d) = FiniteDistribution::new(atoms) {
            return d;
        }
    }
}
