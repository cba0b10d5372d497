//! Seeded random streams.
//!
//! Every subsystem draws from its own ChaCha stream keyed by the master seed,
//! so changing how many numbers one subsystem consumes never shifts the
//! sequence seen by another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Independent stream identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Regions = 2,
    Latency = 3,
    Placement = 4,
    Consensus = 5,
    Wire = 6,
    Transactions = 7,
}

/// Builds the stream `stream` of the simulation seeded with `seed`.
pub fn stream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Uniform draw in `(0, 1]`.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Exponential draw with the given rate by inverse CDF, `-ln(u) / rate`.
///
/// Resamples when the draw is exactly zero so the result is always positive.
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    debug_assert!(rate > 0.0);
    loop {
        let t = -open_unit(rng).ln() / rate;
        if t > 0.0 {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut s1 = stream(7, Stream::Wire);
        let mut s2 = stream(7, Stream::Wire);
        let mut s3 = stream(7, Stream::Topology);
        let x: Vec<u64> = (0..8).map(|_| s1.random()).collect();
        let y: Vec<u64> = (0..8).map(|_| s2.random()).collect();
        let z: Vec<u64> = (0..8).map(|_| s3.random()).collect();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn exponential_mean() {
        let mut rng = stream(1, Stream::Consensus);
        let n = 200_000;
        let mean = (0..n).map(|_| exponential(&mut rng, 0.5)).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.03, "mean {mean}");
    }
}
