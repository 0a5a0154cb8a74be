//! Deterministic random streams.
//!
//! Every Monte Carlo draw owns a ChaCha stream derived from the master seed
//! and the draw index, so results are reproducible bit-for-bit no matter how
//! samples are distributed over threads.

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};

use crate::math;

/// The stream type handed to every sampling routine.
pub type Stream = rand_chacha::ChaCha12Rng;

/// A statistically independent stream for draw `index` under `master_seed`.
///
/// Deterministic in `(master_seed, index)` and independent of thread
/// assignment; uses the ChaCha 64-bit stream counter so distinct indices never
/// overlap.
pub fn stream_for(master_seed: u64, index: u64) -> Stream {
    let mut rng = Stream::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Uniform in the half-open interval (0, 1].
pub fn uniform_pos(rng: &mut Stream) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
}

/// Uniform in [0, 1).
pub fn uniform(rng: &mut Stream) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0)
}

/// Standard complex Gaussian with E|z|² = 1 (Re and Im each N(0, 1/2)).
///
/// Polar form: |z|² is exponential(1), the phase uniform, which is exactly the
/// distribution of one entry of a Ginibre matrix.
pub fn complex_gaussian(rng: &mut Stream) -> Complex64 {
    let radius = math::sqrt(-math::ln(uniform_pos(rng)));
    let theta = 2.0 * core::f64::consts::PI * uniform(rng);
    Complex64::new(radius * math::cos(theta), radius * math::sin(theta))
}

/// Standard real Gaussian N(0, 1).
pub fn gaussian(rng: &mut Stream) -> f64 {
    let radius = math::sqrt(-2.0 * math::ln(uniform_pos(rng)));
    let theta = 2.0 * core::f64::consts::PI * uniform(rng);
    radius * math::cos(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = stream_for(7, 3);
        let mut b = stream_for(7, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ_by_index() {
        let mut a = stream_for(7, 0);
        let mut b = stream_for(7, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert!(same < 2);
    }

    #[test]
    fn complex_gaussian_moments() {
        let mut rng = stream_for(11, 0);
        let n = 200_000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut mag2 = 0.0;
        for _ in 0..n {
            let z = complex_gaussian(&mut rng);
            mean += z;
            mag2 += z.norm_sqr();
        }
        mean /= n as f64;
        mag2 /= n as f64;
        assert!(mean.norm() < 5.0 / math::sqrt(n as f64));
        assert!((mag2 - 1.0).abs() < 5.0 / math::sqrt(n as f64));
    }

    #[test]
    fn uniform_pos_never_zero() {
        let mut rng = stream_for(1, 0);
        for _ in 0..10_000 {
            let u = uniform_pos(&mut rng);
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
