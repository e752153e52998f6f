//! Seeded, named random streams.
//!
//! Every stochastic routine in the crate takes an explicit [`RngStream`].
//! A stream is fully determined by `(seed, stream_id)` and the generator named
//! by [`ALGORITHM_ID`]; changing the generator means bumping that identifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Identifier of the generator behind every stream. Recorded in reports.
pub const ALGORITHM_ID: &str = "chacha8-v1";

/// One independent, reproducible stream of random draws.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn algorithm_id(&self) -> &'static str {
        ALGORITHM_ID
    }

    /// Uniform integer on `[lo, hi]`, both ends inclusive.
    pub fn draw_uniform_int(&mut self, lo: i64, hi: i64) -> Result<i64> {
        if lo > hi {
            return Err(Error::InvalidRange(format!("lo {lo} > hi {hi}")));
        }
        Ok(self.inner.random_range(lo..=hi))
    }

    /// Uniform index on `[0, n - 1]`.
    pub fn draw_index(&mut self, n: usize) -> Result<usize> {
        if n < 1 {
            return Err(Error::InvalidRange("draw_index needs n >= 1".into()));
        }
        Ok(self.inner.random_range(0..n))
    }

    /// Sample from `N(mean, variance)`.
    ///
    /// One standard-normal draw is consumed even when `variance == 0`, in which
    /// case `mean` is returned exactly. Stream position therefore never
    /// depends on the data.
    pub fn draw_gaussian(&mut self, mean: f64, variance: f64) -> Result<f64> {
        if !(variance >= 0.0) {
            return Err(Error::InvalidVariance(variance));
        }
        let z: f64 = self.inner.sample(StandardNormal);
        if variance == 0.0 {
            return Ok(mean);
        }
        Ok(mean + variance.sqrt() * z)
    }

    /// Uniform real on `[0, 1)`.
    pub fn draw_unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `true` with probability `p` (clamped to `[0, 1]`).
    pub fn draw_bernoulli(&mut self, p: f64) -> bool {
        self.draw_unit() < p
    }

    /// Fisher-Yates shuffle: for every position from the tail, one
    /// `draw_index(pos + 1)` picks the swap partner.
    pub fn shuffle_in_place<T>(&mut self, v: &mut [T]) {
        for pos in (0..v.len()).rev() {
            // pos + 1 >= 1, cannot fail
            let j = self.inner.random_range(0..pos + 1);
            v.swap(pos, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ranges() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(rng.draw_uniform_int(3, 3).unwrap(), 3);
        assert_eq!(rng.draw_index(1).unwrap(), 0);
        assert!(matches!(rng.draw_uniform_int(4, 3), Err(Error::InvalidRange(_))));
        assert!(matches!(rng.draw_index(0), Err(Error::InvalidRange(_))));
    }

    #[test]
    fn zero_variance_returns_mean_exactly() {
        let mut rng = RngStream::new(9, 3);
        assert_eq!(rng.draw_gaussian(0.55, 0.0).unwrap(), 0.55);
        assert!(matches!(
            rng.draw_gaussian(0.0, -1.0),
            Err(Error::InvalidVariance(_))
        ));
        assert!(rng.draw_gaussian(0.0, f64::NAN).is_err());
    }

    #[test]
    fn same_seed_and_stream_reproduce() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let xs: Vec<i64> = (0..32).map(|_| a.draw_uniform_int(-5, 100).unwrap()).collect();
        let ys: Vec<i64> = (0..32).map(|_| b.draw_uniform_int(-5, 100).unwrap()).collect();
        assert_eq!(xs, ys);
        assert_eq!(
            a.draw_gaussian(0.0, 1.0).unwrap().to_bits(),
            b.draw_gaussian(0.0, 1.0).unwrap().to_bits()
        );
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let xs: Vec<usize> = (0..16).map(|_| a.draw_index(1000).unwrap()).collect();
        let ys: Vec<usize> = (0..16).map(|_| b.draw_index(1000).unwrap()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn shuffle_trivial_cases() {
        let mut rng = RngStream::new(5, 0);
        let mut c = [3, 3, 3];
        rng.shuffle_in_place(&mut c);
        assert_eq!(c, [3, 3, 3]);
        let mut one = [8];
        rng.shuffle_in_place(&mut one);
        assert_eq!(one, [8]);
        let mut empty: [u8; 0] = [];
        rng.shuffle_in_place(&mut empty);
    }
}
