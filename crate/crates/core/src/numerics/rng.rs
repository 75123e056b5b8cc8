use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Seeded pseudorandom generator.
///
/// Backed by ChaCha8 (`rand_chacha`), seeded through `seed_from_u64`.
/// Independent substreams of one seed use ChaCha's 64-bit stream id, so a
/// single master seed can feed several consumers without their draws
/// interleaving. Gaussian draws use `rand_distr::StandardNormal`.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Stream `stream` of the generator family rooted at `seed`.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// One draw in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `n` i.i.d. draws in `[lo, hi)`; every draw equals `lo` when `lo == hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        check_interval(lo, hi)?;
        let width = hi - lo;
        Ok((0..n).map(|_| lo + width * self.next_f64()).collect())
    }

    /// One draw in `[lo, hi)`.
    pub fn uniform_one(&mut self, lo: f64, hi: f64) -> Result<f64> {
        check_interval(lo, hi)?;
        Ok(lo + (hi - lo) * self.next_f64())
    }

    /// Fisher–Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i + 1);
            idx.swap(i, j);
        }
        idx
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Argument(format!(
            "uniform interval [{lo}, {hi}) is not a finite range with lo <= hi"
        )));
    }
    Ok(())
}

/// Mixes a master seed with an index (SplitMix64 finalizer).
///
/// Used to give every grid cell its own seed independent of scheduling order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_interval() {
        let mut rng = Rng::new(3);
        assert!(rng.uniform(0.25, 0.25, 100).unwrap().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(Rng::new(0).uniform(1.0, 0.0, 3).is_err());
        assert!(Rng::new(0).uniform(0.0, f64::NAN, 3).is_err());
    }

    #[test]
    fn empirical_mean_of_unit_uniform() {
        let draws = Rng::new(42).uniform(0.0, 1.0, 1_000_000).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!(draws.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn same_seed_same_sequence() {
        let a = Rng::new(99).uniform(0.0, 1.0, 100_000).unwrap();
        let b = Rng::new(99).uniform(0.0, 1.0, 100_000).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn substreams_differ() {
        let a = Rng::substream(5, 0).uniform(0.0, 1.0, 8).unwrap();
        let b = Rng::substream(5, 1).uniform(0.0, 1.0, 8).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut p = Rng::new(1).permutation(1000);
        p.sort_unstable();
        assert!(p.iter().enumerate().all(|(i, &v)| i == v));
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
