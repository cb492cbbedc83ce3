use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Seeded, platform-independent random stream (ChaCha8).
///
/// The position in the stream is part of its state, so a stream can be
/// checkpointed with [`RngStream::position`] and restored with
/// [`RngStream::at_position`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
    draws: u64,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Opaque stream position `(word_pos, draws)`.
    pub fn position(&self) -> (u128, u64) {
        (self.inner.get_word_pos(), self.draws)
    }

    pub fn at_position(seed: u64, word_pos: u128, draws: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_word_pos(word_pos);
        RngStream { seed, inner, draws }
    }

    /// Independent child stream, derived from this stream's next output.
    pub fn fork(&mut self) -> RngStream {
        RngStream::new(self.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: u32, hi: u32) -> u32 {
        self.draws += 1;
        self.inner.random_range(lo..=hi)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        self.draws += 1;
        Normal::new(mean, std_dev)
            .expect("finite, non-negative standard deviation")
            .sample(&mut self.inner)
    }

    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        use rand::seq::SliceRandom;
        self.draws += 1;
        items.shuffle(&mut self.inner);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngStream::new(7);
        let mut b = RngStream::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn position_restores_stream() {
        let mut a = RngStream::new(11);
        for _ in 0..37 {
            a.uniform();
        }
        let (pos, draws) = a.position();
        let mut b = RngStream::at_position(11, pos, draws);
        assert_eq!(a, b);
        assert_eq!(a.normal(0.0, 1.0).to_bits(), b.normal(0.0, 1.0).to_bits());
    }
}
