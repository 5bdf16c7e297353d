//! Seeded operand generator.
//!
//! A 64-bit linear congruential generator with Knuth's MMIX constants
//! (`state = state * 6364136223846793005 + 1442695040888963407 mod 2^64`).
//! Each draw advances the state once and maps its top 53 bits to `[0, 1)`,
//! then affinely to `[-1, 1)`. The sequence is identical on every platform.

use crate::element::Element;

const MULTIPLIER: u64 = 6364136223846793005;
const INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        let mut rng = Lcg64 { state: seed };
        // decorrelate small seeds
        rng.next_u64();
        rng
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_unit() - 1.0
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + (self.next_unit() * (hi - lo + 1) as f64) as usize
    }

    pub fn fill<T: Element>(&mut self, buf: &mut [T]) {
        for x in buf {
            *x = T::from_f64(self.next_symmetric());
        }
    }

    /// Small integers in `[-bound, bound]`, exactly representable in both
    /// element types so products and sums stay exact.
    pub fn fill_int<T: Element>(&mut self, buf: &mut [T], bound: i64) {
        for x in buf {
            let v = self.next_u64() >> 33;
            let v = (v % (2 * bound as u64 + 1)) as i64 - bound;
            *x = T::from_f64(v as f64);
        }
    }
}

pub fn random_matrix<T: Element>(rows: usize, cols: usize, rng: &mut Lcg64) -> Vec<T> {
    let mut v = vec![T::ZERO; rows * cols];
    rng.fill(&mut v);
    v
}

/// Order-sensitive fingerprint of a buffer's bit patterns (FNV-1a over words).
pub fn checksum<T: Element>(data: &[T]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for x in data {
        h ^= x.bits();
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
