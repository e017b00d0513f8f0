//! Seeded, stream-indexed randomness.
//!
//! Each `(seed, stream_id)` pair selects an independent ChaCha8 keystream,
//! so parallel tasks can be assigned streams by index and produce the same
//! numbers regardless of scheduling or thread count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::system::Symbol;

#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { rng, stream_id }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// I.i.d. symbols, `Minus` with probability `p_minus`.
///
/// Degenerate probabilities 0 and 1 are allowed here (the walk simulations
/// use them); [`crate::ProbVector`] is stricter.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    source: RngStream,
    p_minus: f64,
}

impl SymbolStream {
    pub fn new(source: RngStream, p_minus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_minus) {
            return Err(domain(format!("p_minus = {p_minus} must lie in [0, 1]")));
        }
        Ok(Self { source, p_minus })
    }

    pub fn next_symbol(&mut self) -> Symbol {
        if self.source.next_f64() < self.p_minus {
            Symbol::Minus
        } else {
            Symbol::Plus
        }
    }
}

impl Iterator for SymbolStream {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        Some(self.next_symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(seed: u64, id: u64, p: f64) -> SymbolStream {
        SymbolStream::new(RngStream::new(seed, id), p).unwrap()
    }

    #[test]
    fn degenerate_probabilities() {
        assert!(stream(1, 0, 1.0).take(1000).all(|s| s == Symbol::Minus));
        assert!(stream(1, 0, 0.0).take(1000).all(|s| s == Symbol::Plus));
    }

    #[test]
    fn fair_frequency_within_three_sigma() {
        let n = 1_000_000;
        let minus = stream(0, 0, 0.5).take(n).filter(|&s| s == Symbol::Minus).count();
        let freq = minus as f64 / n as f64;
        assert!((0.4985..=0.5015).contains(&freq), "{freq}");
    }

    #[test]
    fn reproducible_and_distinct_streams() {
        let a: Vec<u64> = (0..64).map({
            let mut r = RngStream::new(42, 7);
            move |_| r.next_u64()
        }).collect();
        let b: Vec<u64> = (0..64).map({
            let mut r = RngStream::new(42, 7);
            move |_| r.next_u64()
        }).collect();
        let c: Vec<u64> = (0..64).map({
            let mut r = RngStream::new(42, 8);
            move |_| r.next_u64()
        }).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unit_interval() {
        let mut r = RngStream::new(3, 3);
        for _ in 0..10_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(SymbolStream::new(RngStream::new(0, 0), 1.5).is_err());
    }
}
