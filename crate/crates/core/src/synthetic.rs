//! Synthetic instances with `A_ij ~ U[-1, 1]`, `d_i ~ margin + U[0, 1]`,
//! `b_i ~ U[-1, 1]`.
//!
//! Entries are generated on demand by seeking a ChaCha8 stream to the word
//! position of the entry, so a query costs O(1) regardless of `n` and the
//! instance never has to be stored. With `margin = 0` the symmetric part of
//! `A` dominates `n diag(d)` along the coordinates with the smallest `d_i`
//! and most instances are unbounded below; a margin of about one half keeps
//! `(A + A^T)/2 + n diag(d)` positive definite for the sizes used in the
//! benchmarks.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Result};
use crate::problem::{DenseProblem, EntryCost, QuadraticProblem};
use crate::rng::{stream_rng, unit_f64, Stream};

/// Margin added to `d` by the benchmark harness.
pub const DEFAULT_D_MARGIN: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    n: usize,
    seed: u64,
    d_margin: f64,
}

impl SyntheticProblem {
    pub fn new(n: usize, seed: u64, d_margin: f64) -> Result<Self> {
        if n == 0 {
            return Err(contract("dimension must be positive"));
        }
        if !d_margin.is_finite() || d_margin < 0.0 {
            return Err(contract("d margin must be finite and non-negative"));
        }
        Ok(Self { n, seed, d_margin })
    }

    fn seeked(&self, stream: Stream, entry: u128) -> ChaCha8Rng {
        let mut rng = stream_rng(self.seed, stream);
        // one u64 (two 32-bit words) per entry
        rng.set_word_pos(2 * entry);
        rng
    }

    fn draw(&self, stream: Stream, entry: u128) -> f64 {
        unit_f64(self.seeked(stream, entry).next_u64())
    }
}

impl QuadraticProblem for SyntheticProblem {
    fn dim(&self) -> usize {
        self.n
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        let entry = i as u128 * self.n as u128 + j as u128;
        2.0 * self.draw(Stream::SynthMatrix, entry) - 1.0
    }
    fn d(&self, i: usize) -> f64 {
        self.d_margin + self.draw(Stream::SynthDiag, i as u128)
    }
    fn b(&self, i: usize) -> f64 {
        2.0 * self.draw(Stream::SynthLinear, i as u128) - 1.0
    }
    fn cost_hint(&self) -> EntryCost {
        EntryCost::Constant
    }

    /// Streams each row sequentially; values are identical to [`Self::a`].
    fn materialize(&self) -> Result<DenseProblem> {
        let n = self.n;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            let mut rng = self.seeked(Stream::SynthMatrix, i as u128 * n as u128);
            a.extend((0..n).map(|_| 2.0 * unit_f64(rng.next_u64()) - 1.0));
        }
        let mut rng = self.seeked(Stream::SynthDiag, 0);
        let d = (0..n).map(|_| self.d_margin + unit_f64(rng.next_u64())).collect();
        let mut rng = self.seeked(Stream::SynthLinear, 0);
        let b = (0..n).map(|_| 2.0 * unit_f64(rng.next_u64()) - 1.0).collect();
        DenseProblem::new(n, a, d, b)
    }
}
