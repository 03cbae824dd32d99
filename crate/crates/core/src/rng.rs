//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(seed, lane, stream_index, position)`:
//! the seed and lane key a ChaCha8 block function, the stream index selects the
//! ChaCha stream, and the position is the 64-bit word offset inside it. The
//! value at a given address never depends on how work is scheduled across
//! threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Independent purposes a single sample draws randomness for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Lane {
    /// The (possibly infinite) word `w`.
    Word = 0,
    /// The reference word `w'`.
    WordPrime = 1,
    /// Coin flips and other auxiliary draws.
    Fortune = 2,
    /// Random lengths (binomial sampling).
    Length = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// The stream `offset` places further along; used to carve disjoint
    /// index ranges out of one master seed.
    pub fn advanced(self, offset: u64) -> Self {
        Self {
            stream_index: self.stream_index.wrapping_add(offset),
            ..self
        }
    }

    pub fn generator(&self, lane: Lane) -> Generator {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(lane as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        Generator { rng }
    }

    /// Random access to the raw 64-bit value at `position` of `lane`.
    pub fn u64_at(&self, lane: Lane, position: u64) -> u64 {
        let mut g = self.generator(lane);
        g.rng.set_word_pos(u128::from(position) * 2);
        g.next_u64()
    }

    /// Random access to the symbol at `position` of `lane`; equal to the
    /// `position`-th symbol produced sequentially by [`Generator::symbol`].
    pub fn symbol_at(&self, lane: Lane, k: u32, position: u64) -> u32 {
        reduce(self.u64_at(lane, position), k)
    }
}

/// Sequential reader over one lane of an [`RngStream`].
#[derive(Debug, Clone)]
pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform symbol in `0..k`. Consumes exactly one 64-bit word.
    #[inline]
    pub fn symbol(&mut self, k: u32) -> u32 {
        reduce(self.next_u64(), k)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `num / den`, decided on integers.
    #[inline]
    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        debug_assert!(den > 0 && num <= den);
        reduce_u64(self.next_u64(), den) < num
    }
}

// Multiply-shift reduction; the bias is at most k / 2^64.
#[inline]
fn reduce(x: u64, k: u32) -> u32 {
    ((u128::from(x) * u128::from(k)) >> 64) as u32
}

#[inline]
fn reduce_u64(x: u64, n: u64) -> u64 {
    ((u128::from(x) * u128::from(n)) >> 64) as u64
}

/// Exact binomial sampler by CDF inversion, walking outward from the mode.
#[derive(Debug, Clone)]
pub struct BinomialSampler {
    n: u64,
    p: f64,
    mode: u64,
    pmf_mode: f64,
}

impl BinomialSampler {
    pub fn new(n: u64, p: f64) -> crate::Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return crate::error::invalid(format!("binomial p must lie in (0, 1], got {p}"));
        }
        let mode = if p == 1.0 {
            n
        } else {
            (((n + 1) as f64) * p).floor().min(n as f64) as u64
        };
        let pmf_mode = if p == 1.0 {
            1.0
        } else {
            // ln C(n, mode) accumulated term by term; exact enough for n <= 10^6.
            let mut ln_binom = 0.0;
            for i in 1..=mode {
                ln_binom += ((n - mode + i) as f64).ln() - (i as f64).ln();
            }
            (ln_binom + mode as f64 * p.ln() + (n - mode) as f64 * (1.0 - p).ln()).exp()
        };
        Ok(Self { n, p, mode, pmf_mode })
    }

    pub fn sample(&self, g: &mut Generator) -> u64 {
        if self.p == 1.0 {
            return self.n;
        }
        let ratio = self.p / (1.0 - self.p);
        let mut u = g.unit();
        if u < self.pmf_mode {
            return self.mode;
        }
        u -= self.pmf_mode;
        let (mut lo, mut lo_pmf) = (self.mode, self.pmf_mode);
        let (mut hi, mut hi_pmf) = (self.mode, self.pmf_mode);
        loop {
            let mut moved = false;
            if lo > 0 {
                // pmf(j-1) = pmf(j) * j / ((n - j + 1) * ratio)
                lo_pmf *= lo as f64 / ((self.n - lo + 1) as f64 * ratio);
                lo -= 1;
                moved = true;
                if u < lo_pmf {
                    return lo;
                }
                u -= lo_pmf;
            }
            if hi < self.n {
                // pmf(j+1) = pmf(j) * (n - j) / (j + 1) * ratio
                hi_pmf *= (self.n - hi) as f64 / (hi + 1) as f64 * ratio;
                hi += 1;
                moved = true;
                if u < hi_pmf {
                    return hi;
                }
                u -= hi_pmf;
            }
            if !moved {
                // Floating-point leftover mass; land on the mode.
                return self.mode;
            }
        }
    }
}
