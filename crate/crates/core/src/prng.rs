//! Splittable 64-bit linear congruential generator.
//!
//! Every operation takes an [`RngState`] by value and returns fresh state, so
//! a state can be shared freely between threads and replayed at will. No
//! statistical or cryptographic guarantees are made beyond determinism and
//! distinctness of split branches.

use std::fmt;

use thiserror::Error;

/// LCG multiplier (Steele & Vigna, "Computationally easy, spectrally good
/// multipliers").
pub const MULTIPLIER: u64 = 0xd134_2543_de82_ef95;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const SPLIT_STREAM_XOR: u64 = 0xbf58_476d_1ce4_e5b9;
const OUTPUT_MUL: u64 = 0xda94_2042_e4dd_58b5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("empty range: lo ({lo}) > hi ({hi})")]
    Empty { lo: i64, hi: i64 },
}

/// State of the generator: the LCG word plus a per-stream odd increment.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    state: u64,
    stream: u64,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn scramble(state: u64) -> u64 {
    let x = (state ^ (state >> 32)).wrapping_mul(OUTPUT_MUL);
    x ^ (x >> 29)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            state: mix64(seed),
            stream: mix64(seed.wrapping_add(GOLDEN_GAMMA)) | 1,
        }
    }

    /// Builds a state from raw words. The stream is forced odd.
    pub fn from_parts(state: u64, stream: u64) -> Self {
        RngState {
            state,
            stream: stream | 1,
        }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    fn step(self) -> Self {
        RngState {
            state: self
                .state
                .wrapping_mul(MULTIPLIER)
                .wrapping_add(self.stream),
            stream: self.stream,
        }
    }

    /// Advances once and returns the scrambled output word.
    pub fn next_u64(self) -> (Self, u64) {
        let next = self.step();
        (next, scramble(next.state))
    }

    /// Derives two distinct generators. The left branch continues this
    /// stream; the right branch gets a mixed state and a different stream.
    pub fn split(self) -> (Self, Self) {
        let advanced = self.step();
        let right = RngState {
            state: mix64(advanced.state),
            stream: (self.stream ^ SPLIT_STREAM_XOR) | 1,
        };
        (advanced, right)
    }

    /// Uniform integer in `[lo, hi]` using Lemire's multiply-shift with
    /// rejection, so the result carries no modulo bias.
    pub fn range(self, lo: i64, hi: i64) -> Result<(Self, i64), RangeError> {
        if lo > hi {
            return Err(RangeError::Empty { lo, hi });
        }
        let span = (hi as i128 - lo as i128) as u128 + 1;
        if span > u64::MAX as u128 {
            let (next, x) = self.next_u64();
            return Ok((next, x as i64));
        }
        let (next, offset) = self.below(span as u64);
        Ok((next, (lo as i128 + offset as i128) as i64))
    }

    /// Uniform integer in `[0, bound)`. `bound` must be non-zero.
    pub fn below(self, bound: u64) -> (Self, u64) {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        let mut rng = self;
        loop {
            let (next, x) = rng.next_u64();
            rng = next;
            let m = (x as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (rng, (m >> 64) as u64);
            }
        }
    }
}

impl fmt::Debug for RngState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RngState({:#018x}, {:#018x})", self.state, self.stream)
    }
}

pub fn rng_new(seed: u64) -> RngState {
    RngState::new(seed)
}

pub fn rng_next(r: RngState) -> (RngState, u64) {
    r.next_u64()
}

pub fn rng_split(r: RngState) -> (RngState, RngState) {
    r.split()
}

pub fn rng_range(r: RngState, lo: i64, hi: i64) -> Result<(RngState, i64), RangeError> {
    r.range(lo, hi)
}
