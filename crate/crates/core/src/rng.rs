//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, counter)`. A stream key is
//! derived from the run seed plus a [`Stream`] tag, and the `k`-th output of a
//! stream is `mix(mix(k ^ key0) ^ key1)` where `mix` is the SplitMix64
//! finalizer. The finalizer is a bijection on `u64`, so a stream never repeats
//! within 2^64 draws, and distinct streams are decorrelated by the keyed
//! double mix.
//!
//! Stream splitting convention:
//!
//! * `Stream::Environment(i)` drives the site field of environment replica `i`.
//! * `Stream::Walker(i)` drives the moves of walker replica `i`.
//! * `Stream::Clock(i)` drives holding times for continuizing replica `i`.
//! * `Stream::Aux(tag, i)` is free for experiment-specific draws.
//!
//! Site statuses are not drawn sequentially at all: the status of site `x` in
//! an environment stream is a keyed hash of its coordinates (see
//! [`SiteHasher`]), so lazily grown environments do not depend on query order.

use rand::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps 64 random bits onto `[0, 1)` with 53-bit resolution.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Environment(u64),
    Walker(u64),
    Clock(u64),
    Aux(u64, u64),
}

impl Stream {
    fn tag(self) -> (u64, u64) {
        match self {
            Stream::Environment(i) => (1, i),
            Stream::Walker(i) => (2, i),
            Stream::Clock(i) => (3, i),
            Stream::Aux(t, i) => (4u64.wrapping_add(t.wrapping_mul(GOLDEN)), i),
        }
    }

    /// The pair of mixing keys for this stream under `seed`.
    pub fn keys(self, seed: u64) -> (u64, u64) {
        let (domain, index) = self.tag();
        let k0 = mix64(seed ^ mix64(domain.wrapping_mul(GOLDEN)));
        let k1 = mix64(k0.wrapping_add(mix64(index ^ 0x5851_f42d_4c95_7f2d)));
        (k0, mix64(k1 ^ GOLDEN))
    }
}

/// Keyed counter-mode generator. Implements [`RngCore`] so the usual `rand`
/// distributions apply.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key0: u64,
    key1: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let (key0, key1) = stream.keys(seed);
        CounterRng {
            key0,
            key1,
            counter: 0,
        }
    }

    /// Output at an arbitrary counter position without advancing.
    #[inline]
    pub fn at(&self, counter: u64) -> u64 {
        mix64(mix64(counter ^ self.key0) ^ self.key1)
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn set_counter(&mut self, counter: u64) {
        self.counter = counter;
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform index in `0..n`, `n > 0`, by multiply-shift.
    #[inline]
    pub fn below(&mut self, n: u32) -> u32 {
        (((self.next_u64() >> 32) * n as u64) >> 32) as u32
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Keyed hash of lattice coordinates, used as the "counter" for site draws.
#[derive(Clone, Copy, Debug)]
pub struct SiteHasher {
    key0: u64,
    key1: u64,
}

impl SiteHasher {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let (key0, key1) = stream.keys(seed);
        SiteHasher { key0, key1 }
    }

    #[inline]
    pub fn bits(&self, coords: &[i32]) -> u64 {
        let mut h = self.key0;
        for &c in coords {
            h = mix64(h ^ (c as u32 as u64).wrapping_mul(GOLDEN));
        }
        mix64(h ^ self.key1)
    }

    #[inline]
    pub fn uniform(&self, coords: &[i32]) -> f64 {
        unit_f64(self.bits(coords))
    }
}
