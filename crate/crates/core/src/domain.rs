//! Points in the unit box and the seeded random streams used to generate them.
//!
//! Every stochastic routine in this crate takes an explicit [`RngStream`].
//! A stream is identified by `(seed, stream id)`; sub-streams are derived by
//! hashing an index into the stream id, so concurrent workers can each own a
//! stream without sharing mutable state.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A location in `[0, 1]^d`.
#[derive(Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    /// Validates that every coordinate lies in `[0, 1]`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        for (index, &value) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfBounds { index, value });
            }
        }
        Ok(Self(coords))
    }

    /// Builds a point by clamping each coordinate into `[0, 1]`.
    ///
    /// Non-finite coordinates are mapped to 0.5.
    pub fn clamped(mut coords: Vec<f64>) -> Self {
        assert!(!coords.is_empty(), "a point needs at least one coordinate");
        for c in &mut coords {
            *c = if c.is_finite() { c.clamp(0.0, 1.0) } else { 0.5 };
        }
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute coordinate difference.
    pub fn linf_distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sq_distance(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Lexicographic comparison of coordinates.
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.0).finish()
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// SplitMix64 finalizer, used to derive stream ids and scramble seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream keyed by `(seed, stream id)`.
///
/// Backed by ChaCha8, whose native 64-bit stream selector gives independent
/// sequences for distinct ids under one seed.
#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A stream that depends only on `(seed, stream id, index)`, not on how
    /// many values have been drawn from `self`.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(self.seed, mix64(self.stream ^ mix64(index.wrapping_add(1))))
    }

    /// Draws a fresh child stream from the current position of `self`.
    pub fn fork(&mut self) -> RngStream {
        let id = self.rng.next_u64();
        RngStream::new(self.seed, mix64(self.stream ^ id))
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream", &self.stream)
            .finish_non_exhaustive()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidDimension(0))
    } else {
        Ok(())
    }
}

/// A point with i.i.d. uniform coordinates.
pub fn uniform_point(rng: &mut RngStream, d: usize) -> Result<Point> {
    check_dim(d)?;
    Ok(Point((0..d).map(|_| rng.uniform()).collect()))
}

/// Owen-scrambled Sobol' sequence in `[0, 1)^d`.
///
/// Dimensions beyond the 256 tabulated direction-number sets are padded by
/// re-seeding the scramble for each block of 256, which keeps every block
/// stratified and decorrelates blocks from each other.
#[derive(Clone, Debug)]
pub struct SobolSequence {
    dim: usize,
    seed: u32,
}

const SOBOL_BLOCK: usize = sobol_burley::NUM_DIMENSIONS as usize;
const SOBOL_MAX_LEN: usize = 1 << 16;

impl SobolSequence {
    pub fn new(d: usize, rng: &mut RngStream) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            dim: d,
            seed: rng.next_u32(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `index`-th point of the sequence.
    pub fn point(&self, index: usize) -> Result<Point> {
        if index >= SOBOL_MAX_LEN {
            return Err(Error::SequenceExhausted(index));
        }
        let coords = (0..self.dim)
            .map(|j| {
                let block = (j / SOBOL_BLOCK) as u32;
                let seed = self.seed.wrapping_add(block.wrapping_mul(0x9E37_79B9));
                let v = sobol_burley::sample(index as u32, (j % SOBOL_BLOCK) as u32, seed);
                f64::from(v).clamp(0.0, 1.0)
            })
            .collect();
        Ok(Point(coords))
    }

    /// Points `start .. start + n`.
    pub fn points(&self, start: usize, n: usize) -> Result<Vec<Point>> {
        (start..start + n).map(|i| self.point(i)).collect()
    }
}

/// The first `n` points of a freshly scrambled Sobol' sequence.
pub fn sobol_points(n: usize, d: usize, rng: &mut RngStream) -> Result<Vec<Point>> {
    SobolSequence::new(d, rng)?.points(0, n)
}
