//! The fitness-oracle interface shared by the engine and the analytics.

use alloc::vec::Vec;

use crate::population::{BitString, Bits};
use crate::rng::RandomStream;

/// A (possibly stochastic) fitness function over fixed-length chromosomes.
///
/// `evaluate` receives `Some(rng)` for a regular draw and `None` for the
/// noiseless evaluation, which must return the expectation of the draw.
/// Deterministic oracles simply ignore the stream.
///
/// Callers guarantee `g.len() == self.chrom_len()`.
pub trait Fitness {
    fn chrom_len(&self) -> usize;

    fn evaluate(&self, g: Bits<'_>, rng: Option<&mut RandomStream>) -> f64;

    fn expected(&self, g: Bits<'_>) -> f64 {
        self.evaluate(g, None)
    }
}

impl<F: Fitness + ?Sized> Fitness for &F {
    fn chrom_len(&self) -> usize {
        (**self).chrom_len()
    }

    fn evaluate(&self, g: Bits<'_>, rng: Option<&mut RandomStream>) -> f64 {
        (**self).evaluate(g, rng)
    }
}

/// Wraps a deterministic closure as an oracle.
pub struct FnFitness<F> {
    len: usize,
    f: F,
}

impl<F: Fn(Bits<'_>) -> f64> FnFitness<F> {
    pub fn new(len: usize, f: F) -> Self {
        Self { len, f }
    }
}

impl<F: Fn(Bits<'_>) -> f64> Fitness for FnFitness<F> {
    fn chrom_len(&self) -> usize {
        self.len
    }

    fn evaluate(&self, g: Bits<'_>, _rng: Option<&mut RandomStream>) -> f64 {
        (self.f)(g)
    }
}

/// Explicit table of `2^len` fitness values, indexed by the chromosome read
/// as an integer with locus `j` at bit `j`.
#[derive(Debug, Clone)]
pub struct TableFitness {
    len: usize,
    values: Vec<f64>,
}

impl TableFitness {
    pub fn new(len: usize, values: Vec<f64>) -> Self {
        assert!(len < 32 && values.len() == 1usize << len);
        Self { len, values }
    }

    /// Values i.i.d. standard normal.
    pub fn random(len: usize, rng: &mut RandomStream) -> Self {
        Self::new(len, (0..1usize << len).map(|_| rng.normal()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Fitness for TableFitness {
    fn chrom_len(&self) -> usize {
        self.len
    }

    fn evaluate(&self, g: Bits<'_>, _rng: Option<&mut RandomStream>) -> f64 {
        self.values[g.words()[0] as usize]
    }
}

/// Constant function, chiefly for degenerate-case tests.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFitness {
    pub len: usize,
    pub value: f64,
}

impl Fitness for ConstantFitness {
    fn chrom_len(&self) -> usize {
        self.len
    }

    fn evaluate(&self, _g: Bits<'_>, _rng: Option<&mut RandomStream>) -> f64 {
        self.value
    }
}

/// Exhaustive maximum of the noiseless fitness for `len <= 24`.
pub fn brute_force_optimum<F: Fitness + ?Sized>(f: &F) -> Option<(BitString, f64)> {
    let len = f.chrom_len();
    if len == 0 || len > 24 {
        return None;
    }
    let mut best: Option<(u64, f64)> = None;
    for x in 0..1u64 << len {
        let v = f.expected(Bits::new(core::slice::from_ref(&x), len));
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((x, v));
        }
    }
    best.map(|(x, v)| (BitString::from_u64(x, len), v))
}
