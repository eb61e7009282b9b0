//! Bit-packed chromosomes and populations.
//!
//! A chromosome of length `len` occupies `ceil(len / 64)` words; locus `j`
//! lives in word `j / 64` at bit `j % 64`. Padding bits past `len` are always
//! zero. Interfaces only ever expose logical `(individual, locus)` indexing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::RandomStream;
use crate::{Error, Result};

pub(crate) const WORD_BITS: usize = 64;

pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

pub(crate) fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Borrowed view of one chromosome.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Bits<'a> {
    words: &'a [u64],
    len: usize,
}

impl<'a> Bits<'a> {
    /// Wraps packed words. `words` must hold at least `ceil(len / 64)` words.
    pub fn new(words: &'a [u64], len: usize) -> Self {
        debug_assert!(words.len() >= words_for(len));
        Self { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, locus: usize) -> bool {
        debug_assert!(locus < self.len);
        (self.words[locus / WORD_BITS] >> (locus % WORD_BITS)) & 1 == 1
    }

    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + 'a {
        let this = *self;
        (0..this.len).map(move |j| this.get(j))
    }

    pub fn to_bit_string(&self) -> BitString {
        BitString {
            words: self.words[..words_for(self.len)].to_vec(),
            len: self.len,
        }
    }
}

impl fmt::Debug for Bits<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Bits<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Owned chromosome.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            s.set(j, b);
        }
        s
    }

    /// Builds a chromosome whose locus `j` is bit `j` of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD_BITS);
        let mut s = Self::zeros(len);
        if len > 0 {
            s.words[0] = value & tail_mask(len);
        }
        s
    }

    /// Parses a `0`/`1` string, leftmost character is locus 0.
    pub fn parse(text: &str) -> Option<Self> {
        let mut s = Self::zeros(text.len());
        for (j, c) in text.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => s.set(j, true),
                _ => return None,
            }
        }
        Some(s)
    }

    pub fn random(len: usize, rng: &mut RandomStream) -> Self {
        let mut s = Self::zeros(len);
        for w in &mut s.words {
            *w = rng.next_word();
        }
        if let Some(last) = s.words.last_mut() {
            *last &= tail_mask(len);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, locus: usize) -> bool {
        self.as_bits().get(locus)
    }

    pub fn set(&mut self, locus: usize, value: bool) {
        assert!(locus < self.len);
        let (w, b) = (locus / WORD_BITS, locus % WORD_BITS);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.as_bits().count_ones()
    }

    pub fn flip(&mut self, locus: usize) {
        assert!(locus < self.len);
        self.words[locus / WORD_BITS] ^= 1 << (locus % WORD_BITS);
    }

    pub fn as_bits(&self) -> Bits<'_> {
        Bits::new(&self.words, self.len)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bitwise complement within `len`.
    pub fn complement(&self) -> Self {
        let mut s = self.clone();
        for w in &mut s.words {
            *w = !*w;
        }
        if let Some(last) = s.words.last_mut() {
            *last &= tail_mask(self.len);
        }
        s
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.as_bits(), f)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.as_bits(), f)
    }
}

/// An `N x len` bit matrix, one chromosome per row.
#[derive(Clone, PartialEq, Eq)]
pub struct Population {
    size: usize,
    len: usize,
    stride: usize,
    words: Vec<u64>,
}

impl Population {
    fn check_dims(size: usize, len: usize) -> Result<()> {
        if size < 2 || size % 2 == 1 {
            return Err(Error::OddPopulation(size));
        }
        if len == 0 {
            return Err(Error::InvalidDimension(
                "chromosome length must be positive",
            ));
        }
        Ok(())
    }

    pub fn zeros(size: usize, len: usize) -> Result<Self> {
        Self::check_dims(size, len)?;
        let stride = words_for(len);
        Ok(Self {
            size,
            len,
            stride,
            words: vec![0; size * stride],
        })
    }

    /// Every bit independently uniform.
    pub fn random(size: usize, len: usize, rng: &mut RandomStream) -> Result<Self> {
        let mut pop = Self::zeros(size, len)?;
        let mask = tail_mask(len);
        for row in pop.words.chunks_mut(pop.stride) {
            for w in row.iter_mut() {
                *w = rng.next_word();
            }
            *row.last_mut().unwrap() &= mask;
        }
        Ok(pop)
    }

    pub fn from_rows(rows: &[BitString]) -> Result<Self> {
        let len = rows.first().map_or(0, BitString::len);
        let mut pop = Self::zeros(rows.len(), len)?;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    got: r.len(),
                });
            }
            pop.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(pop)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn chrom_len(&self) -> usize {
        self.len
    }

    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    pub fn row(&self, i: usize) -> Bits<'_> {
        Bits::new(
            &self.words[i * self.stride..(i + 1) * self.stride],
            self.len,
        )
    }

    pub fn rows(&self) -> impl Iterator<Item = Bits<'_>> {
        self.words
            .chunks(self.stride)
            .map(move |w| Bits::new(w, self.len))
    }

    pub(crate) fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn get(&self, individual: usize, locus: usize) -> bool {
        self.row(individual).get(locus)
    }

    pub fn set(&mut self, individual: usize, locus: usize, value: bool) {
        assert!(locus < self.len);
        let stride = self.stride;
        let w = &mut self.words[individual * stride + locus / WORD_BITS];
        let b = locus % WORD_BITS;
        if value {
            *w |= 1 << b;
        } else {
            *w &= !(1 << b);
        }
    }

    pub fn one_count(&self, locus: usize) -> Result<usize> {
        if locus >= self.len {
            return Err(Error::LocusOutOfRange {
                locus,
                len: self.len,
            });
        }
        let (w, b) = (locus / WORD_BITS, locus % WORD_BITS);
        Ok(self
            .words
            .chunks(self.stride)
            .filter(|row| (row[w] >> b) & 1 == 1)
            .count())
    }

    /// Fraction of individuals carrying a 1 at `locus`.
    pub fn one_frequency(&self, locus: usize) -> Result<f64> {
        Ok(self.one_count(locus)? as f64 / self.size as f64)
    }

    pub fn zero_frequency(&self, locus: usize) -> Result<f64> {
        Ok((self.size - self.one_count(locus)?) as f64 / self.size as f64)
    }

    /// One-counts for every locus in a single pass.
    pub fn one_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.len];
        for row in self.words.chunks(self.stride) {
            for (wi, &word) in row.iter().enumerate() {
                let mut w = word;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    counts[wi * WORD_BITS + b] += 1;
                    w &= w - 1;
                }
            }
        }
        counts
    }

    /// Plain-text snapshot: one `0`/`1` line per chromosome.
    pub fn dump(&self) -> String {
        use core::fmt::Write;
        let mut out = String::with_capacity(self.size * (self.len + 1));
        for row in self.rows() {
            let _ = writeln!(out, "{row}");
        }
        out
    }

    /// Parses the output of [`Population::dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            rows.push(BitString::parse(line).ok_or(Error::InvalidDimension(
                "population dump must contain only 0/1",
            ))?);
        }
        Self::from_rows(&rows)
    }
}

impl fmt::Debug for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Population({}x{})", self.size, self.len)
    }
}

/// Initializes a population of `n` uniformly random chromosomes of length `len`.
pub fn init_population(n: usize, len: usize, rng: &mut RandomStream) -> Result<Population> {
    Population::random(n, len, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(bits: &[u8]) -> Population {
        let rows: Vec<BitString> = bits
            .iter()
            .map(|&b| BitString::from_bools(&[b == 1, false]))
            .collect();
        Population::from_rows(&rows).unwrap()
    }

    #[test]
    fn init_is_reproducible() {
        let a = init_population(2, 4, &mut RandomStream::new(11)).unwrap();
        let b = init_population(2, 4, &mut RandomStream::new(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.size(), 2);
        assert_eq!(a.chrom_len(), 4);
        assert_eq!(a.dump().lines().count(), 2);
    }

    #[test]
    fn init_rejects_bad_dimensions() {
        let mut rng = RandomStream::new(0);
        assert_eq!(
            init_population(3, 4, &mut rng),
            Err(Error::OddPopulation(3))
        );
        assert_eq!(
            init_population(0, 4, &mut rng),
            Err(Error::OddPopulation(0))
        );
        assert!(init_population(2, 0, &mut rng).is_err());
    }

    #[test]
    fn large_population_is_balanced() {
        let pop = init_population(500, 20_000, &mut RandomStream::new(99)).unwrap();
        let ones: usize = pop.one_counts().iter().sum();
        let mean = ones as f64 / (500.0 * 20_000.0);
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn one_frequency_examples() {
        assert_eq!(column(&[1, 1, 1, 1]).one_frequency(0).unwrap(), 1.0);
        assert_eq!(column(&[1, 0, 1, 0]).one_frequency(0).unwrap(), 0.5);
        assert_eq!(column(&[1, 1, 1, 0]).one_frequency(0).unwrap(), 0.75);
        assert_eq!(
            column(&[1, 0]).one_frequency(2),
            Err(Error::LocusOutOfRange { locus: 2, len: 2 })
        );
    }

    #[test]
    fn frequencies_sum_to_one() {
        let pop = init_population(10, 130, &mut RandomStream::new(4)).unwrap();
        for j in 0..130 {
            let s = pop.one_frequency(j).unwrap() + pop.zero_frequency(j).unwrap();
            assert_eq!(s, 1.0);
        }
        let counts = pop.one_counts();
        for (j, &c) in counts.iter().enumerate() {
            assert_eq!(c, pop.one_count(j).unwrap());
        }
    }

    #[test]
    fn dump_round_trip() {
        let pop = init_population(6, 70, &mut RandomStream::new(8)).unwrap();
        assert_eq!(Population::parse_dump(&pop.dump()).unwrap(), pop);
    }

    #[test]
    fn padding_stays_zero() {
        let pop = init_population(4, 65, &mut RandomStream::new(2)).unwrap();
        for row in pop.rows() {
            assert_eq!(row.words()[1] >> 1, 0);
        }
        let s = BitString::random(65, &mut RandomStream::new(2)).complement();
        assert_eq!(s.words()[1] >> 1, 0);
    }
}
