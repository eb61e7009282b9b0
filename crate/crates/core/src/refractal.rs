//! Refractal addressing: a dimension-stacking map from `2mn`-bit strings onto
//! a `2^(mn) x 2^(mn)` pixel grid.
//!
//! Projections are read most-significant-bit first: the first locus of a row
//! of `X` or `Y` is the high-order bit of that row's integer value.

use alloc::vec;
use alloc::vec::Vec;

use crate::fitness::Fitness;
use crate::population::Bits;
use crate::rng::RandomStream;
use crate::schema::MAX_ENUM_LEN;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefractalAddressing {
    m: usize,
    n: usize,
    x: Vec<usize>,
    y: Vec<usize>,
}

impl RefractalAddressing {
    /// `x` and `y` are the `m x n` matrices flattened row-major, 0-based loci
    /// that together partition `0..2mn`.
    pub fn new(m: usize, n: usize, x: Vec<usize>, y: Vec<usize>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidAddressing("m and n must be positive"));
        }
        let mn = m
            .checked_mul(n)
            .ok_or(Error::InvalidAddressing("m*n overflows"))?;
        if mn > 31 {
            return Err(Error::InvalidAddressing("m*n must be at most 31"));
        }
        if x.len() != mn || y.len() != mn {
            return Err(Error::InvalidAddressing("X and Y must be m x n"));
        }
        let mut seen = vec![false; 2 * mn];
        for &l in x.iter().chain(&y) {
            if l >= 2 * mn {
                return Err(Error::InvalidAddressing("entries must lie in [2mn]"));
            }
            if core::mem::replace(&mut seen[l], true) {
                return Err(Error::InvalidAddressing("X and Y must partition [2mn]"));
            }
        }
        Ok(Self { m, n, x, y })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &[usize] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn chrom_len(&self) -> usize {
        2 * self.m * self.n
    }

    /// Grid side length `2^(mn)`.
    pub fn side(&self) -> u64 {
        1u64 << (self.m * self.n)
    }

    fn row_value(&self, g: Bits<'_>, row: &[usize]) -> u64 {
        row.iter()
            .fold(0, |acc, &l| (acc << 1) | u64::from(g.get(l)))
    }

    /// 1-based `(x, y)` pixel address of `g`.
    pub fn address(&self, g: Bits<'_>) -> Result<(u64, u64)> {
        if g.len() != self.chrom_len() {
            return Err(Error::LengthMismatch {
                expected: self.chrom_len(),
                got: g.len(),
            });
        }
        Ok(self.address_unchecked(g))
    }

    fn address_unchecked(&self, g: Bits<'_>) -> (u64, u64) {
        let mut granularity = self.side() >> self.n;
        let (mut x, mut y) = (1u64, 1u64);
        for i in 0..self.m {
            let r = i * self.n..(i + 1) * self.n;
            x += granularity * self.row_value(g, &self.x[r.clone()]);
            y += granularity * self.row_value(g, &self.y[r]);
            granularity >>= self.n;
        }
        (x, y)
    }
}

/// Dense grid of values; `values[(y - 1) * side + (x - 1)]`, row `y = 1` first.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    side: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at 1-based `(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[(y - 1) * self.side + (x - 1)]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.side)
    }

    /// Z-score contrast of the top-level column band `band` (0-based, of
    /// `2^n` bands along x): mean inside minus mean outside, over the standard
    /// deviation of the whole grid.
    pub fn band_contrast(&self, n: usize, band: usize) -> f64 {
        let width = self.side >> n;
        let (mut sin, mut cin, mut sout, mut cout) = (0.0, 0usize, 0.0, 0usize);
        for row in self.rows() {
            for (x, &v) in row.iter().enumerate() {
                if x / width == band {
                    sin += v;
                    cin += 1;
                } else {
                    sout += v;
                    cout += 1;
                }
            }
        }
        let all = self.values.len() as f64;
        let mean = (sin + sout) / all;
        let var = self
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / all;
        (sin / cin as f64 - sout / cout as f64) / libm::sqrt(var)
    }
}

/// Evaluates `f` once on every chromosome of length `2mn` and stores the
/// value at its address. `rng = None` uses the noiseless oracle.
pub fn render_grid<F: Fitness + ?Sized>(
    f: &F,
    a: &RefractalAddressing,
    mut rng: Option<&mut RandomStream>,
) -> Result<Grid> {
    let len = a.chrom_len();
    if len > MAX_ENUM_LEN {
        return Err(Error::EnumerationBound {
            len,
            max: MAX_ENUM_LEN,
        });
    }
    if f.chrom_len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: f.chrom_len(),
        });
    }
    let side = a.side() as usize;
    let mut values = vec![0.0; side * side];
    for word in 0..1u64 << len {
        let g = Bits::new(core::slice::from_ref(&word), len);
        let (x, y) = a.address_unchecked(g);
        values[(y as usize - 1) * side + (x as usize - 1)] = f.evaluate(g, rng.as_deref_mut());
    }
    Ok(Grid { side, values })
}
