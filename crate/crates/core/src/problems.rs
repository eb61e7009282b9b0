//! MAX-3SAT and Sherrington-Kirkpatrick fitness backends.
//!
//! SAT literals are signed 1-based variable numbers (`-3` is "not x3"); bit
//! `v - 1` set means variable `v` is true. Spin bits map 1 to +1 and 0 to -1.

use alloc::vec::Vec;

use crate::fitness::Fitness;
use crate::population::Bits;
use crate::rng::RandomStream;
use crate::{Error, Result};

pub type Clause = [i32; 3];

fn check_clause(c: &Clause, n_vars: usize) -> Result<()> {
    for &lit in c {
        if lit == 0 || lit.unsigned_abs() as usize > n_vars {
            return Err(Error::InvalidClause("literal out of range"));
        }
    }
    let v = c.map(i32::unsigned_abs);
    if v[0] == v[1] || v[0] == v[2] || v[1] == v[2] {
        return Err(Error::InvalidClause("clause repeats a variable"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatInstance {
    n_vars: usize,
    clauses: Vec<Clause>,
}

impl SatInstance {
    pub fn new(n_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidDimension(
                "a SAT instance needs at least one variable",
            ));
        }
        for c in &clauses {
            check_clause(c, n_vars)?;
        }
        Ok(Self { n_vars, clauses })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Number of satisfied clauses.
    #[inline]
    pub fn satisfied(&self, g: Bits<'_>) -> usize {
        let words = g.words();
        let lit_true = |lit: i32| {
            let v = lit.unsigned_abs() as usize - 1;
            let bit = (words[v / 64] >> (v % 64)) & 1 == 1;
            bit == (lit > 0)
        };
        self.clauses
            .iter()
            .filter(|c| lit_true(c[0]) || lit_true(c[1]) || lit_true(c[2]))
            .count()
    }

    pub fn sat_fitness(&self, g: Bits<'_>) -> Result<usize> {
        if g.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: g.len(),
            });
        }
        Ok(self.satisfied(g))
    }
}

impl Fitness for SatInstance {
    fn chrom_len(&self) -> usize {
        self.n_vars
    }

    fn evaluate(&self, g: Bits<'_>, _rng: Option<&mut RandomStream>) -> f64 {
        self.satisfied(g) as f64
    }
}

/// Uniform random 3SAT: each literal drawn uniformly (with replacement) from
/// the `2n` literals; a clause repeating a variable (including a variable
/// with its negation) is discarded and redrawn whole.
pub fn gen_uniform_3sat(n: usize, m: usize, rng: &mut RandomStream) -> Result<SatInstance> {
    if n < 3 {
        return Err(Error::InvalidParameter("3SAT needs at least 3 variables"));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one clause"));
    }
    if n > i32::MAX as usize {
        return Err(Error::InvalidParameter("too many variables"));
    }
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let mut c = [0i32; 3];
        for lit in &mut c {
            let k = rng.below(2 * n);
            let v = (k / 2 + 1) as i32;
            *lit = if k.is_multiple_of(2) { v } else { -v };
        }
        if check_clause(&c, n).is_ok() {
            clauses.push(c);
        }
    }
    SatInstance::new(n, clauses)
}

/// Sherrington-Kirkpatrick couplings `J_ij`, `i < j`, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    n_spins: usize,
    couplings: Vec<f64>,
}

impl SpinSystem {
    pub fn zeros(n_spins: usize) -> Result<Self> {
        if n_spins < 2 {
            return Err(Error::InvalidDimension(
                "a spin system needs at least two spins",
            ));
        }
        Ok(Self {
            n_spins,
            couplings: alloc::vec![0.0; n_spins * (n_spins - 1) / 2],
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn coupling_count(&self) -> usize {
        self.couplings.len()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_spins);
        i * (2 * self.n_spins - i - 1) / 2 + (j - i - 1)
    }

    /// `J_ij` for 0-based `i < j`.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        Ok(self.couplings[self.index(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_pair(i, j)?;
        let k = self.index(i, j);
        self.couplings[k] = value;
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if j >= self.n_spins {
            return Err(Error::LocusOutOfRange {
                locus: j,
                len: self.n_spins,
            });
        }
        if i >= j {
            return Err(Error::InvalidParameter("couplings need i < j"));
        }
        Ok(())
    }

    /// Iterates `(i, j, J_ij)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_spins;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.couplings.iter().copied())
            .map(|((i, j), v)| (i, j, v))
    }

    #[inline]
    fn spins(&self, g: Bits<'_>) -> Vec<f64> {
        (0..self.n_spins)
            .map(|j| if g.get(j) { 1.0 } else { -1.0 })
            .collect()
    }

    /// `-E(σ) = Σ_{i<j} J_ij σ_i σ_j`.
    #[inline]
    pub fn negated_energy(&self, g: Bits<'_>) -> f64 {
        let s = self.spins(g);
        let n = self.n_spins;
        let mut total = 0.0;
        let mut start = 0;
        for i in 0..n - 1 {
            let row = &self.couplings[start..start + n - i - 1];
            let dot: f64 = row.iter().zip(&s[i + 1..]).map(|(j, s)| j * s).sum();
            total += s[i] * dot;
            start += n - i - 1;
        }
        total
    }

    pub fn spin_fitness(&self, g: Bits<'_>) -> Result<f64> {
        if g.len() != self.n_spins {
            return Err(Error::LengthMismatch {
                expected: self.n_spins,
                got: g.len(),
            });
        }
        Ok(self.negated_energy(g))
    }

    /// Change in fitness caused by flipping spin `k`.
    pub fn flip_delta(&self, g: Bits<'_>, k: usize) -> f64 {
        let sk = if g.get(k) { 1.0 } else { -1.0 };
        let mut field = 0.0;
        for j in 0..self.n_spins {
            if j == k {
                continue;
            }
            let (a, b) = if j < k { (j, k) } else { (k, j) };
            let sj = if g.get(j) { 1.0 } else { -1.0 };
            field += self.couplings[self.index(a, b)] * sj;
        }
        -2.0 * sk * field
    }
}

impl Fitness for SpinSystem {
    fn chrom_len(&self) -> usize {
        self.n_spins
    }

    fn evaluate(&self, g: Bits<'_>, _rng: Option<&mut RandomStream>) -> f64 {
        self.negated_energy(g)
    }
}

/// Couplings i.i.d. standard normal.
pub fn gen_sk(n_spins: usize, rng: &mut RandomStream) -> Result<SpinSystem> {
    let mut sys = SpinSystem::zeros(n_spins)?;
    for c in &mut sys.couplings {
        *c = rng.normal();
    }
    Ok(sys)
}
