//! Schema models, schema partition models, effects and fitness signals.
//!
//! A [`SchemaModel`] is a partial assignment of bits to loci (the schema is
//! every chromosome agreeing with it). A [`PartitionModel`] is a set of loci;
//! its schemata are the `2^order` assignments to those loci. Pattern index
//! `k` of a partition assigns bit `b` of `k` to the partition's `b`-th
//! smallest locus.
//!
//! Effects are population variances (normalized by `2^order`) of schema
//! expected fitnesses. Exact mode enumerates every chromosome and uses the
//! noiseless oracle; sampled mode averages noisy draws from each schema.

use alloc::vec;
use alloc::vec::Vec;

use crate::fitness::Fitness;
use crate::population::{words_for, BitString, Bits, WORD_BITS};
use crate::rng::RandomStream;
use crate::{Error, Result};

/// Largest chromosome length accepted by exhaustive enumeration.
pub const MAX_ENUM_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchemaModel {
    ell: usize,
    fixed: Vec<(usize, bool)>,
}

impl SchemaModel {
    /// The unconstrained schema (the whole search space).
    pub fn empty(ell: usize) -> Self {
        Self {
            ell,
            fixed: Vec::new(),
        }
    }

    pub fn new(ell: usize, assignment: impl IntoIterator<Item = (usize, bool)>) -> Result<Self> {
        let mut fixed: Vec<(usize, bool)> = assignment.into_iter().collect();
        fixed.sort_unstable_by_key(|&(l, _)| l);
        for w in fixed.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::NotOrthogonal(w[0].0));
            }
        }
        if let Some(&(l, _)) = fixed.last() {
            if l >= ell {
                return Err(Error::LocusOutOfRange { locus: l, len: ell });
            }
        }
        Ok(Self { ell, fixed })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn order(&self) -> usize {
        self.fixed.len()
    }

    /// Fixed `(locus, bit)` pairs in ascending locus order.
    pub fn assignment(&self) -> &[(usize, bool)] {
        &self.fixed
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.fixed.iter().map(|&(l, _)| l)
    }

    pub fn get(&self, locus: usize) -> Option<bool> {
        self.fixed
            .binary_search_by_key(&locus, |&(l, _)| l)
            .ok()
            .map(|i| self.fixed[i].1)
    }

    pub fn partition(&self) -> PartitionModel {
        PartitionModel {
            ell: self.ell,
            loci: self.domain().collect(),
        }
    }

    /// Union of two orthogonal schema models.
    pub fn concat(&self, other: &SchemaModel) -> Result<SchemaModel> {
        if self.ell != other.ell {
            return Err(Error::LengthMismatch {
                expected: self.ell,
                got: other.ell,
            });
        }
        Self::new(self.ell, self.fixed.iter().chain(&other.fixed).copied())
    }

    pub fn matches(&self, g: Bits<'_>) -> bool {
        self.fixed.iter().all(|&(l, b)| g.get(l) == b)
    }

    pub(crate) fn masks(&self) -> (Vec<u64>, Vec<u64>) {
        let n = words_for(self.ell);
        let (mut care, mut value) = (vec![0u64; n], vec![0u64; n]);
        for &(l, b) in &self.fixed {
            care[l / WORD_BITS] |= 1 << (l % WORD_BITS);
            if b {
                value[l / WORD_BITS] |= 1 << (l % WORD_BITS);
            }
        }
        (care, value)
    }

    /// Uniform draw from the schema.
    pub fn sample(&self, rng: &mut RandomStream) -> BitString {
        let mut g = BitString::random(self.ell, rng);
        for &(l, b) in &self.fixed {
            g.set(l, b);
        }
        g
    }

    pub(crate) fn is_disjoint_from(&self, loci: &[usize]) -> Option<usize> {
        loci.iter().copied().find(|&l| self.get(l).is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionModel {
    ell: usize,
    loci: Vec<usize>,
}

impl PartitionModel {
    pub fn new(ell: usize, loci: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut loci: Vec<usize> = loci.into_iter().collect();
        loci.sort_unstable();
        for w in loci.windows(2) {
            if w[0] == w[1] {
                return Err(Error::NotOrthogonal(w[0]));
            }
        }
        if let Some(&l) = loci.last() {
            if l >= ell {
                return Err(Error::LocusOutOfRange { locus: l, len: ell });
            }
        }
        Ok(Self { ell, loci })
    }

    /// The partition over every locus.
    pub fn full(ell: usize) -> Self {
        Self {
            ell,
            loci: (0..ell).collect(),
        }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn order(&self) -> usize {
        self.loci.len()
    }

    pub fn loci(&self) -> &[usize] {
        &self.loci
    }

    pub fn schema_count(&self) -> usize {
        1usize << self.loci.len()
    }

    /// The schema with pattern index `pattern`.
    pub fn schema(&self, pattern: usize) -> SchemaModel {
        SchemaModel {
            ell: self.ell,
            fixed: self
                .loci
                .iter()
                .enumerate()
                .map(|(b, &l)| (l, (pattern >> b) & 1 == 1))
                .collect(),
        }
    }

    /// Pattern index of `g` in this partition.
    pub fn pattern_of(&self, g: Bits<'_>) -> usize {
        self.loci
            .iter()
            .enumerate()
            .fold(0, |acc, (b, &l)| acc | (usize::from(g.get(l)) << b))
    }
}

/// How schema expectations are obtained.
pub enum Mode<'a> {
    /// Full enumeration of the noiseless oracle; requires `ell <= 24`.
    Exact,
    /// Monte-Carlo: `per_schema` noisy draws from each schema.
    Sampled {
        per_schema: usize,
        rng: &'a mut RandomStream,
    },
}

fn check_enumerable(ell: usize) -> Result<()> {
    if ell > MAX_ENUM_LEN {
        return Err(Error::EnumerationBound {
            len: ell,
            max: MAX_ENUM_LEN,
        });
    }
    Ok(())
}

fn check_fitness<F: Fitness + ?Sized>(f: &F, ell: usize) -> Result<()> {
    if f.chrom_len() != ell {
        return Err(Error::LengthMismatch {
            expected: f.chrom_len(),
            got: ell,
        });
    }
    Ok(())
}

/// Expected fitness of every schema `given ∪ ψ` for `ψ` in `part`, indexed by
/// pattern.
pub fn schema_means<F: Fitness + ?Sized>(
    f: &F,
    part: &PartitionModel,
    given: &SchemaModel,
    mode: &mut Mode<'_>,
) -> Result<Vec<f64>> {
    let ell = part.ell();
    check_fitness(f, ell)?;
    if given.ell() != ell {
        return Err(Error::LengthMismatch {
            expected: ell,
            got: given.ell(),
        });
    }
    if let Some(l) = given.is_disjoint_from(part.loci()) {
        return Err(Error::NotOrthogonal(l));
    }
    match mode {
        Mode::Exact => {
            check_enumerable(ell)?;
            if part.order() > MAX_ENUM_LEN {
                return Err(Error::EnumerationBound {
                    len: part.order(),
                    max: MAX_ENUM_LEN,
                });
            }
            Ok(exact_means(f, part, given))
        }
        Mode::Sampled { per_schema, rng } => {
            if *per_schema == 0 {
                return Err(Error::InvalidParameter(
                    "sampled mode needs at least one sample",
                ));
            }
            let mut means = Vec::with_capacity(part.schema_count());
            for k in 0..part.schema_count() {
                let schema = given.concat(&part.schema(k))?;
                let mut sum = 0.0;
                for _ in 0..*per_schema {
                    let g = schema.sample(rng);
                    sum += f.evaluate(g.as_bits(), Some(rng));
                }
                means.push(sum / *per_schema as f64);
            }
            Ok(means)
        }
    }
}

fn exact_means<F: Fitness + ?Sized>(f: &F, part: &PartitionModel, given: &SchemaModel) -> Vec<f64> {
    let ell = part.ell();
    let (care, value) = given.masks();
    let (care, value) = (
        care.first().copied().unwrap_or(0),
        value.first().copied().unwrap_or(0),
    );
    let all = if ell == 64 {
        u64::MAX
    } else {
        (1u64 << ell) - 1
    };
    let free = all & !care;
    let mut sums = vec![0.0f64; part.schema_count()];
    let mut counts = vec![0u64; part.schema_count()];
    // Walk every submask of the free loci in increasing order.
    let mut sub = 0u64;
    loop {
        let x = sub | value;
        let g = Bits::new(core::slice::from_ref(&x), ell);
        let k = part.loci().iter().enumerate().fold(0usize, |acc, (b, &l)| {
            acc | ((((x >> l) & 1) as usize) << b)
        });
        sums[k] += f.expected(g);
        counts[k] += 1;
        sub = sub.wrapping_sub(free) & free;
        if sub == 0 {
            break;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

/// Population variance (divide by the count).
pub fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Variance of the expected fitnesses of the schemata of `part`.
pub fn effect<F: Fitness + ?Sized>(
    f: &F,
    part: &PartitionModel,
    mode: &mut Mode<'_>,
) -> Result<f64> {
    conditional_effect(f, part, &SchemaModel::empty(part.ell()), mode)
}

/// Variance of `E[F(given ψ)]` over the schemata `ψ` of `part`.
pub fn conditional_effect<F: Fitness + ?Sized>(
    f: &F,
    part: &PartitionModel,
    given: &SchemaModel,
    mode: &mut Mode<'_>,
) -> Result<f64> {
    Ok(population_variance(&schema_means(f, part, given, mode)?))
}

/// Expected fitness of a schema.
pub fn schema_mean<F: Fitness + ?Sized>(
    f: &F,
    schema: &SchemaModel,
    mode: &mut Mode<'_>,
) -> Result<f64> {
    let none = PartitionModel::new(schema.ell(), [])?;
    Ok(schema_means(f, &none, schema, mode)?[0])
}

/// Fitness signal: schema mean minus the global mean.
pub fn signal<F: Fitness + ?Sized>(
    f: &F,
    schema: &SchemaModel,
    mode: &mut Mode<'_>,
) -> Result<f64> {
    let m = schema_mean(f, schema, mode)?;
    let global = schema_mean(f, &SchemaModel::empty(schema.ell()), mode)?;
    Ok(m - global)
}

/// Conditional signal `S(a | b) = S(ab) - S(b)`.
pub fn conditional_signal<F: Fitness + ?Sized>(
    f: &F,
    a: &SchemaModel,
    b: &SchemaModel,
    mode: &mut Mode<'_>,
) -> Result<f64> {
    let ab = a.concat(b)?;
    Ok(signal(f, &ab, mode)? - signal(f, b, mode)?)
}

/// Concatenation of two orthogonal schema models.
pub fn concat(a: &SchemaModel, b: &SchemaModel) -> Result<SchemaModel> {
    a.concat(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{ConstantFitness, TableFitness};
    use crate::staircase::StaircaseDescriptor;

    fn sm(ell: usize, pairs: &[(usize, u8)]) -> SchemaModel {
        SchemaModel::new(ell, pairs.iter().map(|&(l, b)| (l, b == 1))).unwrap()
    }

    fn pm(ell: usize, loci: &[usize]) -> PartitionModel {
        PartitionModel::new(ell, loci.iter().copied()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn concat_examples() {
        let a = sm(4, &[(0, 1)]);
        assert_eq!(
            a.concat(&sm(4, &[(2, 0)])).unwrap(),
            sm(4, &[(0, 1), (2, 0)])
        );
        assert_eq!(a.concat(&SchemaModel::empty(4)).unwrap(), a);
        assert_eq!(a.concat(&sm(4, &[(0, 0)])), Err(Error::NotOrthogonal(0)));
    }

    #[test]
    fn effect_of_constant_is_zero() {
        let f = ConstantFitness { len: 6, value: 3.5 };
        assert_eq!(effect(&f, &pm(6, &[1, 4]), &mut Mode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn staircase_effect_examples() {
        let f = StaircaseDescriptor::basic(2, 2, 1.0).unwrap();
        let means = schema_means(
            &f,
            &pm(4, &[0, 1]),
            &SchemaModel::empty(4),
            &mut Mode::Exact,
        )
        .unwrap();
        assert!(close(means[3], 1.0));
        assert!(means[..3].iter().all(|&m| close(m, -1.0 / 3.0)));
        assert!(close(
            effect(&f, &pm(4, &[0, 1]), &mut Mode::Exact).unwrap(),
            1.0 / 3.0
        ));
        assert!(close(
            effect(&f, &pm(4, &[2, 3]), &mut Mode::Exact).unwrap(),
            1.0 / 48.0
        ));
    }

    #[test]
    fn staircase_conditional_effect_examples() {
        let f = StaircaseDescriptor::basic(2, 2, 1.0).unwrap();
        let part = pm(4, &[2, 3]);
        let stage1 = sm(4, &[(0, 1), (1, 1)]);
        let means = schema_means(&f, &part, &stage1, &mut Mode::Exact).unwrap();
        assert!(close(means[3], 2.0));
        assert!(means[..3].iter().all(|&m| close(m, 2.0 / 3.0)));
        assert!(close(
            conditional_effect(&f, &part, &stage1, &mut Mode::Exact).unwrap(),
            1.0 / 3.0
        ));
        let zeros = sm(4, &[(0, 0), (1, 0)]);
        assert_eq!(
            conditional_effect(&f, &part, &zeros, &mut Mode::Exact).unwrap(),
            0.0
        );
        assert_eq!(
            conditional_effect(&f, &part, &SchemaModel::empty(4), &mut Mode::Exact).unwrap(),
            effect(&f, &part, &mut Mode::Exact).unwrap()
        );
        assert_eq!(
            conditional_effect(&f, &part, &sm(4, &[(2, 1)]), &mut Mode::Exact),
            Err(Error::NotOrthogonal(2))
        );
    }

    #[test]
    fn staircase_signal_examples() {
        let f = StaircaseDescriptor::basic(2, 2, 1.0).unwrap();
        assert_eq!(
            signal(&f, &SchemaModel::empty(4), &mut Mode::Exact).unwrap(),
            0.0
        );
        assert!(close(
            signal(&f, &sm(4, &[(2, 1), (3, 1)]), &mut Mode::Exact).unwrap(),
            0.25
        ));
        let step2 = sm(4, &[(2, 1), (3, 1)]);
        let stage1 = sm(4, &[(0, 1), (1, 1)]);
        assert!(close(
            conditional_signal(&f, &step2, &stage1, &mut Mode::Exact).unwrap(),
            1.0
        ));
    }

    #[test]
    fn exact_mode_enforces_bound() {
        let f = ConstantFitness {
            len: 25,
            value: 0.0,
        };
        assert_eq!(
            effect(&f, &pm(25, &[0]), &mut Mode::Exact),
            Err(Error::EnumerationBound { len: 25, max: 24 })
        );
    }

    #[test]
    fn conditioning_creates_effect() {
        let f = StaircaseDescriptor::basic(2, 2, 1.0).unwrap();
        let part = pm(4, &[2, 3]);
        let stage1 = sm(4, &[(0, 1), (1, 1)]);
        let cond = conditional_effect(&f, &part, &stage1, &mut Mode::Exact).unwrap();
        assert!(cond > effect(&f, &part, &mut Mode::Exact).unwrap());
    }

    #[test]
    fn full_partition_has_maximum_effect() {
        let mut rng = RandomStream::new(21);
        for _ in 0..10 {
            let f = TableFitness::random(6, &mut rng);
            let full = effect(&f, &PartitionModel::full(6), &mut Mode::Exact).unwrap();
            for mask in 0..64usize {
                let part = pm(
                    6,
                    &(0..6).filter(|b| mask >> b & 1 == 1).collect::<Vec<_>>(),
                );
                assert!(effect(&f, &part, &mut Mode::Exact).unwrap() <= full + 1e-12);
            }
        }
    }

    #[test]
    fn sampled_mode_converges() {
        let mut rng = RandomStream::new(5);
        let f = TableFitness::random(8, &mut rng);
        let part = pm(8, &[1, 5]);
        let exact = effect(&f, &part, &mut Mode::Exact).unwrap();
        let reps: Vec<f64> = (0..20)
            .map(|_| {
                effect(
                    &f,
                    &part,
                    &mut Mode::Sampled {
                        per_schema: 10_000,
                        rng: &mut rng,
                    },
                )
                .unwrap()
            })
            .collect();
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        let sd = libm::sqrt(
            reps.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (reps.len() - 1) as f64,
        );
        for r in reps {
            assert!(
                (r - exact).abs() < 5.0 * sd.max(1e-6),
                "{r} vs {exact} (sd {sd})"
            );
        }
    }

    #[test]
    fn pattern_round_trip() {
        let part = pm(10, &[1, 4, 7]);
        for k in 0..8 {
            let s = part.schema(k);
            let g = s.sample(&mut RandomStream::new(k as u64));
            assert!(s.matches(g.as_bits()));
            assert_eq!(part.pattern_of(g.as_bits()), k);
        }
    }
}
