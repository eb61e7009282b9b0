//! Staircase fitness functions.
//!
//! A descriptor `(h, o, delta, ell, L, V)` defines `h` steps, each a block of
//! `o` loci (`L` row) with target bits (`V` row). Evaluation starts from a
//! standard-normal draw, adds `delta` for each consecutive matching step and
//! subtracts `delta / (2^o - 1)` at the first mismatch, then stops. Stage `i`
//! is the conjunction of steps `1..=i`.

use alloc::vec::Vec;

use crate::fitness::Fitness;
use crate::population::{words_for, Bits, WORD_BITS};
use crate::rng::RandomStream;
use crate::schema::{self, Mode, SchemaModel, MAX_ENUM_LEN};
use crate::{Error, Result};

/// 1-based stage (or step) index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StageIndex(usize);

impl StageIndex {
    pub fn new(i: usize, height: usize) -> Result<Self> {
        if i == 0 || i > height {
            return Err(Error::StageOutOfRange { index: i, height });
        }
        Ok(Self(i))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct StepMatcher {
    // (word index, care mask, target bits)
    parts: Vec<(usize, u64, u64)>,
}

impl StepMatcher {
    fn new(loci: &[usize], targets: &[bool]) -> Self {
        let mut parts: Vec<(usize, u64, u64)> = Vec::new();
        for (&l, &t) in loci.iter().zip(targets) {
            let (w, bit) = (l / WORD_BITS, 1u64 << (l % WORD_BITS));
            let value = if t { bit } else { 0 };
            match parts.iter_mut().find(|p| p.0 == w) {
                Some(p) => {
                    p.1 |= bit;
                    p.2 |= value;
                }
                None => parts.push((w, bit, value)),
            }
        }
        parts.sort_unstable_by_key(|p| p.0);
        Self { parts }
    }

    #[inline]
    fn matches(&self, words: &[u64]) -> bool {
        self.parts.iter().all(|&(w, m, v)| words[w] & m == v)
    }
}

#[derive(Debug, Clone)]
pub struct StaircaseDescriptor {
    height: usize,
    order: usize,
    delta: f64,
    span: usize,
    loci: Vec<usize>,
    targets: Vec<bool>,
    matchers: Vec<StepMatcher>,
}

impl PartialEq for StaircaseDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height
            && self.order == other.order
            && self.delta.to_bits() == other.delta.to_bits()
            && self.span == other.span
            && self.loci == other.loci
            && self.targets == other.targets
    }
}

/// Analytic fitness signals of stage `i`, step `i`, and step `i` given stage `i - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signals {
    pub stage: f64,
    pub step: f64,
    pub conditional_step: f64,
}

impl StaircaseDescriptor {
    /// `loci` and `targets` are the `h x o` matrices `L` and `V` flattened
    /// row-major; loci are 0-based.
    pub fn new(
        height: usize,
        order: usize,
        delta: f64,
        span: usize,
        loci: Vec<usize>,
        targets: Vec<bool>,
    ) -> Result<Self> {
        if height == 0 || order == 0 || span == 0 {
            return Err(Error::InvalidDescriptor("h, o and ell must be positive"));
        }
        if delta <= 0.0 || !delta.is_finite() {
            return Err(Error::InvalidDescriptor("delta must be a positive real"));
        }
        if order >= WORD_BITS {
            return Err(Error::InvalidDescriptor("order must be below 64"));
        }
        let n = height
            .checked_mul(order)
            .ok_or(Error::InvalidDescriptor("h*o overflows"))?;
        if n > span {
            return Err(Error::InvalidDescriptor("h*o must not exceed ell"));
        }
        if loci.len() != n || targets.len() != n {
            return Err(Error::InvalidDescriptor("L and V must be h x o"));
        }
        let mut seen = alloc::vec![false; span];
        for &l in &loci {
            if l >= span {
                return Err(Error::LocusOutOfRange {
                    locus: l,
                    len: span,
                });
            }
            if core::mem::replace(&mut seen[l], true) {
                return Err(Error::InvalidDescriptor("entries of L must be distinct"));
            }
        }
        let matchers = loci
            .chunks(order)
            .zip(targets.chunks(order))
            .map(|(l, v)| StepMatcher::new(l, v))
            .collect();
        Ok(Self {
            height,
            order,
            delta,
            span,
            loci,
            targets,
            matchers,
        })
    }

    /// The basic staircase `(h, o, delta)`: `ell = h*o`, row-wise loci, all-ones targets.
    pub fn basic(height: usize, order: usize, delta: f64) -> Result<Self> {
        let n = height
            .checked_mul(order)
            .ok_or(Error::InvalidDescriptor("h*o overflows"))?;
        Self::new(
            height,
            order,
            delta,
            n,
            (0..n).collect(),
            alloc::vec![true; n],
        )
    }

    /// Same `(h, o, delta)` embedded at uniformly random distinct loci of a
    /// span-`ell` chromosome, with uniform random targets.
    pub fn random_embedding(
        height: usize,
        order: usize,
        delta: f64,
        span: usize,
        rng: &mut RandomStream,
    ) -> Result<Self> {
        let n = height
            .checked_mul(order)
            .ok_or(Error::InvalidDescriptor("h*o overflows"))?;
        if n > span {
            return Err(Error::InvalidDescriptor("h*o must not exceed ell"));
        }
        let loci = rand::seq::index::sample(rng, span, n).into_vec();
        let targets = (0..n).map(|_| rng.bit()).collect();
        Self::new(height, order, delta, span, loci, targets)
    }

    pub fn basic_form(&self) -> Self {
        Self::basic(self.height, self.order, self.delta).expect("descriptor already validated")
    }

    pub fn is_basic(&self) -> bool {
        *self == self.basic_form()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn span(&self) -> usize {
        self.span
    }

    /// Row `i` (0-based) of `L`.
    pub fn step_loci(&self, i: usize) -> &[usize] {
        &self.loci[i * self.order..(i + 1) * self.order]
    }

    /// Row `i` (0-based) of `V`.
    pub fn step_targets(&self, i: usize) -> &[bool] {
        &self.targets[i * self.order..(i + 1) * self.order]
    }

    pub fn loci(&self) -> &[usize] {
        &self.loci
    }

    pub fn targets(&self) -> &[bool] {
        &self.targets
    }

    /// Penalty applied at the first unmatched step.
    pub fn penalty(&self) -> f64 {
        self.delta / ((1u64 << self.order) - 1) as f64
    }

    fn check_len(&self, g: Bits<'_>) -> Result<()> {
        if g.len() != self.span || g.words().len() < words_for(self.span) {
            return Err(Error::LengthMismatch {
                expected: self.span,
                got: g.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn leading_matches(&self, g: Bits<'_>) -> usize {
        let words = g.words();
        self.matchers
            .iter()
            .take_while(|m| m.matches(words))
            .count()
    }

    /// Fitness of `g`; `rng = None` gives the noiseless value (the expectation).
    pub fn evaluate_checked(&self, g: Bits<'_>, rng: Option<&mut RandomStream>) -> Result<f64> {
        self.check_len(g)?;
        Ok(self.evaluate(g, rng))
    }

    /// Largest `k` such that steps `1..=k` all match.
    pub fn stage_membership(&self, g: Bits<'_>) -> Result<usize> {
        self.check_len(g)?;
        Ok(self.leading_matches(g))
    }

    /// Step `i` (1-based) as a schema model.
    pub fn step_schema(&self, i: StageIndex) -> SchemaModel {
        let r = i.get() - 1;
        SchemaModel::new(
            self.span,
            self.step_loci(r)
                .iter()
                .copied()
                .zip(self.step_targets(r).iter().copied()),
        )
        .expect("descriptor loci are distinct")
    }

    /// Stage `i` (1-based) as a schema model.
    pub fn stage_schema(&self, i: StageIndex) -> SchemaModel {
        let n = i.get() * self.order;
        SchemaModel::new(
            self.span,
            self.loci[..n]
                .iter()
                .copied()
                .zip(self.targets[..n].iter().copied()),
        )
        .expect("descriptor loci are distinct")
    }

    pub fn stage_index(&self, i: usize) -> Result<StageIndex> {
        StageIndex::new(i, self.height)
    }

    /// Closed-form signals: stage `i*delta`, step `delta / 2^(o(i-1))`, and
    /// step given the previous stage `delta` (stage 0 is the whole space).
    pub fn analytic_signals(&self, i: StageIndex) -> Signals {
        let i = i.get();
        Signals {
            stage: i as f64 * self.delta,
            step: self.delta / libm::exp2((self.order * (i - 1)) as f64),
            conditional_step: self.delta,
        }
    }

    /// Exact mean of the noiseless fitness over the schema, by enumeration.
    pub fn brute_force_schema_mean(&self, schema: &SchemaModel) -> Result<f64> {
        if self.span > MAX_ENUM_LEN {
            return Err(Error::EnumerationBound {
                len: self.span,
                max: MAX_ENUM_LEN,
            });
        }
        schema::schema_mean(self, schema, &mut Mode::Exact)
    }

    /// Applies a locus permutation: locus `j` moves to `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.span {
            return Err(Error::LengthMismatch {
                expected: self.span,
                got: perm.len(),
            });
        }
        Self::new(
            self.height,
            self.order,
            self.delta,
            self.span,
            self.loci.iter().map(|&l| perm[l]).collect(),
            self.targets.clone(),
        )
    }
}

impl Fitness for StaircaseDescriptor {
    fn chrom_len(&self) -> usize {
        self.span
    }

    #[inline]
    fn evaluate(&self, g: Bits<'_>, rng: Option<&mut RandomStream>) -> f64 {
        let mut x = rng.map_or(0.0, |r| r.normal());
        let k = self.leading_matches(g);
        x += k as f64 * self.delta;
        if k < self.height {
            x -= self.penalty();
        }
        x
    }
}

pub fn make_basic(height: usize, order: usize, delta: f64) -> Result<StaircaseDescriptor> {
    StaircaseDescriptor::basic(height, order, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::BitString;

    fn bits(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn make_basic_examples() {
        let f = make_basic(2, 2, 1.0).unwrap();
        assert_eq!(f.span(), 4);
        assert_eq!(f.step_loci(0), &[0, 1]);
        assert_eq!(f.step_loci(1), &[2, 3]);
        assert!(f.targets().iter().all(|&t| t));
        let g = make_basic(1, 1, 0.3).unwrap();
        assert_eq!(
            (g.span(), g.loci(), g.targets()),
            (1, &[0][..], &[true][..])
        );
        assert_eq!(make_basic(50, 4, 0.3).unwrap().span(), 200);
        assert!(make_basic(0, 2, 1.0).is_err());
        assert!(make_basic(2, 2, 0.0).is_err());
        assert!(make_basic(2, 2, -1.0).is_err());
    }

    #[test]
    fn basic_form_examples() {
        let mut rng = RandomStream::new(1);
        let phi = StaircaseDescriptor::random_embedding(50, 4, 0.3, 20_000, &mut rng).unwrap();
        assert_eq!(phi.basic_form(), make_basic(50, 4, 0.3).unwrap());
        let b = make_basic(3, 2, 0.5).unwrap();
        assert_eq!(b.basic_form(), b);
        assert!(b.is_basic());
        let e = StaircaseDescriptor::new(
            2,
            2,
            1.0,
            9,
            vec![8, 0, 3, 5],
            vec![true, false, false, true],
        )
        .unwrap();
        assert_eq!(e.basic_form(), make_basic(2, 2, 1.0).unwrap());
    }

    #[test]
    fn random_embedding_examples() {
        let mut rng = RandomStream::new(2);
        let f = StaircaseDescriptor::random_embedding(2, 2, 1.0, 4, &mut rng).unwrap();
        let mut l = f.loci().to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
        let g = StaircaseDescriptor::random_embedding(50, 4, 0.3, 20_000, &mut rng).unwrap();
        let mut l = g.loci().to_vec();
        l.sort_unstable();
        l.dedup();
        assert_eq!(l.len(), 200);
        assert!(StaircaseDescriptor::random_embedding(2, 2, 1.0, 3, &mut rng).is_err());
    }

    #[test]
    fn descriptor_validation() {
        assert!(StaircaseDescriptor::new(2, 2, 1.0, 4, vec![0, 1, 1, 3], vec![true; 4]).is_err());
        assert!(StaircaseDescriptor::new(2, 2, 1.0, 4, vec![0, 1, 2, 4], vec![true; 4]).is_err());
        assert!(StaircaseDescriptor::new(2, 2, 1.0, 4, vec![0, 1, 2], vec![true; 3]).is_err());
    }

    #[test]
    fn noiseless_evaluation_examples() {
        let f = make_basic(2, 2, 1.0).unwrap();
        let ev = |s: &str| f.evaluate_checked(bits(s).as_bits(), None).unwrap();
        assert!((ev("1111") - 2.0).abs() < 1e-15);
        assert!((ev("1101") - 2.0 / 3.0).abs() < 1e-15);
        assert!((ev("0011") + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            f.evaluate_checked(bits("111").as_bits(), None),
            Err(Error::LengthMismatch {
                expected: 4,
                got: 3
            })
        );
    }

    #[test]
    fn stage_membership_examples() {
        let f = make_basic(2, 2, 1.0).unwrap();
        assert_eq!(f.stage_membership(bits("1111").as_bits()).unwrap(), 2);
        assert_eq!(f.stage_membership(bits("1101").as_bits()).unwrap(), 1);
        assert_eq!(f.stage_membership(bits("0111").as_bits()).unwrap(), 0);
    }

    #[test]
    fn non_basic_targets_are_respected() {
        let f = StaircaseDescriptor::new(1, 2, 1.0, 70, vec![68, 3], vec![false, true]).unwrap();
        let mut g = BitString::zeros(70);
        g.set(3, true);
        assert_eq!(f.stage_membership(g.as_bits()).unwrap(), 1);
        g.set(68, true);
        assert_eq!(f.stage_membership(g.as_bits()).unwrap(), 0);
    }

    #[test]
    fn analytic_signal_examples() {
        let f = make_basic(2, 2, 1.0).unwrap();
        let s = f.analytic_signals(f.stage_index(2).unwrap());
        assert_eq!(
            s,
            Signals {
                stage: 2.0,
                step: 0.25,
                conditional_step: 1.0
            }
        );
        let s1 = f.analytic_signals(f.stage_index(1).unwrap());
        assert_eq!((s1.stage, s1.step), (1.0, 1.0));
        let g = make_basic(50, 4, 0.3).unwrap();
        let s3 = g.analytic_signals(g.stage_index(3).unwrap());
        assert!((s3.step - 0.001171875).abs() < 1e-15);
        assert!(f.stage_index(3).is_err());
        assert!(f.stage_index(0).is_err());
    }

    #[test]
    fn brute_force_mean_examples() {
        let f = make_basic(2, 2, 1.0).unwrap();
        let step2 = f.step_schema(f.stage_index(2).unwrap());
        let stage1 = f.stage_schema(f.stage_index(1).unwrap());
        assert!((f.brute_force_schema_mean(&step2).unwrap() - 0.25).abs() < 1e-12);
        assert!((f.brute_force_schema_mean(&stage1).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            f.brute_force_schema_mean(&SchemaModel::empty(4))
                .unwrap()
                .abs()
                < 1e-12
        );
        let big = make_basic(5, 5, 1.0).unwrap();
        assert!(big
            .brute_force_schema_mean(&SchemaModel::empty(25))
            .is_err());
    }
}
