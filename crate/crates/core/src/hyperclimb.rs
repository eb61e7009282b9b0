//! Explicit hyperclimbing: sample from the current schema, find the coarse
//! partition with the largest estimated effect, fix its best schema, repeat.
//!
//! Each round shares one sample set across every candidate partition.
//! Estimated schema means bucket the samples by pattern; an empty bucket
//! takes the overall sample mean. Candidates of each order are scanned
//! exhaustively while `C(u, order) <= MAX_CANDIDATES` (`u` unfixed loci),
//! otherwise `MAX_CANDIDATES` uniformly random subsets are drawn.
//! Equal effects resolve to the lexicographically smallest locus set.

use alloc::vec;
use alloc::vec::Vec;

use crate::fitness::Fitness;
use crate::population::BitString;
use crate::rng::RandomStream;
use crate::schema::{population_variance, PartitionModel, SchemaModel};
use crate::{Error, Result};

pub const MAX_CANDIDATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperclimbConfig {
    pub max_order: usize,
    pub samples_per_round: usize,
    pub effect_threshold: f64,
    pub max_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub partition: PartitionModel,
    pub schema: SchemaModel,
    pub effect: f64,
    pub mean: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecimationTrace {
    pub rounds: Vec<Round>,
}

impl DecimationTrace {
    /// Union of every schema fixed so far.
    pub fn fixed(&self, ell: usize) -> SchemaModel {
        self.rounds
            .iter()
            .try_fold(SchemaModel::empty(ell), |acc, r| acc.concat(&r.schema))
            .expect("rounds fix disjoint loci")
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

/// Noisy fitness samples drawn uniformly from one schema.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub chromosomes: Vec<BitString>,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn draw<F: Fitness + ?Sized>(
        f: &F,
        from: &SchemaModel,
        count: usize,
        rng: &mut RandomStream,
    ) -> Self {
        let mut chromosomes = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let g = from.sample(rng);
            values.push(f.evaluate(g.as_bits(), Some(rng)));
            chromosomes.push(g);
        }
        Self {
            chromosomes,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Estimated effect of `part` and its per-pattern schema means.
pub fn estimate_partition(samples: &SampleSet, part: &PartitionModel) -> (f64, Vec<f64>) {
    let k = part.schema_count();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (g, &v) in samples.chromosomes.iter().zip(&samples.values) {
        let p = part.pattern_of(g.as_bits());
        sums[p] += v;
        counts[p] += 1;
    }
    let overall = samples.mean();
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { overall } else { s / c as f64 })
        .collect();
    (population_variance(&means), means)
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Calls `visit` for each candidate locus subset of size `order` drawn from `pool`.
fn for_each_candidate(
    pool: &[usize],
    order: usize,
    rng: &mut RandomStream,
    mut visit: impl FnMut(&[usize]),
) {
    let u = pool.len();
    if order > u {
        return;
    }
    match binomial(u, order) {
        Some(c) if c <= MAX_CANDIDATES => {
            let mut idx: Vec<usize> = (0..order).collect();
            let mut buf = vec![0usize; order];
            loop {
                for (b, &i) in buf.iter_mut().zip(&idx) {
                    *b = pool[i];
                }
                visit(&buf);
                // next combination in lexicographic order
                let mut i = order;
                while i > 0 && idx[i - 1] == u - order + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..order {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        _ => {
            for _ in 0..MAX_CANDIDATES {
                let mut buf: Vec<usize> = rand::seq::index::sample(rng, u, order)
                    .into_iter()
                    .map(|i| pool[i])
                    .collect();
                buf.sort_unstable();
                visit(&buf);
            }
        }
    }
}

/// Runs the decimation loop on `f`.
pub fn run_hyperclimb<F: Fitness + ?Sized>(
    f: &F,
    cfg: &HyperclimbConfig,
    rng: &mut RandomStream,
) -> Result<DecimationTrace> {
    if cfg.max_order == 0 {
        return Err(Error::InvalidParameter("max_order must be at least 1"));
    }
    if cfg.samples_per_round == 0 {
        return Err(Error::InvalidParameter(
            "samples_per_round must be at least 1",
        ));
    }
    let ell = f.chrom_len();
    let mut trace = DecimationTrace::default();
    let mut fixed = SchemaModel::empty(ell);
    for _ in 0..cfg.max_rounds {
        let pool: Vec<usize> = (0..ell).filter(|&l| fixed.get(l).is_none()).collect();
        if pool.is_empty() {
            break;
        }
        let samples = SampleSet::draw(f, &fixed, cfg.samples_per_round, rng);
        let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        for order in 1..=cfg.max_order.min(pool.len()) {
            for_each_candidate(&pool, order, rng, |loci| {
                let part =
                    PartitionModel::new(ell, loci.iter().copied()).expect("distinct unfixed loci");
                let (effect, means) = estimate_partition(&samples, &part);
                let better = match &best {
                    None => true,
                    Some((e, l, _)) => effect > *e || (effect == *e && loci < l.as_slice()),
                };
                if better {
                    best = Some((effect, loci.to_vec(), means));
                }
            });
        }
        let Some((effect, loci, means)) = best else {
            break;
        };
        if effect.is_nan() || effect <= cfg.effect_threshold {
            break;
        }
        let (pattern, &mean) = means
            .iter()
            .enumerate()
            .fold(None::<(usize, &f64)>, |acc, (i, m)| match acc {
                Some((_, bm)) if *bm >= *m => acc,
                _ => Some((i, m)),
            })
            .expect("at least one schema");
        let partition = PartitionModel::new(ell, loci)?;
        let schema = partition.schema(pattern);
        fixed = fixed.concat(&schema)?;
        trace.rounds.push(Round {
            partition,
            schema,
            effect,
            mean,
            samples: samples.len(),
        });
    }
    Ok(trace)
}
