//! The uniform-crossover genetic algorithm.
//!
//! One generation: measure clamp frequencies on the incoming population,
//! evaluate raw fitness, record statistics, sigma-scale, select `N` parents by
//! stochastic universal sampling, shuffle them, cross row `i` with row
//! `i + N/2` under i.i.d. uniform masks, then flip every non-exempt bit with
//! probability `p_m`.
//!
//! Sigma scaling clips at zero from below: `max(0, 1 + (f - mean) / sd)`.
//! Clipping from above with `min(0, ..)` would give every above-average
//! individual zero weight, so the lower clip is what is implemented.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::fitness::Fitness;
use crate::population::{BitString, Population, WORD_BITS};
use crate::rng::RandomStream;
use crate::schema::SchemaModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampingConfig {
    pub flag_freq_threshold: f64,
    pub unflag_freq_threshold: f64,
    pub waiting_period: usize,
    pub activation_generation: usize,
}

impl ClampingConfig {
    pub fn new(
        flag: f64,
        unflag: f64,
        waiting_period: usize,
        activation_generation: usize,
    ) -> Result<Self> {
        let cfg = Self {
            flag_freq_threshold: flag,
            unflag_freq_threshold: unflag,
            waiting_period,
            activation_generation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (f, u) = (self.flag_freq_threshold, self.unflag_freq_threshold);
        if !(0.5..=1.0).contains(&f) {
            return Err(Error::InvalidParameter(
                "flag threshold must lie in [0.5, 1]",
            ));
        }
        if !(0.5..=f).contains(&u) {
            return Err(Error::InvalidParameter(
                "unflag threshold must lie in [0.5, flag threshold]",
            ));
        }
        if self.waiting_period == 0 {
            return Err(Error::InvalidParameter("waiting period must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UgaConfig {
    pub population_size: usize,
    pub mutation_rate: f64,
    pub generations: usize,
    pub clamping: Option<ClampingConfig>,
    pub seed: u64,
}

impl UgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.population_size % 2 == 1 {
            return Err(Error::OddPopulation(self.population_size));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidParameter("mutation rate must lie in [0, 1]"));
        }
        if self.generations == 0 {
            return Err(Error::InvalidParameter("generations must be positive"));
        }
        if let Some(c) = &self.clamping {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LocusClamp {
    pub flagged: bool,
    pub flagged_bit: bool,
    pub consecutive: usize,
}

/// Per-locus flag bookkeeping of the clamping mechanism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClampState {
    loci: Vec<LocusClamp>,
}

impl ClampState {
    pub fn new(len: usize) -> Self {
        Self {
            loci: vec![LocusClamp::default(); len],
        }
    }

    pub fn loci(&self) -> &[LocusClamp] {
        &self.loci
    }

    pub fn flagged_count(&self) -> usize {
        self.loci.iter().filter(|l| l.flagged).count()
    }

    /// Applies one generation's frequency readings (`one_counts` out of `n`).
    /// Returns the exemption mask for the generation.
    pub fn update(
        &mut self,
        one_counts: &[usize],
        n: usize,
        cfg: &ClampingConfig,
        generation: usize,
    ) -> BitString {
        let mut exempt = BitString::zeros(self.loci.len());
        if generation < cfg.activation_generation {
            self.loci.fill(LocusClamp::default());
            return exempt;
        }
        for (j, (l, &ones)) in self.loci.iter_mut().zip(one_counts).enumerate() {
            let f1 = ones as f64 / n as f64;
            let f0 = (n - ones) as f64 / n as f64;
            let dominant = f1.max(f0);
            if l.flagged {
                if dominant > cfg.unflag_freq_threshold {
                    l.consecutive += 1;
                } else {
                    *l = LocusClamp::default();
                }
            } else if dominant > cfg.flag_freq_threshold {
                *l = LocusClamp {
                    flagged: true,
                    flagged_bit: f1 > f0,
                    consecutive: 1,
                };
            }
            if l.flagged && l.consecutive >= cfg.waiting_period {
                exempt.set(j, true);
            }
        }
        exempt
    }
}

/// Updates `state` from the population at the start of `generation`.
pub fn clamp_update(
    state: &mut ClampState,
    pop: &Population,
    cfg: &ClampingConfig,
    generation: usize,
) -> BitString {
    state.update(&pop.one_counts(), pop.size(), cfg, generation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub average_fitness: f64,
    pub best_fitness: f64,
    /// Frequency of each tracked schema, in tracker order.
    pub tracked: Vec<f64>,
    /// Loci exempted from mutation in this generation.
    pub clamped_loci: usize,
}

/// Sigma scaling with population standard deviation.
pub fn sigma_scale(raw: &[f64]) -> Vec<f64> {
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var);
    if sd == 0.0 || !sd.is_finite() {
        return vec![1.0; raw.len()];
    }
    raw.iter()
        .map(|x| (1.0 + (x - mean) / sd).max(0.0))
        .collect()
}

/// Copy counts of stochastic universal sampling for pointer offset
/// `offset ∈ [0, 1)`, in units of the pointer spacing.
pub fn sus_counts(adjusted: &[f64], offset: f64) -> Vec<usize> {
    let n = adjusted.len();
    let total: f64 = adjusted.iter().sum();
    let mut counts = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut prev_ceil = 0i64;
    for (i, &a) in adjusted.iter().enumerate() {
        cum += n as f64 * a / total;
        if i + 1 == n {
            cum = n as f64;
        }
        let c = libm::ceil(cum - offset) as i64;
        counts.push((c - prev_ceil).max(0) as usize);
        prev_ceil = prev_ceil.max(c);
    }
    counts
}

/// Indices of the `N` selected parents, shuffled.
pub fn sus_select_indices(adjusted: &[f64], rng: &mut RandomStream) -> Vec<usize> {
    let n = adjusted.len();
    let total: f64 = adjusted.iter().sum();
    let mut picks = Vec::with_capacity(n);
    if total > 0.0 && total.is_finite() {
        let counts = sus_counts(adjusted, rng.uniform());
        for (i, &c) in counts.iter().enumerate() {
            picks.extend(core::iter::repeat_n(i, c));
        }
    } else {
        picks.extend((0..n).map(|_| rng.below(n)));
    }
    picks.shuffle(rng);
    picks
}

/// Selects `N` parents by stochastic universal sampling; order is shuffled.
/// An all-zero weight vector falls back to uniform selection with replacement.
pub fn sus_select(pop: &Population, adjusted: &[f64], rng: &mut RandomStream) -> Population {
    let picks = sus_select_indices(adjusted, rng);
    gather(pop, &picks)
}

fn gather(pop: &Population, picks: &[usize]) -> Population {
    let mut out = Population::zeros(pop.size(), pop.chrom_len()).expect("same dimensions");
    for (dst, &src) in picks.iter().enumerate() {
        out.row_words_mut(dst).copy_from_slice(pop.row(src).words());
    }
    out
}

/// Uniform crossover of row `i` with row `i + N/2` under explicit masks
/// (`masks[i]` bit 1 swaps the alleles).
pub fn crossover_with_masks(parents: &Population, masks: &[BitString]) -> Result<Population> {
    let half = parents.size() / 2;
    if masks.len() != half {
        return Err(Error::InvalidDimension("need N/2 crossover masks"));
    }
    let mut out = parents.clone();
    for (i, m) in masks.iter().enumerate() {
        if m.len() != parents.chrom_len() {
            return Err(Error::LengthMismatch {
                expected: parents.chrom_len(),
                got: m.len(),
            });
        }
        swap_masked(&mut out, i, i + half, |w| m.words()[w]);
    }
    Ok(out)
}

fn swap_masked(pop: &mut Population, a: usize, b: usize, mut mask: impl FnMut(usize) -> u64) {
    let stride = pop.stride();
    let words = pop.words_mut();
    let (lo, hi) = words.split_at_mut(b * stride);
    let ra = &mut lo[a * stride..(a + 1) * stride];
    let rb = &mut hi[..stride];
    for w in 0..stride {
        let d = (ra[w] ^ rb[w]) & mask(w);
        ra[w] ^= d;
        rb[w] ^= d;
    }
}

/// Uniform crossover with freshly drawn i.i.d. uniform masks.
pub fn uniform_crossover(parents: &Population, rng: &mut RandomStream) -> Population {
    let mut out = parents.clone();
    uniform_crossover_in_place(&mut out, rng);
    out
}

pub(crate) fn uniform_crossover_in_place(pop: &mut Population, rng: &mut RandomStream) {
    let half = pop.size() / 2;
    for i in 0..half {
        // Padding bits are zero in both rows, so unmasked high bits are harmless.
        swap_masked(pop, i, i + half, |_| rng.next_word());
    }
}

/// Flips each bit at a non-exempt locus independently with probability `p_m`.
pub fn mutate(
    pop: &Population,
    p_m: f64,
    exempt: Option<&BitString>,
    rng: &mut RandomStream,
) -> Population {
    let mut out = pop.clone();
    mutate_in_place(&mut out, p_m, exempt, rng);
    out
}

pub(crate) fn mutate_in_place(
    pop: &mut Population,
    p_m: f64,
    exempt: Option<&BitString>,
    rng: &mut RandomStream,
) {
    let (n, len, stride) = (pop.size(), pop.chrom_len(), pop.stride());
    let keep: Vec<u64> = match exempt {
        Some(e) => e.words().iter().map(|w| !w).collect(),
        None => vec![u64::MAX; stride],
    };
    let words = pop.words_mut();
    if p_m <= 0.0 {
        return;
    }
    if p_m >= 1.0 {
        let tail = crate::population::tail_mask(len);
        for row in words.chunks_mut(stride) {
            for (w, k) in row.iter_mut().zip(&keep) {
                *w ^= *k;
            }
            *row.last_mut().unwrap() &= tail;
        }
        return;
    }
    // Geometric gaps between successive flips over the N * len bit positions.
    let log_q = libm::log1p(-p_m);
    let total = (n * len) as u64;
    let mut pos = 0u64;
    loop {
        let u = 1.0 - rng.uniform();
        let gap = libm::floor(libm::log(u) / log_q);
        if gap >= (total - pos) as f64 {
            break;
        }
        pos += gap as u64;
        let (row, locus) = ((pos / len as u64) as usize, (pos % len as u64) as usize);
        let (w, bit) = (locus / WORD_BITS, 1u64 << (locus % WORD_BITS));
        words[row * stride + w] ^= bit & keep[w];
        pos += 1;
        if pos >= total {
            break;
        }
    }
}

struct Tracker {
    care: Vec<u64>,
    value: Vec<u64>,
}

impl Tracker {
    fn new(s: &SchemaModel) -> Self {
        let (care, value) = s.masks();
        Self { care, value }
    }

    fn frequency(&self, pop: &Population) -> f64 {
        let hits = pop
            .rows()
            .filter(|r| {
                r.words()
                    .iter()
                    .zip(&self.care)
                    .zip(&self.value)
                    .all(|((w, c), v)| w & c == *v)
            })
            .count();
        hits as f64 / pop.size() as f64
    }
}

/// A running GA: owns its population, stream, and clamp state.
pub struct Uga<F> {
    cfg: UgaConfig,
    fitness: F,
    trackers: Vec<Tracker>,
    pop: Population,
    rng: RandomStream,
    clamp: Option<ClampState>,
    generation: usize,
    noisy: bool,
    raw: Vec<f64>,
}

impl<F: Fitness> Uga<F> {
    pub fn new(cfg: UgaConfig, fitness: F, trackers: &[SchemaModel]) -> Result<Self> {
        cfg.validate()?;
        let len = fitness.chrom_len();
        for t in trackers {
            if t.ell() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    got: t.ell(),
                });
            }
        }
        let mut rng = RandomStream::new(cfg.seed);
        let pop = Population::random(cfg.population_size, len, &mut rng)?;
        let clamp = cfg.clamping.map(|_| ClampState::new(len));
        Ok(Self {
            trackers: trackers.iter().map(Tracker::new).collect(),
            raw: vec![0.0; cfg.population_size],
            cfg,
            fitness,
            pop,
            rng,
            clamp,
            generation: 0,
            noisy: true,
        })
    }

    /// Evaluate with the noiseless oracle instead of noisy draws.
    pub fn noiseless(mut self) -> Self {
        self.noisy = false;
        self
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn clamp_state(&self) -> Option<&ClampState> {
        self.clamp.as_ref()
    }

    /// Runs one generation and returns its statistics.
    pub fn step(&mut self) -> GenerationStats {
        let exempt = match (&mut self.clamp, &self.cfg.clamping) {
            (Some(state), Some(c)) => Some(clamp_update(state, &self.pop, c, self.generation)),
            _ => None,
        };
        for (i, row) in self.pop.rows().enumerate() {
            self.raw[i] = if self.noisy {
                self.fitness.evaluate(row, Some(&mut self.rng))
            } else {
                self.fitness.evaluate(row, None)
            };
        }
        let stats = GenerationStats {
            generation: self.generation,
            average_fitness: self.raw.iter().sum::<f64>() / self.raw.len() as f64,
            best_fitness: self.raw.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            tracked: self
                .trackers
                .iter()
                .map(|t| t.frequency(&self.pop))
                .collect(),
            clamped_loci: exempt.as_ref().map_or(0, BitString::count_ones),
        };
        let adjusted = sigma_scale(&self.raw);
        let mut next = sus_select(&self.pop, &adjusted, &mut self.rng);
        uniform_crossover_in_place(&mut next, &mut self.rng);
        mutate_in_place(
            &mut next,
            self.cfg.mutation_rate,
            exempt.as_ref(),
            &mut self.rng,
        );
        self.pop = next;
        self.generation += 1;
        stats
    }
}

/// Runs `cfg.generations` generations and returns the per-generation statistics.
pub fn run_uga<F: Fitness>(
    cfg: &UgaConfig,
    fitness: F,
    trackers: &[SchemaModel],
) -> Result<Vec<GenerationStats>> {
    let mut uga = Uga::new(cfg.clone(), fitness, trackers)?;
    Ok((0..cfg.generations).map(|_| uga.step()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staircase::StaircaseDescriptor;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn sigma_scale_golden() {
        assert_eq!(sigma_scale(&[2.0, 2.0, 2.0]), vec![1.0; 3]);
        let sd = libm::sqrt(8.0 / 3.0);
        assert!(approx(
            &sigma_scale(&[0.0, 2.0, 4.0]),
            &[0.0, 1.0, 1.0 + 2.0 / sd],
            1e-12
        ));
        assert!((1.0 + 2.0 / sd - 2.224_744_871_391_589).abs() < 1e-12);
        let s3 = libm::sqrt(3.0);
        let lo = 1.0 - 1.0 / s3;
        assert!(approx(
            &sigma_scale(&[-5.0, -5.0, -5.0, -1.0]),
            &[lo, lo, lo, 1.0 + 3.0 / s3],
            1e-12
        ));
        assert!((lo - 0.422_649_730_810_374).abs() < 1e-12);
        assert!((1.0 + 3.0 / s3 - 2.732_050_807_568_877).abs() < 1e-12);
    }

    #[test]
    fn sus_equal_weights_select_each_once() {
        for &u in &[0.0, 0.3, 0.999] {
            assert_eq!(sus_counts(&[2.0; 6], u), vec![1; 6]);
        }
    }

    #[test]
    fn sus_two_individuals() {
        assert_eq!(sus_counts(&[3.0, 1.0], 0.2), vec![2, 0]);
        assert_eq!(sus_counts(&[3.0, 1.0], 0.7), vec![1, 1]);
        let mut rng = RandomStream::new(9);
        let trials = 20_000;
        let twos = (0..trials)
            .filter(|_| sus_counts(&[3.0, 1.0], rng.uniform())[0] == 2)
            .count();
        assert!(sus_counts(&[3.0, 1.0], 0.999)[0] >= 1);
        let p = twos as f64 / trials as f64;
        assert!((p - 0.5).abs() < 0.02, "{p}");
    }

    #[test]
    fn sus_zero_weights_fall_back_to_uniform() {
        let mut rng = RandomStream::new(3);
        let picks = sus_select_indices(&[0.0; 8], &mut rng);
        assert_eq!(picks.len(), 8);
        assert!(picks.iter().all(|&i| i < 8));
    }

    #[test]
    fn crossover_hand_trace() {
        let parents = Population::from_rows(&[
            BitString::parse("1111").unwrap(),
            BitString::parse("0000").unwrap(),
        ])
        .unwrap();
        let out = crossover_with_masks(&parents, &[BitString::parse("0101").unwrap()]).unwrap();
        assert_eq!(out.dump(), "1010\n0101\n");
    }

    #[test]
    fn crossover_of_clones_is_identity() {
        let row = BitString::random(100, &mut RandomStream::new(1));
        let parents = Population::from_rows(&vec![row; 6]).unwrap();
        assert_eq!(
            uniform_crossover(&parents, &mut RandomStream::new(2)),
            parents
        );
    }

    #[test]
    fn mutation_extremes() {
        let mut rng = RandomStream::new(4);
        let pop = Population::random(4, 70, &mut rng).unwrap();
        assert_eq!(mutate(&pop, 0.0, None, &mut rng), pop);
        let flipped = mutate(&pop, 1.0, None, &mut rng);
        for (a, b) in pop.rows().zip(flipped.rows()) {
            assert_eq!(a.to_bit_string().complement(), b.to_bit_string());
        }
    }

    #[test]
    fn mutation_respects_exemptions() {
        let mut rng = RandomStream::new(5);
        let pop = Population::random(10, 130, &mut rng).unwrap();
        let mut exempt = BitString::zeros(130);
        for j in (0..130).step_by(3) {
            exempt.set(j, true);
        }
        let out = mutate(&pop, 0.5, Some(&exempt), &mut rng);
        for i in 0..10 {
            for j in (0..130).step_by(3) {
                assert_eq!(out.get(i, j), pop.get(i, j));
            }
        }
        let all = mutate(&pop, 1.0, Some(&exempt), &mut rng);
        for i in 0..10 {
            for j in 0..130 {
                assert_eq!(all.get(i, j), pop.get(i, j) ^ !exempt.get(j));
            }
        }
    }

    #[test]
    fn mutation_rate_is_calibrated() {
        let mut rng = RandomStream::new(6);
        let pop = Population::zeros(200, 1000).unwrap();
        let out = mutate(&pop, 0.003, None, &mut rng);
        let flips: usize = out.one_counts().iter().sum();
        // 200_000 bits, mean 600, sd ~24.5
        assert!((flips as f64 - 600.0).abs() < 5.0 * 24.5, "{flips}");
    }

    fn freq_pop(ones: usize, n: usize) -> Population {
        let rows: Vec<BitString> = (0..n).map(|i| BitString::from_bools(&[i < ones])).collect();
        Population::from_rows(&rows).unwrap()
    }

    #[test]
    fn clamp_flag_then_exempt() {
        let cfg = ClampingConfig::new(0.99, 0.9, 2, 0).unwrap();
        let mut st = ClampState::new(1);
        let seq = [995, 950, 950];
        let mut exempt = Vec::new();
        for (t, &ones) in seq.iter().enumerate() {
            exempt.push(clamp_update(&mut st, &freq_pop(ones, 1000), &cfg, t).get(0));
            if t == 0 {
                assert_eq!(st.loci()[0].consecutive, 1);
            }
        }
        assert_eq!(exempt, vec![false, true, true]);
        assert_eq!(st.loci()[0].consecutive, 3);
    }

    #[test]
    fn clamp_unflag_resets() {
        let cfg = ClampingConfig::new(0.99, 0.9, 2, 0).unwrap();
        let mut st = ClampState::new(1);
        assert!(!clamp_update(&mut st, &freq_pop(995, 1000), &cfg, 0).get(0));
        assert!(st.loci()[0].flagged);
        assert!(!clamp_update(&mut st, &freq_pop(850, 1000), &cfg, 1).get(0));
        assert_eq!(st.loci()[0], LocusClamp::default());
    }

    #[test]
    fn clamp_zero_frequency_is_symmetric() {
        let cfg = ClampingConfig::new(0.99, 0.9, 1, 0).unwrap();
        let mut a = ClampState::new(1);
        let mut b = ClampState::new(1);
        let ea = clamp_update(&mut a, &freq_pop(995, 1000), &cfg, 0);
        let eb = clamp_update(&mut b, &freq_pop(5, 1000), &cfg, 0);
        assert_eq!(ea, eb);
        assert!(ea.get(0));
        assert!(a.loci()[0].flagged_bit);
        assert!(!b.loci()[0].flagged_bit);
    }

    #[test]
    fn clamp_waits_for_activation() {
        let cfg = ClampingConfig::new(0.99, 0.9, 1, 5).unwrap();
        let mut st = ClampState::new(1);
        for t in 0..5 {
            assert!(!clamp_update(&mut st, &freq_pop(1000, 1000), &cfg, t).get(0));
            assert_eq!(st.flagged_count(), 0);
        }
        assert!(clamp_update(&mut st, &freq_pop(1000, 1000), &cfg, 5).get(0));
    }

    #[test]
    fn clamping_config_validation() {
        assert!(ClampingConfig::new(0.4, 0.4, 1, 0).is_err());
        assert!(ClampingConfig::new(0.9, 0.95, 1, 0).is_err());
        assert!(ClampingConfig::new(0.99, 0.8, 0, 0).is_err());
        assert!(ClampingConfig::new(0.99, 0.8, 200, 2000).is_ok());
    }

    #[test]
    fn run_is_deterministic() {
        let f = StaircaseDescriptor::basic(3, 2, 0.5).unwrap();
        let cfg = UgaConfig {
            population_size: 20,
            mutation_rate: 0.01,
            generations: 30,
            clamping: Some(ClampingConfig::new(0.9, 0.8, 3, 0).unwrap()),
            seed: 77,
        };
        let tracker = [f.stage_schema(f.stage_index(1).unwrap())];
        let a = run_uga(&cfg, &f, &tracker).unwrap();
        let b = run_uga(&cfg, &f, &tracker).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        assert!(a.iter().all(|s| s.best_fitness >= s.average_fitness));
        assert!(a.iter().enumerate().all(|(i, s)| s.generation == i));
    }

    #[test]
    fn run_rejects_invalid_config() {
        let f = StaircaseDescriptor::basic(1, 1, 1.0).unwrap();
        let cfg = UgaConfig {
            population_size: 5,
            mutation_rate: 0.01,
            generations: 1,
            clamping: None,
            seed: 0,
        };
        assert_eq!(run_uga(&cfg, &f, &[]), Err(Error::OddPopulation(5)));
    }
}
