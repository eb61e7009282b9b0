//! Comparing a staircase with an embedding of its basic form: per-stage
//! distributions of the first generation at which the stage's frequency
//! exceeds one half, compared with two-sample KS tests.

use anyhow::{bail, Result};
use hyperclimb_core::staircase::StaircaseDescriptor;
use hyperclimb_core::uga::{GenerationStats, Uga, UgaConfig};
use hyperclimb_core::RandomStream;
use rayon::prelude::*;

use crate::stats::{ks_two_sample, KsResult};

pub const CROSSING_FREQUENCY: f64 = 0.5;
pub const SIGNIFICANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct StageComparison {
    pub stage: usize,
    pub basic: Vec<usize>,
    pub embedded: Vec<usize>,
    pub ks: KsResult,
}

impl StageComparison {
    pub fn passes(&self) -> bool {
        self.ks.p_value > SIGNIFICANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub stages: Vec<StageComparison>,
    /// Generation budget; runs that never cross are recorded at this value.
    pub budget: usize,
}

impl SymmetryReport {
    pub fn passes(&self) -> bool {
        self.stages.iter().all(StageComparison::passes)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("stage,ks_statistic,p_value,pass,basic_censored,embedded_censored\n");
        for s in &self.stages {
            let censored = |v: &[usize]| v.iter().filter(|&&g| g == self.budget).count();
            out.push_str(&format!(
                "{},{:?},{:?},{},{},{}\n",
                s.stage,
                s.ks.statistic,
                s.ks.p_value,
                s.passes(),
                censored(&s.basic),
                censored(&s.embedded)
            ));
        }
        out
    }
}

/// First generation at which tracker `k` exceeds `CROSSING_FREQUENCY`, or
/// `budget` if it never does.
pub fn crossing_generation(stats: &[GenerationStats], k: usize, budget: usize) -> usize {
    stats
        .iter()
        .find(|s| s.tracked[k] > CROSSING_FREQUENCY)
        .map_or(budget, |s| s.generation)
}

fn crossings(
    d: &StaircaseDescriptor,
    uga: &UgaConfig,
    trials: usize,
    stream: &RandomStream,
) -> Result<Vec<Vec<usize>>> {
    let schemata: Vec<_> = (1..=d.height())
        .map(|i| d.stage_schema(d.stage_index(i).expect("in range")))
        .collect();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut cfg = uga.clone();
            cfg.seed = stream.split(t as u64).seed();
            let mut engine = Uga::new(cfg, d, &schemata)?;
            let stats: Vec<_> = (0..uga.generations).map(|_| engine.step()).collect();
            Ok((0..d.height())
                .map(|k| crossing_generation(&stats, k, uga.generations))
                .collect())
        })
        .collect()
}

/// Runs `trials` independent seeds on each landscape; `uga.seed` is the
/// master seed (stream 1 for `basic`, stream 2 for `embedded`).
pub fn symmetry_test(
    basic: &StaircaseDescriptor,
    embedded: &StaircaseDescriptor,
    uga: &UgaConfig,
    trials: usize,
) -> Result<SymmetryReport> {
    if embedded.basic_form() != *basic {
        bail!("the embedded descriptor's basic form differs from the basic descriptor");
    }
    if trials == 0 {
        bail!("trials must be at least 1");
    }
    let master = RandomStream::new(uga.seed);
    let a = crossings(basic, uga, trials, &master.split(1))?;
    let b = crossings(embedded, uga, trials, &master.split(2))?;
    let stages = (0..basic.height())
        .map(|k| {
            let basic: Vec<usize> = a.iter().map(|t| t[k]).collect();
            let embedded: Vec<usize> = b.iter().map(|t| t[k]).collect();
            let to_f = |v: &[usize]| v.iter().map(|&g| g as f64).collect::<Vec<_>>();
            StageComparison {
                stage: k + 1,
                ks: ks_two_sample(&to_f(&basic), &to_f(&embedded)),
                basic,
                embedded,
            }
        })
        .collect();
    Ok(SymmetryReport {
        stages,
        budget: uga.generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uga() -> UgaConfig {
        UgaConfig {
            population_size: 40,
            mutation_rate: 0.01,
            generations: 60,
            clamping: None,
            seed: 5,
        }
    }

    #[test]
    fn identical_descriptors_are_indistinguishable() {
        let d = StaircaseDescriptor::basic(2, 2, 1.0).unwrap();
        let mut cfg = uga();
        cfg.seed = 11;
        let r = symmetry_test(&d, &d, &cfg, 8).unwrap();
        assert_eq!(r.stages.len(), 2);
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn mismatched_delta_is_rejected() {
        let a = StaircaseDescriptor::basic(2, 2, 1.0).unwrap();
        let b = StaircaseDescriptor::basic(2, 2, 0.5).unwrap();
        assert!(symmetry_test(&a, &b, &uga(), 4).is_err());
    }
}
