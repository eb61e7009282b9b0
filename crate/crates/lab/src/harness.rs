//! Multi-trial execution, aggregation and CSV output.
//!
//! Seeds derive from the master seed: stream `0` of the master builds the
//! landscape (random instances and embeddings), stream `t + 1` seeds trial
//! `t`. Runs with equal master seeds therefore share their instance and
//! per-trial seeds, which pairs clamped and unclamped variants trial by trial.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hyperclimb_core::problems::{gen_sk, gen_uniform_3sat, SatInstance, SpinSystem};
use hyperclimb_core::schema::SchemaModel;
use hyperclimb_core::staircase::StaircaseDescriptor;
use hyperclimb_core::uga::{GenerationStats, Uga, UgaConfig};
use hyperclimb_core::{Fitness, RandomStream};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Problem, StaircaseSource, Track};
use crate::formats;
use crate::stats::mean_se;

#[derive(Debug, Clone, PartialEq)]
pub enum Landscape {
    Staircase(StaircaseDescriptor),
    Sat(SatInstance),
    Spin(SpinSystem),
}

impl Landscape {
    pub fn chrom_len(&self) -> usize {
        match self {
            Landscape::Staircase(d) => d.span(),
            Landscape::Sat(s) => s.n_vars(),
            Landscape::Spin(s) => s.n_spins(),
        }
    }
}

/// Seed of trial `trial` (0-based) under `master`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    RandomStream::new(master).split(trial as u64 + 1).seed()
}

pub fn landscape_stream(master: u64) -> RandomStream {
    RandomStream::new(master).split(0)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn build_landscape(cfg: &ExperimentConfig) -> Result<Landscape> {
    let mut rng = landscape_stream(cfg.seed);
    Ok(match &cfg.problem {
        Problem::Staircase(StaircaseSource::Basic {
            height,
            order,
            delta,
        }) => Landscape::Staircase(StaircaseDescriptor::basic(*height, *order, *delta)?),
        Problem::Staircase(StaircaseSource::Embedded {
            height,
            order,
            delta,
            span,
        }) => Landscape::Staircase(StaircaseDescriptor::random_embedding(
            *height, *order, *delta, *span, &mut rng,
        )?),
        Problem::Staircase(StaircaseSource::File(p)) => Landscape::Staircase(
            formats::parse_descriptor(&read(p)?).with_context(|| p.display().to_string())?,
        ),
        Problem::SatGenerated { variables, clauses } => {
            Landscape::Sat(gen_uniform_3sat(*variables, *clauses, &mut rng)?)
        }
        Problem::SatFile(p) => Landscape::Sat(
            formats::read_dimacs(&read(p)?, true).with_context(|| p.display().to_string())?,
        ),
        Problem::SpinGenerated { spins } => Landscape::Spin(gen_sk(*spins, &mut rng)?),
        Problem::SpinFile(p) => Landscape::Spin(
            formats::read_couplings(&read(p)?).with_context(|| p.display().to_string())?,
        ),
    })
}

/// Tracked schemata and their column labels.
pub fn trackers(cfg: &ExperimentConfig, landscape: &Landscape) -> Vec<(String, SchemaModel)> {
    let Landscape::Staircase(d) = landscape else {
        return Vec::new();
    };
    let count = cfg.track_count.unwrap_or(d.height()).min(d.height());
    (1..=count)
        .filter_map(|i| {
            let idx = d.stage_index(i).ok()?;
            match cfg.track {
                Track::None => None,
                Track::Steps => Some((format!("step{i}"), d.step_schema(idx))),
                Track::Stages => Some((format!("stage{i}"), d.stage_schema(idx))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub trial: usize,
    pub seed: u64,
    pub stats: Vec<GenerationStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub name: String,
    pub tracked: Vec<String>,
    pub trials: Vec<TrialTrace>,
}

fn run_one<F: Fitness + Sync>(
    uga: UgaConfig,
    f: &F,
    schemata: &[SchemaModel],
    noise: bool,
) -> Result<Vec<GenerationStats>> {
    let generations = uga.generations;
    let mut engine = Uga::new(uga, f, schemata)?;
    if !noise {
        engine = engine.noiseless();
    }
    Ok((0..generations).map(|_| engine.step()).collect())
}

fn run_trials<F: Fitness + Sync>(
    cfg: &ExperimentConfig,
    f: &F,
    schemata: &[SchemaModel],
) -> Result<Vec<TrialTrace>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, t);
            let stats = run_one(cfg.uga(seed), f, schemata, cfg.noise)?;
            Ok(TrialTrace {
                trial: t,
                seed,
                stats,
            })
        })
        .collect()
}

/// Runs every trial of `cfg` on `landscape`; trials execute in parallel and
/// are returned in trial order.
pub fn run_on(cfg: &ExperimentConfig, landscape: &Landscape) -> Result<RunTrace> {
    let tracked = trackers(cfg, landscape);
    let schemata: Vec<SchemaModel> = tracked.iter().map(|t| t.1.clone()).collect();
    let trials = match landscape {
        Landscape::Staircase(d) => run_trials(cfg, d, &schemata)?,
        Landscape::Sat(s) => run_trials(cfg, s, &schemata)?,
        Landscape::Spin(s) => run_trials(cfg, s, &schemata)?,
    };
    Ok(RunTrace {
        name: cfg.name.clone(),
        tracked: tracked.into_iter().map(|t| t.0).collect(),
        trials,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunTrace> {
    run_on(cfg, &build_landscape(cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub generation: usize,
    pub avg_fitness: (f64, f64),
    pub best_fitness: (f64, f64),
    pub tracked: Vec<(f64, f64)>,
    pub clamped_loci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub tracked: Vec<String>,
    pub rows: Vec<AggregateRow>,
    /// Standard errors are reported as 0 because only one trial ran.
    pub single_trial: bool,
}

/// Per-generation mean and standard error across trials.
pub fn stats_aggregate(trace: &RunTrace) -> Aggregate {
    let trials = &trace.trials;
    assert!(!trials.is_empty(), "aggregation needs at least one trial");
    let generations = trials[0].stats.len();
    let column = |f: &dyn Fn(&GenerationStats) -> f64, g: usize| {
        let v: Vec<f64> = trials.iter().map(|t| f(&t.stats[g])).collect();
        mean_se(&v)
    };
    let rows = (0..generations)
        .map(|g| AggregateRow {
            generation: g,
            avg_fitness: column(&|s| s.average_fitness, g),
            best_fitness: column(&|s| s.best_fitness, g),
            tracked: (0..trace.tracked.len())
                .map(|k| column(&|s| s.tracked[k], g))
                .collect(),
            clamped_loci: column(&|s| s.clamped_loci as f64, g),
        })
        .collect();
    Aggregate {
        tracked: trace.tracked.clone(),
        rows,
        single_trial: trials.len() == 1,
    }
}

pub fn trials_csv(trace: &RunTrace) -> String {
    let mut out = String::from("trial,generation,avg_fitness,best_fitness");
    for name in &trace.tracked {
        let _ = write!(out, ",{name}_freq");
    }
    out.push_str(",clamped_loci\n");
    for t in &trace.trials {
        for s in &t.stats {
            let _ = write!(
                out,
                "{},{},{:?},{:?}",
                t.trial + 1,
                s.generation,
                s.average_fitness,
                s.best_fitness
            );
            for f in &s.tracked {
                let _ = write!(out, ",{f:?}");
            }
            let _ = writeln!(out, ",{}", s.clamped_loci);
        }
    }
    out
}

pub fn aggregate_csv(agg: &Aggregate) -> String {
    let mut out = String::from(
        "generation,mean_avg_fitness,se_avg_fitness,mean_best_fitness,se_best_fitness",
    );
    for name in &agg.tracked {
        let _ = write!(out, ",{name}_freq_mean,{name}_freq_se");
    }
    out.push_str(",clamped_loci_mean,clamped_loci_se\n");
    for r in &agg.rows {
        let _ = write!(
            out,
            "{},{:?},{:?},{:?},{:?}",
            r.generation, r.avg_fitness.0, r.avg_fitness.1, r.best_fitness.0, r.best_fitness.1
        );
        for (m, se) in &r.tracked {
            let _ = write!(out, ",{m:?},{se:?}");
        }
        let _ = writeln!(out, ",{:?},{:?}", r.clamped_loci.0, r.clamped_loci.1);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub trials: PathBuf,
    pub aggregate: PathBuf,
}

/// Writes `<name>_trials.csv` and `<name>_aggregate.csv` into `dir`.
pub fn write_outputs(trace: &RunTrace, agg: &Aggregate, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let files = OutputFiles {
        trials: dir.join(format!("{}_trials.csv", trace.name)),
        aggregate: dir.join(format!("{}_aggregate.csv", trace.name)),
    };
    fs::write(&files.trials, trials_csv(trace))
        .with_context(|| files.trials.display().to_string())?;
    fs::write(&files.aggregate, aggregate_csv(agg))
        .with_context(|| files.aggregate.display().to_string())?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse(
            "name = t\nproblem = staircase\nheight = 3\norder = 2\ndelta = 1\npopulation_size = 20\nmutation_rate = 0.01\ngenerations = 15\ntrials = 3\nseed = 9\n",
            None,
        )
        .unwrap()
    }

    #[test]
    fn row_counts_and_headers() {
        let cfg = small();
        let trace = run_experiment(&cfg).unwrap();
        let agg = stats_aggregate(&trace);
        let t = trials_csv(&trace);
        let a = aggregate_csv(&agg);
        assert_eq!(t.lines().count(), 1 + 15 * 3);
        assert_eq!(a.lines().count(), 1 + 15);
        assert_eq!(
            a.lines().next().unwrap(),
            "generation,mean_avg_fitness,se_avg_fitness,mean_best_fitness,se_best_fitness,\
             step1_freq_mean,step1_freq_se,step2_freq_mean,step2_freq_se,step3_freq_mean,step3_freq_se,\
             clamped_loci_mean,clamped_loci_se"
        );
        assert!(!agg.single_trial);
        assert_eq!(agg.rows[0].generation, 0);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let cfg = small();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        let mut sequential = a.clone();
        for t in &mut sequential.trials {
            let landscape = build_landscape(&cfg).unwrap();
            let Landscape::Staircase(d) = &landscape else {
                unreachable!()
            };
            let schemata: Vec<SchemaModel> = trackers(&cfg, &landscape)
                .into_iter()
                .map(|x| x.1)
                .collect();
            t.stats = run_one(cfg.uga(t.seed), d, &schemata, true).unwrap();
        }
        assert_eq!(
            aggregate_csv(&stats_aggregate(&a)),
            aggregate_csv(&stats_aggregate(&sequential))
        );
    }

    #[test]
    fn single_trial_is_flagged() {
        let mut cfg = small();
        cfg.trials = 1;
        let agg = stats_aggregate(&run_experiment(&cfg).unwrap());
        assert!(agg.single_trial);
        assert!(agg.rows.iter().all(|r| r.avg_fitness.1 == 0.0));
    }

    #[test]
    fn matched_seeds_share_instances() {
        let plain = ExperimentConfig::preset("sat-plain-desk").unwrap();
        let clamped = ExperimentConfig::preset("sat-clamped-desk").unwrap();
        assert_eq!(
            build_landscape(&plain).unwrap(),
            build_landscape(&clamped).unwrap()
        );
        assert_eq!(trial_seed(plain.seed, 3), trial_seed(clamped.seed, 3));
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
    }
}
