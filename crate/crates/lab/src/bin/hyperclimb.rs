use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hyperclimb_core::hyperclimb::{run_hyperclimb, HyperclimbConfig};
use hyperclimb_core::problems::{gen_sk, gen_uniform_3sat};
use hyperclimb_core::refractal::render_grid;
use hyperclimb_core::schema::{self, Mode, MAX_ENUM_LEN};
use hyperclimb_core::staircase::StaircaseDescriptor;
use hyperclimb_core::uga::{ClampingConfig, UgaConfig};
use hyperclimb_core::RandomStream;
use hyperclimb_lab::config::{parse_clamp, ExperimentConfig, PRESET_NAMES};
use hyperclimb_lab::harness::{landscape_stream, run_experiment, stats_aggregate, write_outputs};
use hyperclimb_lab::{formats, symmetry};

#[derive(Parser)]
#[command(
    name = "hyperclimb",
    version,
    about = "Uniform-crossover GA experiments on staircase, MAX-3SAT and spin-glass landscapes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-trial experiment and write per-trial and aggregate CSVs.
    Run(RunArgs),
    /// Generate a uniform random 3SAT instance in DIMACS CNF.
    GenSat {
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        clauses: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an SK spin glass with N(0,1) couplings.
    GenSpin {
        #[arg(long)]
        spins: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print analytic and enumerated staircase signals per stage.
    Signals(StaircaseArgs),
    /// Run the explicit hyperclimbing heuristic and write its decimation trace.
    Hyperclimb {
        #[command(flatten)]
        staircase: StaircaseArgs,
        #[arg(long, default_value_t = 2)]
        max_order: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, default_value_t = 100)]
        max_rounds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render a staircase onto a refractal grid as a CSV matrix.
    Refractal {
        #[command(flatten)]
        staircase: StaircaseArgs,
        /// Addressing file (`m`, `n`, `x`, `y`).
        #[arg(long)]
        addressing: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        no_noise: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare stage-crossing generations on a basic staircase and a random embedding.
    SymmetryTest {
        #[arg(long, default_value_t = 6)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        span: usize,
        #[arg(long, default_value_t = 200)]
        population: usize,
        #[arg(long, default_value_t = 0.003)]
        mutation: f64,
        #[arg(long, default_value_t = 400)]
        generations: usize,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Bundled preset name.
    #[arg(long, conflicts_with = "config", required_unless_present_any = ["config", "list_presets"])]
    preset: Option<String>,
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the bundled preset names and exit.
    #[arg(long)]
    list_presets: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Clamping as flag:unflag:wait:activation.
    #[arg(long, value_parser = parse_clamp)]
    clamp: Option<ClampingConfig>,
    /// Evaluate staircases without noise.
    #[arg(long)]
    no_noise: bool,
}

#[derive(Args)]
struct StaircaseArgs {
    /// Descriptor file; overrides the basic-staircase options.
    #[arg(long)]
    descriptor: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    height: usize,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

impl StaircaseArgs {
    fn load(&self) -> Result<StaircaseDescriptor> {
        match &self.descriptor {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("cannot read {}", p.display()))?;
                Ok(formats::parse_descriptor(&text).with_context(|| p.display().to_string())?)
            }
            None => Ok(StaircaseDescriptor::basic(
                self.height,
                self.order,
                self.delta,
            )?),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn run(args: RunArgs) -> Result<()> {
    if args.list_presets {
        for p in PRESET_NAMES {
            println!("{p}");
        }
        return Ok(());
    }
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => ExperimentConfig::preset(name)
            .with_context(|| format!("unknown preset `{name}`; try --list-presets"))?,
        (None, Some(path)) => ExperimentConfig::from_file(path)?,
        (None, None) => unreachable!("clap requires one of --preset/--config"),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        if t == 0 {
            bail!("--trials must be at least 1");
        }
        cfg.trials = t;
    }
    if let Some(g) = args.generations {
        cfg.generations = g;
    }
    if args.clamp.is_some() {
        cfg.clamping = args.clamp;
    }
    if args.no_noise {
        cfg.noise = false;
    }
    let trace = run_experiment(&cfg)?;
    let agg = stats_aggregate(&trace);
    if agg.single_trial {
        eprintln!("warning: one trial only; standard errors are reported as 0");
    }
    let files = write_outputs(&trace, &agg, &args.out_dir)?;
    if let Some(last) = agg.rows.last() {
        println!(
            "{}: {} trials x {} generations; final mean average fitness {:.4} (se {:.4}), mean best {:.4}, clamped loci {:.1}",
            cfg.name, cfg.trials, cfg.generations, last.avg_fitness.0, last.avg_fitness.1, last.best_fitness.0, last.clamped_loci.0
        );
    }
    println!(
        "wrote {}\nwrote {}",
        files.trials.display(),
        files.aggregate.display()
    );
    Ok(())
}

fn signals(args: StaircaseArgs) -> Result<()> {
    let d = args.load()?;
    let enumerable = d.span() <= MAX_ENUM_LEN;
    println!("stage,analytic_stage,analytic_step,analytic_conditional,enumerated_stage,enumerated_step,enumerated_conditional");
    for i in 1..=d.height() {
        let idx = d.stage_index(i)?;
        let a = d.analytic_signals(idx);
        let enumerated = if enumerable {
            let stage = schema::signal(&d, &d.stage_schema(idx), &mut Mode::Exact)?;
            let step = schema::signal(&d, &d.step_schema(idx), &mut Mode::Exact)?;
            let given = if i == 1 {
                schema::SchemaModel::empty(d.span())
            } else {
                d.stage_schema(d.stage_index(i - 1)?)
            };
            let cond =
                schema::conditional_signal(&d, &d.step_schema(idx), &given, &mut Mode::Exact)?;
            format!("{stage:?},{step:?},{cond:?}")
        } else {
            "NA,NA,NA".to_string()
        };
        println!(
            "{i},{:?},{:?},{:?},{enumerated}",
            a.stage, a.step, a.conditional_step
        );
    }
    if !enumerable {
        eprintln!(
            "note: span {} exceeds {MAX_ENUM_LEN}; enumerated columns omitted",
            d.span()
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::GenSat {
            vars,
            clauses,
            seed,
            out,
        } => {
            let inst = gen_uniform_3sat(vars, clauses, &mut landscape_stream(seed))?;
            write(&out, &formats::write_dimacs(&inst))
        }
        Command::GenSpin { spins, seed, out } => {
            let sys = gen_sk(spins, &mut landscape_stream(seed))?;
            write(&out, &formats::write_couplings(&sys))
        }
        Command::Signals(args) => signals(args),
        Command::Hyperclimb {
            staircase,
            max_order,
            samples,
            threshold,
            max_rounds,
            seed,
            out_dir,
        } => {
            let d = staircase.load()?;
            let cfg = HyperclimbConfig {
                max_order,
                samples_per_round: samples,
                effect_threshold: threshold,
                max_rounds,
            };
            let trace = run_hyperclimb(&d, &cfg, &mut RandomStream::new(seed))?;
            let csv = formats::write_trace_csv(&trace);
            match out_dir {
                Some(dir) => write(&dir.join("hyperclimb_trace.csv"), &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Refractal {
            staircase,
            addressing,
            seed,
            no_noise,
            out_dir,
        } => {
            let d = staircase.load()?;
            let text = fs::read_to_string(&addressing)
                .with_context(|| format!("cannot read {}", addressing.display()))?;
            let a = formats::parse_addressing(&text)
                .with_context(|| addressing.display().to_string())?;
            let mut rng = RandomStream::new(seed);
            let grid = render_grid(&d, &a, (!no_noise).then_some(&mut rng))?;
            write(
                &out_dir.join("refractal.csv"),
                &formats::write_grid_csv(&grid),
            )
        }
        Command::SymmetryTest {
            height,
            order,
            delta,
            span,
            population,
            mutation,
            generations,
            trials,
            seed,
            out_dir,
        } => {
            let basic = StaircaseDescriptor::basic(height, order, delta)?;
            let embedded = StaircaseDescriptor::random_embedding(
                height,
                order,
                delta,
                span,
                &mut landscape_stream(seed),
            )?;
            let uga = UgaConfig {
                population_size: population,
                mutation_rate: mutation,
                generations,
                clamping: None,
                seed,
            };
            let report = symmetry::symmetry_test(&basic, &embedded, &uga, trials)?;
            let csv = report.to_csv();
            print!("{csv}");
            println!("overall: {}", if report.passes() { "pass" } else { "fail" });
            if let Some(dir) = out_dir {
                write(&dir.join("symmetry.csv"), &csv)?;
            }
            Ok(())
        }
    }
}
