//! Experiment configuration: flat `key = value` files and the bundled presets.

use std::path::{Path, PathBuf};

use hyperclimb_core::uga::{ClampingConfig, UgaConfig};

use crate::formats::{FormatError, KeyValues};

#[derive(Debug, Clone, PartialEq)]
pub enum StaircaseSource {
    Basic {
        height: usize,
        order: usize,
        delta: f64,
    },
    /// Random loci and targets drawn from the experiment's landscape stream.
    Embedded {
        height: usize,
        order: usize,
        delta: f64,
        span: usize,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Staircase(StaircaseSource),
    SatGenerated { variables: usize, clauses: usize },
    SatFile(PathBuf),
    SpinGenerated { spins: usize },
    SpinFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    None,
    Steps,
    Stages,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: Problem,
    pub population_size: usize,
    pub mutation_rate: f64,
    pub generations: usize,
    pub trials: usize,
    pub seed: u64,
    pub clamping: Option<ClampingConfig>,
    pub noise: bool,
    pub track: Track,
    /// Track only the first `k` steps or stages.
    pub track_count: Option<usize>,
}

const KNOWN_KEYS: &[&str] = &[
    "name",
    "problem",
    "height",
    "order",
    "delta",
    "span",
    "embedding",
    "descriptor",
    "variables",
    "clauses",
    "dimacs",
    "spins",
    "couplings",
    "population_size",
    "mutation_rate",
    "generations",
    "trials",
    "seed",
    "clamp",
    "noise",
    "track",
    "track_count",
];

pub const PRESET_NAMES: &[&str] = &[
    "phi-star",
    "phi-star-desk",
    "phi-embedded",
    "phi-embedded-desk",
    "phi-star-clamped",
    "phi-star-clamped-desk",
    "sat-plain",
    "sat-plain-desk",
    "sat-clamped",
    "sat-clamped-desk",
    "spin-plain",
    "spin-plain-desk",
    "spin-clamped",
    "spin-clamped-desk",
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "phi-star" => include_str!("../presets/phi-star.conf"),
        "phi-star-desk" => include_str!("../presets/phi-star-desk.conf"),
        "phi-embedded" => include_str!("../presets/phi-embedded.conf"),
        "phi-embedded-desk" => include_str!("../presets/phi-embedded-desk.conf"),
        "phi-star-clamped" => include_str!("../presets/phi-star-clamped.conf"),
        "phi-star-clamped-desk" => include_str!("../presets/phi-star-clamped-desk.conf"),
        "sat-plain" => include_str!("../presets/sat-plain.conf"),
        "sat-plain-desk" => include_str!("../presets/sat-plain-desk.conf"),
        "sat-clamped" => include_str!("../presets/sat-clamped.conf"),
        "sat-clamped-desk" => include_str!("../presets/sat-clamped-desk.conf"),
        "spin-plain" => include_str!("../presets/spin-plain.conf"),
        "spin-plain-desk" => include_str!("../presets/spin-plain-desk.conf"),
        "spin-clamped" => include_str!("../presets/spin-clamped.conf"),
        "spin-clamped-desk" => include_str!("../presets/spin-clamped-desk.conf"),
        _ => return None,
    })
}

/// Parses `flag:unflag:wait:activation`.
pub fn parse_clamp(text: &str) -> Result<ClampingConfig, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [f, u, w, a] = parts.as_slice() else {
        return Err(format!(
            "expected flag:unflag:wait:activation, found `{text}`"
        ));
    };
    let num = |s: &str, what: &str| {
        s.parse::<f64>()
            .map_err(|_| format!("invalid {what} `{s}`"))
    };
    let int = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("invalid {what} `{s}`"))
    };
    ClampingConfig::new(
        num(f, "flag threshold")?,
        num(u, "unflag threshold")?,
        int(w, "waiting period")?,
        int(a, "activation generation")?,
    )
    .map_err(|e| e.to_string())
}

fn line_err(kv: &KeyValues, key: &str, message: impl Into<String>) -> FormatError {
    match kv.line_of(key) {
        Some(line) => FormatError::Line {
            line,
            message: message.into(),
        },
        None => FormatError::Invalid(message.into()),
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Option<Self> {
        preset_text(name).map(|t| Self::parse(t, None).expect("bundled presets are valid"))
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text, path.parent()).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    /// Parses a configuration; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, FormatError> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(KNOWN_KEYS)?;
        let path = |key: &str| -> Option<PathBuf> {
            kv.raw(key).map(|(_, v)| match base {
                Some(b) if Path::new(v).is_relative() => b.join(v),
                _ => PathBuf::from(v),
            })
        };
        let (pl, problem_name) = kv.require("problem")?;
        let exclusive = |keys: &[&str], allowed: &[&str]| -> Result<(), FormatError> {
            for k in keys {
                if kv.contains(k) && !allowed.contains(k) {
                    return Err(line_err(
                        &kv,
                        k,
                        format!("`{k}` does not apply to problem `{problem_name}`"),
                    ));
                }
            }
            Ok(())
        };
        let staircase_keys = [
            "height",
            "order",
            "delta",
            "span",
            "embedding",
            "descriptor",
        ];
        let sat_keys = ["variables", "clauses", "dimacs"];
        let spin_keys = ["spins", "couplings"];
        let all: Vec<&str> = staircase_keys
            .iter()
            .chain(&sat_keys)
            .chain(&spin_keys)
            .copied()
            .collect();
        let problem = match problem_name {
            "staircase" => {
                exclusive(&all, &staircase_keys)?;
                if let Some(p) = path("descriptor") {
                    exclusive(&staircase_keys, &["descriptor"])?;
                    Problem::Staircase(StaircaseSource::File(p))
                } else {
                    let height = kv.parse_required("height")?;
                    let order = kv.parse_required("order")?;
                    let delta = kv.parse_required("delta")?;
                    match kv.raw("embedding").map(|e| e.1).unwrap_or("basic") {
                        "basic" => {
                            exclusive(&["span"], &[])?;
                            Problem::Staircase(StaircaseSource::Basic {
                                height,
                                order,
                                delta,
                            })
                        }
                        "random" => Problem::Staircase(StaircaseSource::Embedded {
                            height,
                            order,
                            delta,
                            span: kv.parse_required("span")?,
                        }),
                        other => {
                            return Err(line_err(
                                &kv,
                                "embedding",
                                format!("embedding must be `basic` or `random`, found `{other}`"),
                            ))
                        }
                    }
                }
            }
            "sat" => {
                exclusive(&all, &sat_keys)?;
                match path("dimacs") {
                    Some(p) => {
                        exclusive(&sat_keys, &["dimacs"])?;
                        Problem::SatFile(p)
                    }
                    None => Problem::SatGenerated {
                        variables: kv.parse_required("variables")?,
                        clauses: kv.parse_required("clauses")?,
                    },
                }
            }
            "spin" => {
                exclusive(&all, &spin_keys)?;
                match path("couplings") {
                    Some(p) => {
                        exclusive(&spin_keys, &["couplings"])?;
                        Problem::SpinFile(p)
                    }
                    None => Problem::SpinGenerated {
                        spins: kv.parse_required("spins")?,
                    },
                }
            }
            other => {
                return Err(FormatError::Line {
                    line: pl,
                    message: format!(
                        "problem must be `staircase`, `sat` or `spin`, found `{other}`"
                    ),
                })
            }
        };
        let clamping = match kv.raw("clamp") {
            Some((line, v)) => {
                Some(parse_clamp(v).map_err(|message| FormatError::Line { line, message })?)
            }
            None => None,
        };
        let is_staircase = matches!(problem, Problem::Staircase(_));
        let track = match kv.raw("track").map(|t| t.1) {
            None => {
                if is_staircase {
                    Track::Steps
                } else {
                    Track::None
                }
            }
            Some("none") => Track::None,
            Some("steps") if is_staircase => Track::Steps,
            Some("stages") if is_staircase => Track::Stages,
            Some(other) => {
                return Err(line_err(
                    &kv,
                    "track",
                    format!("cannot track `{other}` for problem `{problem_name}`"),
                ))
            }
        };
        let cfg = Self {
            name: kv.get("name")?.unwrap_or_else(|| "experiment".to_string()),
            problem,
            population_size: kv.parse_required("population_size")?,
            mutation_rate: kv.parse_required("mutation_rate")?,
            generations: kv.parse_required("generations")?,
            trials: kv.get("trials")?.unwrap_or(1),
            seed: kv.get("seed")?.unwrap_or(1),
            clamping,
            noise: kv.get("noise")?.unwrap_or(true),
            track,
            track_count: kv.get("track_count")?,
        };
        if cfg.trials == 0 {
            return Err(line_err(&kv, "trials", "trials must be at least 1"));
        }
        if cfg.track_count == Some(0) {
            return Err(line_err(
                &kv,
                "track_count",
                "track_count must be at least 1",
            ));
        }
        if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
            return Err(line_err(&kv, "name", "name must be a non-empty file stem"));
        }
        cfg.uga(0).validate().map_err(|e| {
            let key = match e {
                hyperclimb_core::Error::OddPopulation(_) => "population_size",
                _ => "mutation_rate",
            };
            line_err(&kv, key, e.to_string())
        })?;
        Ok(cfg)
    }

    /// Engine settings for one trial.
    pub fn uga(&self, seed: u64) -> UgaConfig {
        UgaConfig {
            population_size: self.population_size,
            mutation_rate: self.mutation_rate,
            generations: self.generations,
            clamping: self.clamping,
            seed,
        }
    }
}
