//! Text file formats. Every locus and variable index in a file is 1-based;
//! the in-memory representation is 0-based.
//!
//! * Staircase descriptor: flat `key = value` lines with `height`, `order`,
//!   `delta`, `span`, `loci` (rows of `L` separated by `,`) and `targets`
//!   (rows of `V` as bit strings separated by `,`).
//! * Refractal addressing: `m`, `n`, `x`, `y`, with matrix rows as for `loci`.
//! * DIMACS CNF: `p cnf n m` header, zero-terminated clause lines, `c` comments.
//! * Couplings: first line `ℓ`, then one `i j J_ij` triple per line with `i < j`.
//! * Grids and traces: comma-separated values.

use std::collections::HashMap;
use std::fmt::Write as _;

use hyperclimb_core::hyperclimb::DecimationTrace;
use hyperclimb_core::problems::{Clause, SatInstance, SpinSystem};
use hyperclimb_core::refractal::{Grid, RefractalAddressing};
use hyperclimb_core::staircase::StaircaseDescriptor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] hyperclimb_core::Error),
}

fn at(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line,
        message: message.into(),
    }
}

/// Flat `key = value` document. `#` starts a comment; keys are unique.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: HashMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| at(line, format!("expected `key = value`, found `{content}`")))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(at(line, "empty key"));
            }
            if let Some((first, _)) = entries.insert(key.clone(), (line, v.trim().to_string())) {
                return Err(at(
                    line,
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.0)
    }

    pub fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    pub fn require(&self, key: &str) -> Result<(usize, &str), FormatError> {
        self.raw(key)
            .ok_or_else(|| FormatError::Invalid(format!("missing required key `{key}`")))
    }

    /// Parses `key` if present.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, FormatError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| at(line, format!("invalid value `{v}` for `{key}`: {e}"))),
        }
    }

    pub fn parse_required<T: std::str::FromStr>(&self, key: &str) -> Result<T, FormatError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| FormatError::Invalid(format!("missing required key `{key}`")))
    }

    /// Keys not in `known`, with their line numbers, in line order.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<(usize, String)> {
        let mut out: Vec<_> = self
            .entries
            .iter()
            .filter(|(k, _)| !known.contains(&k.as_str()))
            .map(|(k, (l, _))| (*l, k.clone()))
            .collect();
        out.sort();
        out
    }

    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), FormatError> {
        match self.unknown_keys(known).into_iter().next() {
            Some((line, key)) => Err(at(line, format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }
}

/// Rows of 1-based indices, e.g. `1 2, 3 4`, as 0-based values.
fn parse_index_rows(line: usize, text: &str, key: &str) -> Result<Vec<Vec<usize>>, FormatError> {
    text.split(',')
        .map(|row| {
            row.split_whitespace()
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(at(
                        line,
                        format!("`{key}` entries must be positive integers, found `{t}`"),
                    )),
                })
                .collect()
        })
        .collect()
}

fn format_index_rows(values: &[usize], width: usize) -> String {
    values
        .chunks(width)
        .map(|r| {
            r.iter()
                .map(|v| (v + 1).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn flatten_rows(
    rows: Vec<Vec<usize>>,
    height: usize,
    width: usize,
    line: usize,
    key: &str,
) -> Result<Vec<usize>, FormatError> {
    if rows.len() != height || rows.iter().any(|r| r.len() != width) {
        return Err(at(
            line,
            format!("`{key}` must have {height} rows of {width} entries"),
        ));
    }
    Ok(rows.into_iter().flatten().collect())
}

pub fn parse_descriptor(text: &str) -> Result<StaircaseDescriptor, FormatError> {
    let kv = KeyValues::parse(text)?;
    kv.reject_unknown(&["height", "order", "delta", "span", "loci", "targets"])?;
    let height: usize = kv.parse_required("height")?;
    let order: usize = kv.parse_required("order")?;
    let delta: f64 = kv.parse_required("delta")?;
    let n = height * order;
    let span: usize = kv.get("span")?.unwrap_or(n);
    let loci = match kv.raw("loci") {
        Some((line, v)) => flatten_rows(
            parse_index_rows(line, v, "loci")?,
            height,
            order,
            line,
            "loci",
        )?,
        None => (0..n).collect(),
    };
    let targets = match kv.raw("targets") {
        Some((line, v)) => {
            let rows: Vec<&str> = v.split(',').map(str::trim).collect();
            if rows.len() != height || rows.iter().any(|r| r.len() != order) {
                return Err(at(
                    line,
                    format!("`targets` must have {height} rows of {order} bits"),
                ));
            }
            let mut out = Vec::with_capacity(n);
            for c in rows.concat().chars() {
                match c {
                    '0' => out.push(false),
                    '1' => out.push(true),
                    _ => return Err(at(line, format!("`targets` must be bits, found `{c}`"))),
                }
            }
            out
        }
        None => vec![true; n],
    };
    let descriptor = StaircaseDescriptor::new(height, order, delta, span, loci, targets)?;
    Ok(descriptor)
}

pub fn write_descriptor(d: &StaircaseDescriptor) -> String {
    let targets = d
        .targets()
        .chunks(d.order())
        .map(|r| {
            r.iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "height = {}\norder = {}\ndelta = {:?}\nspan = {}\nloci = {}\ntargets = {}\n",
        d.height(),
        d.order(),
        d.delta(),
        d.span(),
        format_index_rows(d.loci(), d.order()),
        targets
    )
}

pub fn parse_addressing(text: &str) -> Result<RefractalAddressing, FormatError> {
    let kv = KeyValues::parse(text)?;
    kv.reject_unknown(&["m", "n", "x", "y"])?;
    let m: usize = kv.parse_required("m")?;
    let n: usize = kv.parse_required("n")?;
    let (lx, x) = kv.require("x")?;
    let (ly, y) = kv.require("y")?;
    let x = flatten_rows(parse_index_rows(lx, x, "x")?, m, n, lx, "x")?;
    let y = flatten_rows(parse_index_rows(ly, y, "y")?, m, n, ly, "y")?;
    Ok(RefractalAddressing::new(m, n, x, y)?)
}

pub fn write_addressing(a: &RefractalAddressing) -> String {
    format!(
        "m = {}\nn = {}\nx = {}\ny = {}\n",
        a.m(),
        a.n(),
        format_index_rows(a.x(), a.n()),
        format_index_rows(a.y(), a.n())
    )
}

/// Reads DIMACS CNF. With `strict_3sat`, every clause must be a valid
/// 3SAT clause; otherwise clauses of any arity are read and then must still
/// satisfy the 3SAT invariants to build an instance.
pub fn read_dimacs(text: &str, strict_3sat: bool) -> Result<SatInstance, FormatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut pending: Vec<i32> = Vec::new();
    let mut pending_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('c') {
            continue;
        }
        if content.starts_with('p') {
            if header.is_some() {
                return Err(at(line, "duplicate problem line"));
            }
            let t: Vec<&str> = content.split_whitespace().collect();
            let parsed = match t.as_slice() {
                ["p", "cnf", n, m] => n.parse().ok().zip(m.parse().ok()),
                _ => None,
            };
            header = Some(parsed.ok_or_else(|| at(line, format!("malformed header `{content}`")))?);
            continue;
        }
        let (n_vars, _) = header.ok_or_else(|| at(line, "clause before `p cnf` header"))?;
        for tok in content.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| at(line, format!("invalid literal `{tok}`")))?;
            if lit.unsigned_abs() as usize > n_vars {
                return Err(at(
                    line,
                    format!("literal {lit} out of range for {n_vars} variables"),
                ));
            }
            if pending.is_empty() {
                pending_line = line;
            }
            if lit == 0 {
                let clause = finish_clause(&pending, pending_line, strict_3sat)?;
                clauses.push(clause);
                pending.clear();
            } else {
                pending.push(lit);
            }
        }
    }
    if !pending.is_empty() {
        return Err(at(pending_line, "clause is not zero-terminated"));
    }
    let (n_vars, m) =
        header.ok_or_else(|| FormatError::Invalid("missing `p cnf` header".into()))?;
    if clauses.len() != m {
        return Err(FormatError::Invalid(format!(
            "header declares {m} clauses, found {}",
            clauses.len()
        )));
    }
    Ok(SatInstance::new(n_vars, clauses)?)
}

fn finish_clause(lits: &[i32], line: usize, strict: bool) -> Result<Clause, FormatError> {
    if lits.len() != 3 {
        return Err(at(
            line,
            format!("clause has {} literals, expected 3", lits.len()),
        ));
    }
    let c = [lits[0], lits[1], lits[2]];
    if strict {
        let v = c.map(i32::unsigned_abs);
        if v[0] == v[1] || v[0] == v[2] || v[1] == v[2] {
            return Err(at(line, "clause repeats a variable"));
        }
    }
    Ok(c)
}

pub fn write_dimacs(inst: &SatInstance) -> String {
    let mut out = format!("p cnf {} {}\n", inst.n_vars(), inst.clauses().len());
    for c in inst.clauses() {
        let _ = writeln!(out, "{} {} {} 0", c[0], c[1], c[2]);
    }
    out
}

pub fn read_couplings(text: &str) -> Result<SpinSystem, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines
        .next()
        .ok_or_else(|| FormatError::Invalid("empty couplings file".into()))?;
    let n: usize = header.parse().map_err(|_| {
        at(
            hl,
            format!("header must be the spin count, found `{header}`"),
        )
    })?;
    let mut sys = SpinSystem::zeros(n).map_err(|e| at(hl, e.to_string()))?;
    let mut seen = std::collections::HashSet::new();
    for (line, content) in lines {
        let t: Vec<&str> = content.split_whitespace().collect();
        let [i, j, v] = t.as_slice() else {
            return Err(at(line, format!("expected `i j J`, found `{content}`")));
        };
        let idx = |s: &str| match s.parse::<usize>() {
            Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
            _ => Err(at(line, format!("index `{s}` out of range 1..={n}"))),
        };
        let (i, j) = (idx(i)?, idx(j)?);
        if i >= j {
            return Err(at(line, format!("need i < j, found {} {}", i + 1, j + 1)));
        }
        let value: f64 = v
            .parse()
            .map_err(|_| at(line, format!("invalid coupling `{v}`")))?;
        if !seen.insert((i, j)) {
            return Err(at(line, format!("duplicate coupling {} {}", i + 1, j + 1)));
        }
        sys.set(i, j, value)?;
    }
    Ok(sys)
}

/// Values use shortest round-trip decimal form, so reading back is exact.
pub fn write_couplings(sys: &SpinSystem) -> String {
    let mut out = format!("{}\n", sys.n_spins());
    for (i, j, v) in sys.iter() {
        let _ = writeln!(out, "{} {} {:?}", i + 1, j + 1, v);
    }
    out
}

/// Dense grid, one row per line, row `y = 1` first.
pub fn write_grid_csv(grid: &Grid) -> String {
    let mut out = String::new();
    for row in grid.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One row per decimation round: 1-based loci, fixed bits, estimates.
pub fn write_trace_csv(trace: &DecimationTrace) -> String {
    let mut out = String::from("round,loci,bits,effect,mean,samples\n");
    for (k, r) in trace.rounds.iter().enumerate() {
        let loci: Vec<String> = r
            .schema
            .assignment()
            .iter()
            .map(|(l, _)| (l + 1).to_string())
            .collect();
        let bits: String = r
            .schema
            .assignment()
            .iter()
            .map(|&(_, b)| if b { '1' } else { '0' })
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{}",
            k + 1,
            loci.join(" "),
            bits,
            r.effect,
            r.mean,
            r.samples
        );
    }
    out
}
