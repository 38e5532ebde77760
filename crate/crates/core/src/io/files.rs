//! On-disk formats: canonical samples, state counts, risk weights and the
//! flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::abstraction::{AbstractionConfig, Factor};
use crate::counts::{CountTable, StateKey};
use crate::error::{Error, Result};
use crate::estimators::RiskWeights;
use crate::simulator::{Family, SweepCell};

pub const FACTOR_PREFIX: &str = "factor:";
pub const COUNT_COLUMN: &str = "count";

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Write samples as CSV with one `factor:<name>` column per factor.
pub fn write_samples<W: Write>(out: W, schema: &[String], samples: &[StateKey]) -> Result<()> {
    let mut w = csv_writer(out);
    let header: Vec<String> = schema.iter().map(|s| format!("{FACTOR_PREFIX}{s}")).collect();
    let to_err = |e: csv::Error| Error::invalid(format!("writing samples: {e}"));
    w.write_record(&header).map_err(to_err)?;
    for (index, key) in samples.iter().enumerate() {
        if !key.names().eq(schema.iter().map(String::as_str)) {
            return Err(Error::SchemaMismatch {
                index,
                reason: format!("`{key}` does not match the samples schema"),
            });
        }
        w.write_record(key.values()).map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing samples: {e}")))?;
    Ok(())
}

pub fn write_samples_file(path: &Path, schema: &[String], samples: &[StateKey]) -> Result<()> {
    write_samples(create(path)?, schema, samples)
}

/// Read a canonical samples file back into `(schema, samples)`.
pub fn read_samples_file(path: &Path) -> Result<(Vec<String>, Vec<StateKey>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().from_reader(file);
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let schema = headers
        .iter()
        .map(|h| {
            h.strip_prefix(FACTOR_PREFIX)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .ok_or_else(|| {
                    Error::parse(
                        path,
                        1,
                        format!("column `{h}` lacks the `{FACTOR_PREFIX}` prefix"),
                    )
                })
        })
        .collect::<Result<Vec<_>>>()?;
    if schema.is_empty() {
        return Err(Error::parse(path, 1, "no factor columns"));
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().any(|v| v.is_empty()) {
            return Err(Error::parse(path, line, "empty factor value"));
        }
        let key = StateKey::new(schema.iter().cloned().zip(rec.iter()))
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        samples.push(key);
    }
    Ok((schema, samples))
}

/// Read `(state, count)` rows. Every column other than `count` is a factor;
/// a `factor:` prefix on the header is optional.
pub fn read_counts_file(path: &Path) -> Result<CountTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let count_col = headers
        .iter()
        .position(|h| h == COUNT_COLUMN)
        .ok_or_else(|| Error::parse(path, 1, "missing `count` column"))?;
    let factor_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != count_col)
        .map(|(i, h)| (i, h.strip_prefix(FACTOR_PREFIX).unwrap_or(h).to_owned()))
        .collect();
    if factor_cols.is_empty() {
        return Err(Error::parse(path, 1, "no state columns"));
    }
    let schema: Vec<String> = factor_cols.iter().map(|(_, n)| n.clone()).collect();
    let mut pairs = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let raw = rec.get(count_col).unwrap_or("");
        let count: u64 = raw
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid count `{raw}`")))?;
        let values: Vec<&str> = factor_cols
            .iter()
            .map(|(i, _)| rec.get(*i).unwrap_or(""))
            .collect();
        if values.iter().any(|v| v.is_empty()) {
            return Err(Error::parse(path, line, "empty state value"));
        }
        let key = StateKey::new(schema.iter().cloned().zip(values))
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        pairs.push((key, count));
    }
    CountTable::from_counts(&schema, pairs).map_err(|e| match e {
        Error::EmptyInput(_) => Error::parse(path, 0, "counts file has zero total"),
        other => other,
    })
}

/// Read `state<TAB>weight` lines; a `*` state sets the default weight
/// (1 when absent). Blank lines and `#` comments are ignored.
pub fn read_weights_file(path: &Path, schema: &[String]) -> Result<RiskWeights> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut default = 1.0;
    let mut weights = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (state, w) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected `state<TAB>weight`"))?;
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid weight `{}`", w.trim())))?;
        if state == "*" {
            default = w;
        } else {
            let key =
                StateKey::from_label(state, schema).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            weights.push((key, w));
        }
    }
    RiskWeights::new(weights, default).map_err(|e| Error::parse(path, 0, e.to_string()))
}

/// Flat `key = value` file with `#` comments. Later keys override earlier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
    path: std::path::PathBuf,
}

impl KeyValues {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, format!("expected key = value, got `{line}`")))?;
            entries.insert(k.trim().to_owned(), (i + 1, v.trim().to_owned()));
        }
        Ok(Self {
            entries,
            path: path.to_owned(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        let line = self.entries.get(key).map_or(0, |(l, _)| *l);
        Error::parse(&self.path, line, format!("`{key}`: {}", msg.into()))
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| self.err(key, format!("cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|_| self.err(key, format!("cannot parse `{s}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(self.err(k, "unknown key")),
            None => Ok(()),
        }
    }
}

const ABSTRACTION_KEYS: &[&str] = &[
    "preset",
    "refinement_tag",
    "factors",
    "tilt_bins",
    "energy_bins",
    "energy_edges",
    "rate_bins",
    "rate_edges",
];

/// Build an abstraction config: `preset` first, then explicit overrides.
pub fn abstraction_from_kv(kv: &KeyValues) -> Result<AbstractionConfig> {
    kv.reject_unknown(ABSTRACTION_KEYS)?;
    let mut cfg = match kv.get("preset") {
        Some(p) => AbstractionConfig::preset(p).map_err(|e| kv.err("preset", e.to_string()))?,
        None => AbstractionConfig::default(),
    };
    if let Some(t) = kv.get("refinement_tag") {
        cfg.refinement_tag = t.to_owned();
    }
    if let Some(f) = kv.list::<Factor>("factors")? {
        cfg.factors = f;
    }
    if let Some(p) = kv.parsed("tilt_bins")? {
        cfg.tilt_bins = p;
    }
    if let Some(q) = kv.parsed("energy_bins")? {
        cfg.energy_bins = q;
    }
    if let Some(e) = kv.list("energy_edges")? {
        cfg.energy_edges = Some(e);
    }
    if let Some(q) = kv.parsed("rate_bins")? {
        cfg.rate_bins = q;
    }
    if let Some(e) = kv.list("rate_edges")? {
        cfg.rate_edges = Some(e);
    }
    cfg.validate()
        .map_err(|e| Error::parse(&kv.path, 0, e.to_string()))?;
    Ok(cfg)
}

pub fn write_abstraction(cfg: &AbstractionConfig) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    let mut s = String::new();
    s.push_str(&format!("refinement_tag = {}\n", cfg.refinement_tag));
    s.push_str(&format!(
        "factors = {}\n",
        cfg.factors
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join(", ")
    ));
    s.push_str(&format!("tilt_bins = {}\n", cfg.tilt_bins));
    s.push_str(&format!("energy_bins = {}\n", cfg.energy_bins));
    if let Some(e) = &cfg.energy_edges {
        s.push_str(&format!("energy_edges = {}\n", join(e)));
    }
    s.push_str(&format!("rate_bins = {}\n", cfg.rate_bins));
    if let Some(e) = &cfg.rate_edges {
        s.push_str(&format!("rate_edges = {}\n", join(e)));
    }
    s
}

/// A sweep grid described as the cartesian product of its lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub grid: Vec<SweepCell>,
    pub trials: u32,
    pub master_seed: u64,
}

fn parse_family(s: &str) -> Option<Family> {
    let (name, param) = match s.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p.trim().parse::<f64>().ok()?)),
        None => (s.trim(), None),
    };
    match (name, param) {
        ("zipf", Some(exponent)) => Some(Family::Zipf { exponent }),
        ("geometric", Some(ratio)) => Some(Family::Geometric { ratio }),
        ("uniform", None) => Some(Family::Uniform),
        _ => None,
    }
}

/// Keys: `families` (e.g. `zipf:1.5, geometric:0.9, uniform`), `k`, `n`,
/// `tau` (comma lists), `trials`, `master_seed`.
pub fn sweep_from_kv(kv: &KeyValues) -> Result<SweepSpec> {
    kv.reject_unknown(&["families", "k", "n", "tau", "trials", "master_seed"])?;
    let families: Vec<Family> = kv
        .get("families")
        .ok_or_else(|| kv.err("families", "required"))?
        .split(',')
        .map(|s| parse_family(s).ok_or_else(|| kv.err("families", format!("bad family `{}`", s.trim()))))
        .collect::<Result<_>>()?;
    let ks: Vec<usize> = kv.list("k")?.ok_or_else(|| kv.err("k", "required"))?;
    let ns: Vec<u64> = kv.list("n")?.ok_or_else(|| kv.err("n", "required"))?;
    let taus: Vec<u64> = kv.list("tau")?.unwrap_or_else(|| vec![1]);
    let trials = kv.parsed("trials")?.unwrap_or(200);
    let master_seed = kv.parsed("master_seed")?.unwrap_or(0);
    let mut grid = Vec::new();
    for &family in &families {
        for &k in &ks {
            for &n in &ns {
                for &tau in &taus {
                    let cell = SweepCell { family, k, n, tau };
                    if k == 0 || n == 0 || tau == 0 {
                        return Err(kv.err("k", "k, n and tau must all be at least 1"));
                    }
                    cell.distribution()
                        .map_err(|e| kv.err("families", e.to_string()))?;
                    grid.push(cell);
                }
            }
        }
    }
    if trials == 0 {
        return Err(kv.err("trials", "must be at least 1"));
    }
    Ok(SweepSpec {
        grid,
        trials,
        master_seed,
    })
}

/// One `(class, successes, trials)` row of a per-class accuracy table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTally {
    pub class: String,
    pub successes: u64,
    pub trials: u64,
}

pub fn read_class_tallies(path: &Path) -> Result<Vec<ClassTally>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))
    };
    let (c, s, t) = (col("class")?, col("successes")?, col("trials")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<u64>()
                .map_err(|_| Error::parse(path, line, format!("invalid integer `{raw}`")))
        };
        let tally = ClassTally {
            class: rec.get(c).unwrap_or("").to_owned(),
            successes: num(s)?,
            trials: num(t)?,
        };
        if tally.trials == 0 || tally.successes > tally.trials {
            return Err(Error::parse(
                path,
                line,
                format!("{} successes out of {} trials", tally.successes, tally.trials),
            ));
        }
        out.push(tally);
    }
    Ok(out)
}
