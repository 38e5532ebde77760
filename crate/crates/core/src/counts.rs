//! Sparse count structures over an operational state space.
//!
//! States that were never observed have no entry anywhere; the full state
//! space is never materialized. Counts and totals are exact integers, only
//! probabilities are floating point.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator used when a key is written as a single string.
pub const KEY_SEPARATOR: char = '|';

/// An ordered tuple of `(factor, value)` pairs identifying one state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateKey {
    factors: Vec<(String, String)>,
}

impl StateKey {
    pub fn new<N, V>(factors: impl IntoIterator<Item = (N, V)>) -> Result<Self>
    where
        N: Into<String>,
        V: Into<String>,
    {
        let factors: Vec<(String, String)> = factors.into_iter().map(|(n, v)| (n.into(), v.into())).collect();
        if factors.is_empty() {
            return Err(Error::invalid("state key needs at least one factor"));
        }
        let mut seen = HashSet::with_capacity(factors.len());
        for (name, _) in &factors {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!(
                    "factor `{name}` appears twice in one state key"
                )));
            }
        }
        Ok(Self { factors })
    }

    pub fn single(name: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            factors: vec![(name.into(), value.into())],
        }
    }

    pub fn factors(&self) -> &[(String, String)] {
        &self.factors
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(_, v)| v.as_str())
    }

    pub fn value(&self, factor: &str) -> Option<&str> {
        self.factors
            .iter()
            .find(|(n, _)| n == factor)
            .map(|(_, v)| v.as_str())
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Values joined with [`KEY_SEPARATOR`], e.g. `walking|3|1`.
    pub fn label(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values().enumerate() {
            if i > 0 {
                out.push(KEY_SEPARATOR);
            }
            out.push_str(v);
        }
        out
    }

    /// Parse a [`label`](Self::label) back into a key under `schema`.
    pub fn from_label(label: &str, schema: &[String]) -> Result<Self> {
        let values: Vec<&str> = if schema.len() == 1 {
            vec![label]
        } else {
            label.split(KEY_SEPARATOR).collect()
        };
        if values.len() != schema.len() {
            return Err(Error::invalid(format!(
                "state `{label}` has {} values, schema has {} factors",
                values.len(),
                schema.len()
            )));
        }
        Self::new(schema.iter().cloned().zip(values))
    }

    fn conforms(&self, schema: &[String]) -> std::result::Result<(), String> {
        if self.factors.len() != schema.len() {
            return Err(format!(
                "expected {} factors, found {}",
                schema.len(),
                self.factors.len()
            ));
        }
        for ((name, _), expected) in self.factors.iter().zip(schema) {
            if name != expected {
                return Err(format!("factor `{name}` where `{expected}` was expected"));
            }
        }
        Ok(())
    }

    fn project(&self, keep: &[usize]) -> StateKey {
        StateKey {
            factors: keep.iter().map(|&i| self.factors[i].clone()).collect(),
        }
    }
}

// Lexicographic on values first so reports sort by what the user reads.
impl Ord for StateKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.values()
            .cmp(other.values())
            .then_with(|| self.names().cmp(other.names()))
    }
}

impl PartialOrd for StateKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Observed support `N_n(x)` for every state seen at least once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    schema: Vec<String>,
    counts: BTreeMap<StateKey, u64>,
    n: u64,
}

impl CountTable {
    /// Count a complete sample sequence.
    pub fn build<S: AsRef<str>>(samples: &[StateKey], schema: &[S]) -> Result<Self> {
        let schema: Vec<String> = schema.iter().map(|s| s.as_ref().to_owned()).collect();
        if schema.is_empty() {
            return Err(Error::invalid("schema must name at least one factor"));
        }
        if samples.is_empty() {
            return Err(Error::EmptyInput("no samples to count"));
        }
        let mut counts = BTreeMap::new();
        for (index, key) in samples.iter().enumerate() {
            key.conforms(&schema)
                .map_err(|reason| Error::SchemaMismatch { index, reason })?;
            *counts.entry(key.clone()).or_insert(0u64) += 1;
        }
        Ok(Self {
            schema,
            counts,
            n: samples.len() as u64,
        })
    }

    /// Build from `(state, count)` pairs. Repeated states are summed and
    /// zero counts are dropped.
    pub fn from_counts<S: AsRef<str>>(
        schema: &[S],
        pairs: impl IntoIterator<Item = (StateKey, u64)>,
    ) -> Result<Self> {
        let schema: Vec<String> = schema.iter().map(|s| s.as_ref().to_owned()).collect();
        if schema.is_empty() {
            return Err(Error::invalid("schema must name at least one factor"));
        }
        let mut counts = BTreeMap::new();
        let mut n = 0u64;
        for (index, (key, c)) in pairs.into_iter().enumerate() {
            key.conforms(&schema)
                .map_err(|reason| Error::SchemaMismatch { index, reason })?;
            if c == 0 {
                continue;
            }
            n = n
                .checked_add(c)
                .ok_or_else(|| Error::invalid("total count overflows u64"))?;
            *counts.entry(key).or_insert(0) += c;
        }
        if n == 0 {
            return Err(Error::EmptyInput("count table has zero total"));
        }
        Ok(Self { schema, counts, n })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    /// Total number of samples `n`.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of distinct observed states (observed `K_eff`).
    pub fn k_observed(&self) -> usize {
        self.counts.len()
    }

    /// `N_n(x)`; zero for unseen states.
    pub fn count(&self, key: &StateKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Observed states in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, u64)> + '_ {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    pub fn conforms(&self, key: &StateKey) -> bool {
        key.conforms(&self.schema).is_ok()
    }

    /// Frequency of frequencies `r -> f_r`.
    pub fn freq_of_freqs(&self) -> FreqOfFreqs {
        let mut f = BTreeMap::new();
        for &c in self.counts.values() {
            *f.entry(c).or_insert(0u64) += 1;
        }
        FreqOfFreqs {
            f,
            n: self.n,
            k_observed: self.counts.len() as u64,
        }
    }

    /// Plug-in probabilities `N_n(x) / n`.
    pub fn plug_in(&self) -> EmpiricalDistribution {
        let n = self.n as f64;
        EmpiricalDistribution {
            probs: self
                .counts
                .iter()
                .map(|(k, &c)| (k.clone(), c as f64 / n))
                .collect(),
            source: DistributionSource::PlugIn,
        }
    }

    /// Merge states by keeping only the named factors (kept in schema order).
    pub fn coarsen<S: AsRef<str>>(&self, projection: &[S]) -> Result<CountTable> {
        if projection.is_empty() {
            return Err(Error::invalid("projection must keep at least one factor"));
        }
        let mut keep = Vec::with_capacity(projection.len());
        for name in projection {
            let name = name.as_ref();
            let idx = self
                .schema
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::UnknownFactor(name.to_owned()))?;
            if keep.contains(&idx) {
                return Err(Error::invalid(format!("factor `{name}` projected twice")));
            }
            keep.push(idx);
        }
        keep.sort_unstable();
        let mut counts = BTreeMap::new();
        for (key, &c) in &self.counts {
            *counts.entry(key.project(&keep)).or_insert(0) += c;
        }
        Ok(CountTable {
            schema: keep.iter().map(|&i| self.schema[i].clone()).collect(),
            counts,
            n: self.n,
        })
    }
}

/// `f_r`: number of states observed exactly `r` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreqOfFreqs {
    f: BTreeMap<u64, u64>,
    n: u64,
    k_observed: u64,
}

impl FreqOfFreqs {
    /// `f_r`, zero when no state has count `r`.
    pub fn get(&self, r: u64) -> u64 {
        self.f.get(&r).copied().unwrap_or(0)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k_observed(&self) -> u64 {
        self.k_observed
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.f.iter().map(|(&r, &fr)| (r, fr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionSource {
    PlugIn,
    KnownTruth,
}

/// A probability assignment over (a subset of) the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    probs: BTreeMap<StateKey, f64>,
    source: DistributionSource,
}

impl EmpiricalDistribution {
    const SUM_TOLERANCE: f64 = 1e-9;

    /// A known ground-truth distribution, e.g. from the simulator.
    pub fn known_truth(probs: impl IntoIterator<Item = (StateKey, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut total = 0.0;
        for (k, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("probability {p} for `{k}` outside [0,1]")));
            }
            total += p;
            if map.insert(k.clone(), p).is_some() {
                return Err(Error::invalid(format!("state `{k}` listed twice")));
            }
        }
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            probs: map,
            source: DistributionSource::KnownTruth,
        })
    }

    pub fn source(&self) -> DistributionSource {
        self.source
    }

    pub fn prob(&self, key: &StateKey) -> f64 {
        self.probs.get(key).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, key: &StateKey) -> bool {
        self.probs.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64)> + '_ {
        self.probs.iter().map(|(k, &p)| (k, p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Free-function form of [`CountTable::build`].
pub fn build_count_table<S: AsRef<str>>(samples: &[StateKey], schema: &[S]) -> Result<CountTable> {
    CountTable::build(samples, schema)
}

pub fn freq_of_freqs(table: &CountTable) -> FreqOfFreqs {
    table.freq_of_freqs()
}

pub fn plug_in_distribution(table: &CountTable) -> EmpiricalDistribution {
    table.plug_in()
}

pub fn coarsen<S: AsRef<str>>(table: &CountTable, projection: &[S]) -> Result<CountTable> {
    table.coarsen(projection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(v: &str) -> StateKey {
        StateKey::single("state", v)
    }

    fn key3(a: &str, p: u32, e: u32) -> StateKey {
        StateKey::new([
            ("activity", a.to_string()),
            ("tilt", p.to_string()),
            ("energy", e.to_string()),
        ])
        .unwrap()
    }

    fn table(pairs: &[(&str, u64)]) -> CountTable {
        CountTable::from_counts(&["state"], pairs.iter().map(|&(k, c)| (key(k), c))).unwrap()
    }

    #[test]
    fn key_rejects_empty_and_duplicate_factors() {
        assert!(StateKey::new(Vec::<(String, String)>::new()).is_err());
        assert!(StateKey::new([("a", "1"), ("a", "2")]).is_err());
    }

    #[test]
    fn key_label_round_trip() {
        let k = key3("walking", 3, 1);
        let schema: Vec<String> = k.names().map(String::from).collect();
        assert_eq!(k.label(), "walking|3|1");
        assert_eq!(StateKey::from_label(&k.label(), &schema).unwrap(), k);
        // single-factor labels may contain the separator
        assert_eq!(
            StateKey::from_label("a|b", &["state".into()]).unwrap(),
            key("a|b")
        );
    }

    #[test]
    fn repeated_sample_gives_single_state() {
        let samples = vec![key("x"); 5];
        let t = build_count_table(&samples, &["state"]).unwrap();
        assert_eq!(t.n(), 5);
        assert_eq!(t.k_observed(), 1);
        assert_eq!(t.count(&key("x")), 5);
    }

    #[test]
    fn build_rejects_empty_and_mismatched() {
        assert!(matches!(
            build_count_table(&[], &["state"]),
            Err(Error::EmptyInput(_))
        ));
        let samples = vec![key("a"), StateKey::single("other", "b")];
        match build_count_table(&samples, &["state"]) {
            Err(Error::SchemaMismatch { index, reason }) => {
                assert_eq!(index, 1);
                assert!(reason.contains("other"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn walking_plug_in_probability() {
        let t = table(&[("Walking", 307), ("Stairs up", 134), ("rest", 1674 - 307 - 134)]);
        assert_eq!(t.n(), 1674);
        let p = t.plug_in();
        assert_eq!(format!("{:.3}", p.prob(&key("Walking"))), "0.183");
        assert_eq!(format!("{:.3}", p.prob(&key("Stairs up"))), "0.080");
        assert_eq!(p.source(), DistributionSource::PlugIn);
    }

    #[test]
    fn freq_of_freqs_small() {
        let f = table(&[("a", 1), ("b", 1), ("c", 3)]).freq_of_freqs();
        assert_eq!(f.iter().collect::<Vec<_>>(), vec![(1, 2), (3, 1)]);
        assert_eq!(f.n(), 5);
        assert_eq!(f.k_observed(), 3);
        let f = table(&[("a", 5)]).freq_of_freqs();
        assert_eq!(f.iter().collect::<Vec<_>>(), vec![(5, 1)]);
    }

    #[test]
    fn coarsen_identity_and_unknown() {
        let t = CountTable::from_counts(
            &["activity", "tilt", "energy"],
            [(key3("a", 0, 1), 2), (key3("a", 1, 1), 3), (key3("b", 0, 0), 1)],
        )
        .unwrap();
        assert_eq!(t.coarsen(&["activity", "tilt", "energy"]).unwrap(), t);
        // order of the projection list does not matter
        assert_eq!(t.coarsen(&["energy", "tilt", "activity"]).unwrap(), t);
        assert!(matches!(t.coarsen(&["placement"]), Err(Error::UnknownFactor(_))));
        let a = t.coarsen(&["activity"]).unwrap();
        assert_eq!(a.k_observed(), 2);
        assert_eq!(a.count(&StateKey::single("activity", "a")), 5);
        assert_eq!(a.n(), t.n());
    }

    #[test]
    fn known_truth_validation() {
        assert!(EmpiricalDistribution::known_truth([(key("a"), 0.5)]).is_err());
        assert!(EmpiricalDistribution::known_truth([(key("a"), 1.5), (key("b"), -0.5)]).is_err());
        let d = EmpiricalDistribution::known_truth([(key("a"), 0.5), (key("b"), 0.5)]).unwrap();
        assert_eq!(d.source(), DistributionSource::KnownTruth);
    }

    #[test]
    fn ordering_is_lexicographic_on_values() {
        let mut keys = [key3("b", 0, 0), key3("a", 2, 0), key3("a", 10, 0)];
        keys.sort();
        let labels: Vec<String> = keys.iter().map(StateKey::label).collect();
        assert_eq!(labels, ["a|10|0", "a|2|0", "b|0|0"]);
    }

    fn sample_keys() -> impl Strategy<Value = Vec<StateKey>> {
        prop::collection::vec((0u8..4, 0u8..3, 0u8..3), 1..200).prop_map(|v| {
            v.into_iter()
                .map(|(a, p, e)| key3(&format!("act{a}"), p as u32, e as u32))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn counts_match_linear_scan(idx in prop::collection::vec(0usize..10, 1..200)) {
            let samples: Vec<StateKey> = idx.iter().map(|i| key(&format!("s{i}"))).collect();
            let t = build_count_table(&samples, &["state"]).unwrap();
            for s in 0..10 {
                let k = key(&format!("s{s}"));
                let scan = samples.iter().filter(|x| **x == k).count() as u64;
                prop_assert_eq!(t.count(&k), scan);
            }
            prop_assert_eq!(t.n(), samples.len() as u64);
        }

        #[test]
        fn frequency_identities(samples in sample_keys()) {
            let t = build_count_table(&samples, &["activity", "tilt", "energy"]).unwrap();
            let f = t.freq_of_freqs();
            let weighted: u64 = f.iter().map(|(r, fr)| r * fr).sum();
            let states: u64 = f.iter().map(|(_, fr)| fr).sum();
            prop_assert_eq!(weighted, t.n());
            prop_assert_eq!(states, t.k_observed() as u64);
            prop_assert!(f.iter().all(|(_, fr)| fr >= 1));
        }

        #[test]
        fn plug_in_normalized(samples in sample_keys()) {
            let t = build_count_table(&samples, &["activity", "tilt", "energy"]).unwrap();
            prop_assert!((t.plug_in().total() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn coarsen_matches_preimage_sum(samples in sample_keys(), mask in 1u8..8) {
            let schema = ["activity", "tilt", "energy"];
            let t = build_count_table(&samples, &schema).unwrap();
            let proj: Vec<&str> = schema
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| *s)
                .collect();
            let c = t.coarsen(&proj).unwrap();
            prop_assert_eq!(c.n(), t.n());
            for (ck, cc) in c.iter() {
                let brute: u64 = t
                    .iter()
                    .filter(|(fk, _)| proj.iter().all(|f| fk.value(f) == ck.value(f)))
                    .map(|(_, n)| n)
                    .sum();
                prop_assert_eq!(cc, brute);
            }
        }

        #[test]
        fn build_is_order_independent(mut samples in sample_keys()) {
            let schema = ["activity", "tilt", "energy"];
            let a = build_count_table(&samples, &schema).unwrap();
            samples.reverse();
            let b = build_count_table(&samples, &schema).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
