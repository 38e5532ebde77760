//! Blind-spot mass and the quantities derived from it.
//!
//! `B_n(tau)` is the probability mass of states whose observed support is
//! below `tau`. With plug-in probabilities unseen states carry no mass, so
//! two further modes add a Good-Turing estimate of what the sample missed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counts::{CountTable, DistributionSource, EmpiricalDistribution, FreqOfFreqs, StateKey};
use crate::error::{Error, Result};

/// How a blindness curve turns counts into mass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorMode {
    /// `sum_{x: 1 <= N(x) < tau} N(x)/n`.
    #[default]
    #[serde(rename = "plugin")]
    Plugin,
    /// Plug-in mass plus the singleton estimate `f_1/n` of unseen mass.
    #[serde(rename = "plugin+unseen")]
    PluginUnseen,
    /// `sum_{r < tau} (r+1) f_{r+1} / n`. Not part of the base method;
    /// always reported as an extension.
    #[serde(rename = "generalized-gt")]
    GeneralizedGoodTuring,
}

impl EstimatorMode {
    pub const ALL: [EstimatorMode; 3] = [
        EstimatorMode::Plugin,
        EstimatorMode::PluginUnseen,
        EstimatorMode::GeneralizedGoodTuring,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorMode::Plugin => "plugin",
            EstimatorMode::PluginUnseen => "plugin+unseen",
            EstimatorMode::GeneralizedGoodTuring => "generalized-gt",
        }
    }

    pub fn is_extension(self) -> bool {
        matches!(self, EstimatorMode::GeneralizedGoodTuring)
    }
}

impl fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plugin" => Ok(EstimatorMode::Plugin),
            "plugin+unseen" => Ok(EstimatorMode::PluginUnseen),
            "generalized-gt" => Ok(EstimatorMode::GeneralizedGoodTuring),
            other => Err(Error::invalid(format!(
                "unknown estimator mode `{other}` (expected plugin, plugin+unseen or generalized-gt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub tau: u64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlindSpotCurve {
    pub estimator_mode: EstimatorMode,
    pub extension: bool,
    pub n: u64,
    pub k_observed: u64,
    pub points: Vec<CurvePoint>,
}

impl BlindSpotCurve {
    pub fn at(&self, tau: u64) -> Option<f64> {
        self.points.iter().find(|p| p.tau == tau).map(|p| p.mass)
    }

    pub(crate) fn check(&self) -> Result<()> {
        let mut prev: Option<CurvePoint> = None;
        for p in &self.points {
            if !(0.0..=1.0).contains(&p.mass) {
                return Err(Error::Invariant(format!(
                    "{} mass {} at tau={} outside [0,1]",
                    self.estimator_mode, p.mass, p.tau
                )));
            }
            if let Some(q) = prev {
                if p.tau <= q.tau || p.mass < q.mass {
                    return Err(Error::Invariant(format!(
                        "{} curve not monotone between tau={} and tau={}",
                        self.estimator_mode, q.tau, p.tau
                    )));
                }
            }
            prev = Some(*p);
        }
        Ok(())
    }
}

fn check_tau(tau: u64) -> Result<()> {
    if tau == 0 {
        Err(Error::invalid("support threshold tau must be at least 1"))
    } else {
        Ok(())
    }
}

/// `sum_x P(x) 1{N_n(x) < tau}` under `dist`.
///
/// With a known-truth distribution, unseen states (absent from `table`)
/// contribute their full mass. With plug-in probabilities they contribute
/// nothing.
pub fn blind_spot_mass(table: &CountTable, dist: &EmpiricalDistribution, tau: u64) -> Result<f64> {
    check_tau(tau)?;
    check_support(table, dist)?;
    Ok(dist
        .iter()
        .filter(|(k, _)| table.count(k) < tau)
        .map(|(_, p)| p)
        .sum())
}

fn check_support(table: &CountTable, dist: &EmpiricalDistribution) -> Result<()> {
    if dist.source() == DistributionSource::KnownTruth {
        if let Some((k, _)) = table.iter().find(|(k, _)| !dist.contains(k)) {
            return Err(Error::UnknownState(k.label()));
        }
    }
    Ok(())
}

/// Good-Turing unseen mass `f_1 / n`.
pub fn good_turing_unseen_mass(f: &FreqOfFreqs) -> f64 {
    if f.n() == 0 {
        return 0.0;
    }
    f.get(1) as f64 / f.n() as f64
}

/// Estimated blind-spot mass at every `tau` in `1..=tau_max`.
pub fn blind_spot_curve(table: &CountTable, mode: EstimatorMode, tau_max: u64) -> Result<BlindSpotCurve> {
    check_tau(tau_max)?;
    let f = table.freq_of_freqs();
    let n = table.n() as f64;
    let unseen = good_turing_unseen_mass(&f);

    // Running sums over r avoid rescanning the table for each tau.
    let mut below: u64 = 0; // sum_{r < tau} r f_r
    let mut gt: u64 = 0; // sum_{r <= tau} r f_r
    let mut points = Vec::with_capacity(tau_max as usize);
    for tau in 1..=tau_max {
        if tau > 1 {
            below += (tau - 1) * f.get(tau - 1);
        }
        gt += tau * f.get(tau);
        let mass = match mode {
            EstimatorMode::Plugin => below as f64 / n,
            // Observed low-support mass plus unseen mass can exceed one once
            // tau passes every count; a probability cannot.
            EstimatorMode::PluginUnseen => (below as f64 / n + unseen).min(1.0),
            EstimatorMode::GeneralizedGoodTuring => gt as f64 / n,
        };
        points.push(CurvePoint { tau, mass });
    }
    let curve = BlindSpotCurve {
        estimator_mode: mode,
        extension: mode.is_extension(),
        n: table.n(),
        k_observed: f.k_observed(),
        points,
    };
    curve.check()?;
    Ok(curve)
}

/// Per-state consequence weights `w(x)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RiskWeights {
    weights: BTreeMap<StateKey, f64>,
    default_weight: f64,
}

impl RiskWeights {
    pub fn new(weights: impl IntoIterator<Item = (StateKey, f64)>, default_weight: f64) -> Result<Self> {
        check_weight(default_weight, "default")?;
        let mut map = BTreeMap::new();
        for (k, w) in weights {
            check_weight(w, &k.label())?;
            map.insert(k, w);
        }
        Ok(Self {
            weights: map,
            default_weight,
        })
    }

    /// `w(x) = 1` everywhere.
    pub fn uniform() -> Self {
        Self {
            weights: BTreeMap::new(),
            default_weight: 1.0,
        }
    }

    pub fn weight(&self, key: &StateKey) -> f64 {
        self.weights.get(key).copied().unwrap_or(self.default_weight)
    }

    pub fn default_weight(&self) -> f64 {
        self.default_weight
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64)> + '_ {
        self.weights.iter().map(|(k, &w)| (k, w))
    }
}

fn check_weight(w: f64, what: &str) -> Result<()> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "risk weight for `{what}` must be finite and >= 0, got {w}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionEntry {
    pub state: String,
    #[serde(skip)]
    pub key: StateKey,
    pub count: u64,
    pub prob: f64,
    pub weight: f64,
    pub contribution: f64,
}

/// Observed blind states ranked by how much mass they contribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlindnessDecomposition {
    pub tau: u64,
    /// Sum over every blind observed state, including any truncated away.
    pub total: f64,
    pub entries: Vec<DecompositionEntry>,
}

impl BlindnessDecomposition {
    fn from_entries(tau: u64, mut entries: Vec<DecompositionEntry>, top_k: Option<usize>) -> Self {
        let total = entries.iter().map(|e| e.contribution).sum();
        entries.sort_by(|a, b| {
            b.contribution
                .total_cmp(&a.contribution)
                .then_with(|| a.key.cmp(&b.key))
        });
        if let Some(k) = top_k {
            entries.truncate(k);
        }
        Self { tau, total, entries }
    }

    pub fn contribution(&self, key: &StateKey) -> f64 {
        self.entries
            .iter()
            .find(|e| &e.key == key)
            .map_or(0.0, |e| e.contribution)
    }
}

/// `sum_x P(x) w(x) 1{N_n(x) < tau}` together with its per-state breakdown
/// over observed states.
pub fn risk_weighted_blindness(
    table: &CountTable,
    dist: &EmpiricalDistribution,
    weights: &RiskWeights,
    tau: u64,
) -> Result<(f64, BlindnessDecomposition)> {
    check_tau(tau)?;
    check_support(table, dist)?;
    let total = dist
        .iter()
        .filter(|(k, _)| table.count(k) < tau)
        .map(|(k, p)| p * weights.weight(k))
        .sum();
    let entries = table
        .iter()
        .filter(|&(_, c)| c < tau)
        .map(|(k, c)| {
            let prob = dist.prob(k);
            let weight = weights.weight(k);
            DecompositionEntry {
                state: k.label(),
                key: k.clone(),
                count: c,
                prob,
                weight,
                contribution: prob * weight,
            }
        })
        .collect();
    Ok((total, BlindnessDecomposition::from_entries(tau, entries, None)))
}

/// Unweighted plug-in decomposition, optionally truncated to the `top_k`
/// largest contributors. `total` always covers every blind state.
pub fn blindness_decomposition(
    table: &CountTable,
    tau: u64,
    top_k: Option<usize>,
) -> Result<BlindnessDecomposition> {
    check_tau(tau)?;
    let n = table.n() as f64;
    let entries = table
        .iter()
        .filter(|&(_, c)| c < tau)
        .map(|(k, c)| {
            let prob = c as f64 / n;
            DecompositionEntry {
                state: k.label(),
                key: k.clone(),
                count: c,
                prob,
                weight: 1.0,
                contribution: prob,
            }
        })
        .collect();
    Ok(BlindnessDecomposition::from_entries(tau, entries, top_k))
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must lie in [0,1], got {x}")))
    }
}

/// Highest overall accuracy reachable when supported states are classified
/// perfectly and blind states at `assumed_blind_accuracy`.
pub fn accuracy_ceiling(blind_mass: f64, assumed_blind_accuracy: f64) -> Result<f64> {
    check_unit(blind_mass, "blind mass")?;
    check_unit(assumed_blind_accuracy, "assumed blind accuracy")?;
    Ok((1.0 - blind_mass) + blind_mass * assumed_blind_accuracy)
}

/// What accuracy to assume inside the blind region.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BlindAccuracy {
    /// Worst case: nothing in the blind region is classified correctly.
    #[default]
    Zero,
    /// Uniform guessing among this many classes.
    Chance(u32),
    Fixed(f64),
}

impl BlindAccuracy {
    pub fn value(self) -> Result<f64> {
        match self {
            BlindAccuracy::Zero => Ok(0.0),
            BlindAccuracy::Chance(0) => Err(Error::invalid("chance accuracy needs at least one class")),
            BlindAccuracy::Chance(c) => Ok(1.0 / f64::from(c)),
            BlindAccuracy::Fixed(a) => {
                check_unit(a, "assumed blind accuracy")?;
                Ok(a)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeilingPoint {
    pub tau: u64,
    pub blind_mass: f64,
    pub ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingCurve {
    pub assumed_blind_accuracy: f64,
    pub estimator_mode: EstimatorMode,
    pub points: Vec<CeilingPoint>,
}

pub fn ceiling_curve(curve: &BlindSpotCurve, assumed: BlindAccuracy) -> Result<CeilingCurve> {
    let a = assumed.value()?;
    let points = curve
        .points
        .iter()
        .map(|p| {
            Ok(CeilingPoint {
                tau: p.tau,
                blind_mass: p.mass,
                ceiling: accuracy_ceiling(p.mass, a)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CeilingCurve {
        assumed_blind_accuracy: a,
        estimator_mode: curve.estimator_mode,
        points,
    })
}

/// Observed accuracy split into supported and blind parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureDecomposition {
    pub acc: f64,
    /// `None` when no outcome falls in a supported state.
    pub acc_sup: Option<f64>,
    /// `None` when no outcome falls in a blind state.
    pub acc_blind: Option<f64>,
    /// Fraction of outcomes whose state has support below `tau`.
    pub blind_mass_empirical: f64,
}

impl MixtureDecomposition {
    /// `(1-b) acc_sup + b acc_blind`; empty branches drop out.
    pub fn recombined(&self) -> f64 {
        let b = self.blind_mass_empirical;
        self.acc_sup.map_or(0.0, |a| (1.0 - b) * a) + self.acc_blind.map_or(0.0, |a| b * a)
    }
}

pub fn mixture_decomposition(
    outcomes: &[(StateKey, bool)],
    table: &CountTable,
    tau: u64,
) -> Result<MixtureDecomposition> {
    check_tau(tau)?;
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("no outcomes to decompose"));
    }
    let (mut sup, mut sup_ok, mut blind, mut blind_ok) = (0u64, 0u64, 0u64, 0u64);
    for (index, (state, correct)) in outcomes.iter().enumerate() {
        if !table.conforms(state) {
            return Err(Error::SchemaMismatch {
                index,
                reason: format!("outcome state `{state}` does not match the table schema"),
            });
        }
        if table.count(state) >= tau {
            sup += 1;
            sup_ok += u64::from(*correct);
        } else {
            blind += 1;
            blind_ok += u64::from(*correct);
        }
    }
    let total = (sup + blind) as f64;
    let ratio = |ok: u64, all: u64| (all > 0).then(|| ok as f64 / all as f64);
    Ok(MixtureDecomposition {
        acc: (sup_ok + blind_ok) as f64 / total,
        acc_sup: ratio(sup_ok, sup),
        acc_blind: ratio(blind_ok, blind),
        blind_mass_empirical: blind as f64 / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::build_count_table;
    use proptest::prelude::*;

    fn key(v: &str) -> StateKey {
        StateKey::single("state", v)
    }

    fn table(pairs: &[(&str, u64)]) -> CountTable {
        CountTable::from_counts(&["state"], pairs.iter().map(|&(k, c)| (key(k), c))).unwrap()
    }

    fn masses(c: &BlindSpotCurve) -> Vec<f64> {
        c.points.iter().map(|p| p.mass).collect()
    }

    #[test]
    fn known_truth_counts_unseen_states() {
        let t = table(&[("a", 1)]);
        let d = EmpiricalDistribution::known_truth([(key("a"), 0.5), (key("b"), 0.5)]).unwrap();
        assert_eq!(blind_spot_mass(&t, &d, 1).unwrap(), 0.5);
        assert_eq!(blind_spot_mass(&t, &d, 2).unwrap(), 1.0);
    }

    #[test]
    fn plug_in_at_tau_one_is_zero() {
        let t = table(&[("a", 1), ("b", 4), ("c", 9)]);
        assert_eq!(blind_spot_mass(&t, &t.plug_in(), 1).unwrap(), 0.0);
    }

    #[test]
    fn zero_tau_rejected() {
        let t = table(&[("a", 1)]);
        assert!(blind_spot_mass(&t, &t.plug_in(), 0).is_err());
        assert!(blind_spot_curve(&t, EstimatorMode::Plugin, 0).is_err());
        assert!(blindness_decomposition(&t, 0, None).is_err());
    }

    #[test]
    fn known_truth_must_cover_table() {
        let t = table(&[("z", 1)]);
        let d = EmpiricalDistribution::known_truth([(key("a"), 1.0)]).unwrap();
        assert!(matches!(blind_spot_mass(&t, &d, 1), Err(Error::UnknownState(_))));
    }

    #[test]
    fn plugin_curve_small_tables() {
        let c = blind_spot_curve(&table(&[("a", 10)]), EstimatorMode::Plugin, 3).unwrap();
        assert_eq!(masses(&c), [0.0, 0.0, 0.0]);

        let t = table(&[("a", 1), ("b", 1), ("c", 3)]);
        let c = blind_spot_curve(&t, EstimatorMode::Plugin, 4).unwrap();
        assert_eq!(c.at(2), Some(0.4));
        assert_eq!(c.at(4), Some(1.0));
        assert!(!c.extension);
    }

    #[test]
    fn unseen_and_generalized_modes() {
        let t = table(&[("a", 1), ("b", 1), ("c", 3)]);
        let u = blind_spot_curve(&t, EstimatorMode::PluginUnseen, 4).unwrap();
        // 0.4 + {0, 0.4, 0.4, 1.0} with the last clamped
        assert_eq!(masses(&u), [0.4, 0.8, 0.8, 1.0]);
        let g = blind_spot_curve(&t, EstimatorMode::GeneralizedGoodTuring, 4).unwrap();
        // (r+1) f_{r+1} / n summed for r < tau: f1=2, f3=1
        assert_eq!(masses(&g), [0.4, 0.4, 1.0, 1.0]);
        assert!(g.extension);
    }

    #[test]
    fn good_turing_formula() {
        assert_eq!(
            good_turing_unseen_mass(&table(&[("a", 1), ("b", 1), ("c", 3)]).freq_of_freqs()),
            0.4
        );
        assert_eq!(good_turing_unseen_mass(&table(&[("a", 5)]).freq_of_freqs()), 0.0);
    }

    fn in_house() -> CountTable {
        table(&[
            ("Walking", 307),
            ("Stairs up", 134),
            ("Stairs down", 144),
            ("Front fall", 122),
            ("Backward fall", 122),
            ("Other activities", 1674 - 307 - 134 - 144 - 122 - 122),
        ])
    }

    #[test]
    fn risk_weighted_table_rows() {
        let t = in_house();
        let w = RiskWeights::new(
            [
                (key("Walking"), 0.2),
                (key("Stairs up"), 0.6),
                (key("Stairs down"), 0.6),
                (key("Front fall"), 1.0),
                (key("Backward fall"), 1.0),
            ],
            0.0,
        )
        .unwrap();
        let (total, d) = risk_weighted_blindness(&t, &t.plug_in(), &w, 150).unwrap();
        let row = |s: &str| format!("{:.3}", d.contribution(&key(s)));
        assert_eq!(row("Walking"), "0.000");
        assert_eq!(row("Stairs up"), "0.048");
        assert_eq!(row("Stairs down"), "0.052");
        assert_eq!(row("Front fall"), "0.073");
        assert_eq!(row("Backward fall"), "0.073");
        assert!((total - d.total).abs() < 1e-12);
        // ties broken by key: Backward before Front
        assert_eq!(d.entries[0].state, "Backward fall");
        assert_eq!(d.entries[1].state, "Front fall");
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(RiskWeights::new([(key("a"), -0.1)], 1.0).is_err());
        assert!(RiskWeights::new([], f64::NAN).is_err());
    }

    #[test]
    fn unweighted_decomposition() {
        let t = in_house();
        let d = blindness_decomposition(&t, 150, None).unwrap();
        assert_eq!(format!("{:.3}", d.contribution(&key("Stairs up"))), "0.080");
        assert_eq!(format!("{:.3}", d.contribution(&key("Front fall"))), "0.073");
        let d1 = blindness_decomposition(&t, 1, None).unwrap();
        assert!(d1.entries.is_empty());
        assert_eq!(d1.total, 0.0);
        let top = blindness_decomposition(&t, 150, Some(1)).unwrap();
        assert_eq!(top.entries.len(), 1);
        assert_eq!(top.total, d.total);
    }

    #[test]
    fn ceiling_values() {
        assert_eq!(accuracy_ceiling(0.0, 0.3).unwrap(), 1.0);
        assert!((accuracy_ceiling(1.0, 0.1).unwrap() - 0.1).abs() < 1e-15);
        let c = accuracy_ceiling(0.949, 1.0 / 12.0).unwrap();
        assert!((c - 0.130_083_333_333_333_3).abs() < 1e-12, "{c}");
        assert!(accuracy_ceiling(1.2, 0.0).is_err());
        assert!(accuracy_ceiling(0.5, -0.1).is_err());
        assert_eq!(BlindAccuracy::Chance(12).value().unwrap(), 1.0 / 12.0);
        assert!(BlindAccuracy::Chance(0).value().is_err());
    }

    #[test]
    fn ceiling_curve_nonincreasing() {
        let t = in_house();
        let c = blind_spot_curve(&t, EstimatorMode::Plugin, 400).unwrap();
        let cc = ceiling_curve(&c, BlindAccuracy::Chance(12)).unwrap();
        assert!(cc.points.windows(2).all(|w| w[1].ceiling <= w[0].ceiling));
    }

    #[test]
    fn mixture_hand_example() {
        let t = table(&[("s", 10), ("b", 1)]);
        let mut outcomes = Vec::new();
        for i in 0..6 {
            outcomes.push((key("s"), i < 4));
        }
        for i in 0..4 {
            outcomes.push((key("b"), i < 1));
        }
        let m = mixture_decomposition(&outcomes, &t, 5).unwrap();
        assert_eq!(m.acc, 0.5);
        assert!((m.acc_sup.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.acc_blind, Some(0.25));
        assert_eq!(m.blind_mass_empirical, 0.4);
        assert!((m.recombined() - m.acc).abs() <= 1e-12);
    }

    #[test]
    fn mixture_degenerate_branches() {
        let t = table(&[("s", 10)]);
        let m = mixture_decomposition(&[(key("s"), true), (key("s"), false)], &t, 5).unwrap();
        assert_eq!(m.acc, m.acc_sup.unwrap());
        assert_eq!(m.blind_mass_empirical, 0.0);
        assert_eq!(m.acc_blind, None);
        assert!(mixture_decomposition(&[], &t, 5).is_err());
        assert!(mixture_decomposition(&[(StateKey::single("x", "s"), true)], &t, 5).is_err());
    }

    fn random_table() -> impl Strategy<Value = CountTable> {
        prop::collection::vec(0u16..40, 1..300).prop_map(|idx| {
            let samples: Vec<StateKey> = idx.iter().map(|i| key(&format!("s{i}"))).collect();
            build_count_table(&samples, &["state"]).unwrap()
        })
    }

    proptest! {
        #[test]
        fn curves_monotone_and_ordered(t in random_table(), tau_max in 1u64..60) {
            let p = blind_spot_curve(&t, EstimatorMode::Plugin, tau_max).unwrap();
            let u = blind_spot_curve(&t, EstimatorMode::PluginUnseen, tau_max).unwrap();
            let g = blind_spot_curve(&t, EstimatorMode::GeneralizedGoodTuring, tau_max).unwrap();
            for c in [&p, &u, &g] {
                prop_assert!(c.check().is_ok());
            }
            for (a, b) in p.points.iter().zip(&u.points) {
                prop_assert!(a.mass <= b.mass);
            }
        }

        #[test]
        fn plugin_curve_matches_definition(t in random_table(), tau in 1u64..60) {
            let c = blind_spot_curve(&t, EstimatorMode::Plugin, tau).unwrap();
            let direct = blind_spot_mass(&t, &t.plug_in(), tau).unwrap();
            prop_assert!((c.at(tau).unwrap() - direct).abs() <= 1e-12);
            let d = blindness_decomposition(&t, tau, None).unwrap();
            prop_assert!((d.total - direct).abs() <= 1e-12);
            prop_assert!(d.entries.iter().all(|e| e.count < tau));
            prop_assert!(d.entries.windows(2).all(|w| w[0].contribution >= w[1].contribution));
        }
    }
}
