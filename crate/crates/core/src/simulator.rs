//! Monte-Carlo harness with known ground truth.
//!
//! Every randomized routine is driven by ChaCha8. A sweep keys one
//! generator per trial from the master seed and selects its stream from
//! `(cell << 32) | trial`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counts::{CountTable, EmpiricalDistribution, StateKey};
use crate::error::{Error, Result};
use crate::estimators::{blind_spot_curve, EstimatorMode};

pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.3), stream = (cell << 32) | trial";
pub const STATE_FACTOR: &str = "state";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Zipf { exponent: f64 },
    Geometric { ratio: f64 },
    Uniform,
    Custom,
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Zipf { exponent } => format!("zipf:{exponent}"),
            Family::Geometric { ratio } => format!("geometric:{ratio}"),
            Family::Uniform => "uniform".into(),
            Family::Custom => "custom".into(),
        }
    }
}

/// A fully materialized distribution over states `s0 .. s{K-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDistribution {
    family: Family,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl SyntheticDistribution {
    /// `p_i ∝ 1 / (i+1)^s`, normalized by direct summation.
    pub fn zipf(k: usize, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::invalid(format!(
                "zipf exponent must be > 0, got {exponent}"
            )));
        }
        Self::from_weights(
            Family::Zipf { exponent },
            (0..k).map(|i| ((i + 1) as f64).powf(-exponent)).collect(),
        )
    }

    /// `p_i ∝ ratio^i`, truncated to `k` states.
    pub fn geometric(k: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid(format!(
                "geometric ratio must be in (0,1), got {ratio}"
            )));
        }
        Self::from_weights(
            Family::Geometric { ratio },
            (0..k).map(|i| ratio.powi(i as i32)).collect(),
        )
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::from_weights(Family::Uniform, vec![1.0; k])
    }

    /// Arbitrary nonnegative weights, normalized to sum to one.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        Self::from_weights(Family::Custom, weights)
    }

    fn from_weights(family: Family, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution needs at least one state"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("weights sum to zero"));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { family, probs, cdf })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn state_key(i: usize) -> StateKey {
        StateKey::single(STATE_FACTOR, format!("s{i}"))
    }

    pub fn state_index(key: &StateKey) -> Option<usize> {
        if key.len() != 1 {
            return None;
        }
        key.value(STATE_FACTOR)?.strip_prefix('s')?.parse().ok()
    }

    /// The same distribution as a keyed known-truth distribution.
    pub fn to_distribution(&self) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::known_truth(
            self.probs
                .iter()
                .enumerate()
                .map(|(i, &p)| (Self::state_key(i), p)),
        )
    }

    /// Inverse-CDF draw by binary search.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }

    /// Per-state counts of `n` draws.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.k()];
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
        counts
    }
}

/// `n` i.i.d. draws as single-factor keys `s<i>`.
pub fn sample(dist: &SyntheticDistribution, n: u64, seed: u64) -> Vec<StateKey> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| SyntheticDistribution::state_key(dist.draw(&mut rng)))
        .collect()
}

/// Count table over `s<i>` keys from a per-state count vector.
pub fn table_from_counts(counts: &[u64]) -> Result<CountTable> {
    CountTable::from_counts(
        &[STATE_FACTOR],
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (SyntheticDistribution::state_key(i), c)),
    )
}

/// Exact `B_n(tau)` under the true distribution, unseen states included.
pub fn true_blind_mass(dist: &SyntheticDistribution, table: &CountTable, tau: u64) -> Result<f64> {
    if tau == 0 {
        return Err(Error::invalid("support threshold tau must be at least 1"));
    }
    let mut counts = vec![0u64; dist.k()];
    for (key, c) in table.iter() {
        let i = SyntheticDistribution::state_index(key)
            .filter(|&i| i < dist.k())
            .ok_or_else(|| Error::UnknownState(key.label()))?;
        counts[i] = c;
    }
    Ok(blind_mass_from_counts(dist.probs(), &counts, tau))
}

fn blind_mass_from_counts(probs: &[f64], counts: &[u64], tau: u64) -> f64 {
    probs
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c < tau)
        .map(|(p, _)| p)
        .sum()
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    #[serde(flatten)]
    pub family: Family,
    pub k: usize,
    pub n: u64,
    pub tau: u64,
}

impl SweepCell {
    pub fn distribution(&self) -> Result<SyntheticDistribution> {
        match self.family {
            Family::Zipf { exponent } => SyntheticDistribution::zipf(self.k, exponent),
            Family::Geometric { ratio } => SyntheticDistribution::geometric(self.k, ratio),
            Family::Uniform => SyntheticDistribution::uniform(self.k),
            Family::Custom => Err(Error::invalid("custom distributions cannot be swept")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub stddev: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stddev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeStats {
    pub mode: EstimatorMode,
    pub extension: bool,
    pub estimate: Summary,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub cell: SweepCell,
    pub trials: u32,
    pub true_mass: Summary,
    pub modes: Vec<ModeStats>,
}

impl CellResult {
    pub fn mode(&self, mode: EstimatorMode) -> &ModeStats {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .expect("every mode is recorded")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub master_seed: u64,
    pub trials: u32,
    pub rng: &'static str,
    pub cells: Vec<CellResult>,
}

/// Generator for one trial of one cell.
pub fn trial_rng(master_seed: u64, cell: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((u64::from(cell) << 32) | u64::from(trial));
    rng
}

struct TrialOutcome {
    truth: f64,
    estimates: [f64; 3],
}

fn run_trial(dist: &SyntheticDistribution, cell: &SweepCell, mut rng: ChaCha8Rng) -> Result<TrialOutcome> {
    let counts = dist.sample_counts(cell.n, &mut rng);
    let truth = blind_mass_from_counts(dist.probs(), &counts, cell.tau);
    let table = table_from_counts(&counts)?;
    let mut estimates = [0.0; 3];
    for (slot, mode) in estimates.iter_mut().zip(EstimatorMode::ALL) {
        let curve = blind_spot_curve(&table, mode, cell.tau)?;
        *slot = curve.points[cell.tau as usize - 1].mass;
    }
    if estimates[0] > estimates[1] {
        return Err(Error::Invariant("plugin estimate exceeds plugin+unseen".into()));
    }
    Ok(TrialOutcome { truth, estimates })
}

/// Run `trials` independent trials of every cell in parallel.
pub fn run_sweep(grid: &[SweepCell], trials: u32, master_seed: u64) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::invalid("a sweep needs at least one trial"));
    }
    if grid.len() > u32::MAX as usize {
        return Err(Error::invalid("sweep grid too large"));
    }
    let mut cells = Vec::with_capacity(grid.len());
    for (ci, cell) in grid.iter().enumerate() {
        if cell.n == 0 || cell.tau == 0 {
            return Err(Error::invalid(format!("cell {ci}: n and tau must be at least 1")));
        }
        let dist = cell.distribution()?;
        let outcomes: Vec<TrialOutcome> = (0..trials)
            .into_par_iter()
            .map(|t| run_trial(&dist, cell, trial_rng(master_seed, ci as u32, t)))
            .collect::<Result<_>>()?;

        let truths: Vec<f64> = outcomes.iter().map(|o| o.truth).collect();
        let modes = EstimatorMode::ALL
            .iter()
            .enumerate()
            .map(|(m, &mode)| {
                let est: Vec<f64> = outcomes.iter().map(|o| o.estimates[m]).collect();
                let mae = outcomes
                    .iter()
                    .map(|o| (o.estimates[m] - o.truth).abs())
                    .sum::<f64>()
                    / f64::from(trials);
                ModeStats {
                    mode,
                    extension: mode.is_extension(),
                    estimate: Summary::of(&est),
                    mean_abs_error: mae,
                }
            })
            .collect();
        cells.push(CellResult {
            cell: *cell,
            trials,
            true_mass: Summary::of(&truths),
            modes,
        });
    }
    Ok(SweepResult {
        master_seed,
        trials,
        rng: RNG_NAME,
        cells,
    })
}
