//! Coverage-risk estimation over operational state spaces.
//!
//! The central quantity is the blind-spot mass `B_n(tau)`: the probability
//! mass of states observed fewer than `tau` times in an `n`-sample. The
//! crate builds sparse count tables from state samples ([`counts`]),
//! estimates blind mass and its derived quantities ([`estimators`]), maps
//! sensor windows and clinical records to states ([`abstraction`]), checks
//! the estimators against known distributions ([`simulator`]) and reads and
//! writes the on-disk formats used by the `blindspot` binary ([`io`],
//! [`cli`]).

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod cli;
pub mod counts;
pub mod error;
pub mod estimators;
pub mod io;
pub mod simulator;
pub mod wilson;

pub use counts::{
    build_count_table, coarsen, freq_of_freqs, plug_in_distribution, CountTable, DistributionSource,
    EmpiricalDistribution, FreqOfFreqs, StateKey,
};
pub use error::{Error, Result};
pub use estimators::{
    accuracy_ceiling, blind_spot_curve, blind_spot_mass, blindness_decomposition, ceiling_curve,
    good_turing_unseen_mass, mixture_decomposition, risk_weighted_blindness, BlindAccuracy, BlindSpotCurve,
    BlindnessDecomposition, CeilingCurve, EstimatorMode, MixtureDecomposition, RiskWeights,
};
pub use wilson::{wilson_interval, WilsonInterval};
