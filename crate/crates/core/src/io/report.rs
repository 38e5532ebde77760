//! Plot-ready outputs: display CSVs and the JSON report bundle.
//!
//! CSVs print reals with six decimals. JSON keeps full precision (shortest
//! representation that parses back to the same double) and a fixed field
//! order.

use std::io::Write;

use serde::Serialize;

use crate::abstraction::AbstractionConfig;
use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::estimators::{
    blind_spot_curve, blindness_decomposition, ceiling_curve, BlindAccuracy, BlindSpotCurve,
    BlindnessDecomposition, CeilingCurve, EstimatorMode,
};
use crate::simulator::{Family, SweepResult};
use crate::wilson::WilsonInterval;

pub const TOOL_NAME: &str = "blindspot";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn write_err(e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("writing output: {e}"))
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub state: String,
    pub count: u64,
}

/// Support per observed state, largest first, ties in key order.
pub fn support_histogram(table: &CountTable) -> Vec<HistogramRow> {
    let mut rows: Vec<_> = table.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    rows.into_iter()
        .map(|(k, c)| HistogramRow {
            state: k.label(),
            count: c,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub dataset_id: String,
    pub schema: Vec<String>,
    pub abstraction: Option<AbstractionConfig>,
    pub n: u64,
    pub k_eff: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub metadata: ReportMetadata,
    pub curves: Vec<BlindSpotCurve>,
    pub decompositions: Vec<BlindnessDecomposition>,
    pub ceiling: CeilingCurve,
    pub histogram: Vec<HistogramRow>,
}

#[derive(Debug, Clone)]
pub struct ReportRequest {
    pub dataset_id: String,
    pub abstraction: Option<AbstractionConfig>,
    pub modes: Vec<EstimatorMode>,
    pub tau_max: u64,
    pub decompose_at: Vec<u64>,
    pub top_k: Option<usize>,
    pub ceiling_mode: EstimatorMode,
    pub assumed_blind_accuracy: BlindAccuracy,
}

impl ReportBundle {
    pub fn build(table: &CountTable, req: &ReportRequest) -> Result<Self> {
        let mut modes = req.modes.clone();
        if modes.is_empty() {
            modes.push(EstimatorMode::Plugin);
        }
        modes.sort();
        modes.dedup();
        let curves = modes
            .iter()
            .map(|&m| blind_spot_curve(table, m, req.tau_max))
            .collect::<Result<Vec<_>>>()?;
        let ceiling_source = match curves.iter().find(|c| c.estimator_mode == req.ceiling_mode) {
            Some(c) => c.clone(),
            None => blind_spot_curve(table, req.ceiling_mode, req.tau_max)?,
        };
        let decompositions = req
            .decompose_at
            .iter()
            .map(|&t| blindness_decomposition(table, t, req.top_k))
            .collect::<Result<Vec<_>>>()?;
        let bundle = ReportBundle {
            metadata: ReportMetadata {
                tool: TOOL_NAME,
                version: TOOL_VERSION,
                dataset_id: req.dataset_id.clone(),
                schema: table.schema().to_vec(),
                abstraction: req.abstraction.clone(),
                n: table.n(),
                k_eff: table.k_observed() as u64,
            },
            curves,
            decompositions,
            ceiling: ceiling_curve(&ceiling_source, req.assumed_blind_accuracy)?,
            histogram: support_histogram(table),
        };
        bundle.check()?;
        Ok(bundle)
    }

    /// Cross-structure consistency of the bundle.
    pub fn check(&self) -> Result<()> {
        if self.metadata.k_eff != self.histogram.len() as u64 {
            return Err(Error::Invariant(format!(
                "K_eff {} but histogram has {} rows",
                self.metadata.k_eff,
                self.histogram.len()
            )));
        }
        for c in &self.curves {
            c.check()?;
        }
        let plugin = self
            .curves
            .iter()
            .find(|c| c.estimator_mode == EstimatorMode::Plugin);
        for d in &self.decompositions {
            if let Some(m) = plugin.and_then(|c| c.at(d.tau)) {
                if (m - d.total).abs() > 1e-12 {
                    return Err(Error::Invariant(format!(
                        "decomposition total {} differs from plugin curve {} at tau={}",
                        d.total, m, d.tau
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(write_err)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn write_curves_csv<W: Write>(out: W, curves: &[BlindSpotCurve]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["tau", "mode", "mass"]).map_err(write_err)?;
    for c in curves {
        for p in &c.points {
            w.write_record([p.tau.to_string(), c.estimator_mode.to_string(), f6(p.mass)])
                .map_err(write_err)?;
        }
    }
    w.flush().map_err(write_err)
}

pub fn write_decomposition_csv<W: Write>(out: W, d: &BlindnessDecomposition) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["state", "count", "prob", "weight", "contribution"])
        .map_err(write_err)?;
    for e in &d.entries {
        w.write_record([
            e.state.clone(),
            e.count.to_string(),
            f6(e.prob),
            f6(e.weight),
            f6(e.contribution),
        ])
        .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn write_ceiling_csv<W: Write>(out: W, c: &CeilingCurve) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["tau", "blind_mass", "ceiling"])
        .map_err(write_err)?;
    for p in &c.points {
        w.write_record([p.tau.to_string(), f6(p.blind_mass), f6(p.ceiling)])
            .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn write_histogram_csv<W: Write>(out: W, rows: &[HistogramRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["state", "count"]).map_err(write_err)?;
    for r in rows {
        w.write_record([r.state.clone(), r.count.to_string()])
            .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilsonRow {
    pub class: String,
    pub successes: u64,
    pub trials: u64,
    #[serde(flatten)]
    pub interval: WilsonInterval,
}

pub fn write_wilson_csv<W: Write>(out: W, rows: &[WilsonRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["class", "successes", "trials", "accuracy", "lower", "upper"])
        .map_err(write_err)?;
    for r in rows {
        w.write_record([
            r.class.clone(),
            r.successes.to_string(),
            r.trials.to_string(),
            f6(r.interval.estimate),
            f6(r.interval.lower),
            f6(r.interval.upper),
        ])
        .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn write_sweep_csv<W: Write>(out: W, r: &SweepResult) -> Result<()> {
    let mut w = writer(out);
    let mut header: Vec<String> = [
        "family",
        "param",
        "k",
        "n",
        "tau",
        "trials",
        "true_mean",
        "true_sd",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for m in EstimatorMode::ALL {
        for stat in ["mean", "sd", "mae"] {
            header.push(format!("{m}_{stat}"));
        }
    }
    w.write_record(&header).map_err(write_err)?;
    for c in &r.cells {
        let (family, param) = match c.cell.family {
            Family::Zipf { exponent } => ("zipf", exponent.to_string()),
            Family::Geometric { ratio } => ("geometric", ratio.to_string()),
            Family::Uniform => ("uniform", String::new()),
            Family::Custom => ("custom", String::new()),
        };
        let mut row = vec![
            family.to_string(),
            param,
            c.cell.k.to_string(),
            c.cell.n.to_string(),
            c.cell.tau.to_string(),
            c.trials.to_string(),
            f6(c.true_mass.mean),
            f6(c.true_mass.stddev),
        ];
        for m in EstimatorMode::ALL {
            let s = c.mode(m);
            row.extend([f6(s.estimate.mean), f6(s.estimate.stddev), f6(s.mean_abs_error)]);
        }
        w.write_record(&row).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn sweep_json(r: &SweepResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r).map_err(write_err)?;
    s.push('\n');
    Ok(s)
}
