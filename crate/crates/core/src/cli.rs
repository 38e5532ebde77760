//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 internal
//! invariant violation. Diagnostics go to stderr; data goes to the named
//! output files or stdout.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::abstraction::{abstract_windows, make_windows, AbstractionConfig, LabeledStream, SensorWindow};
use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::estimators::{
    blind_spot_curve, blindness_decomposition, ceiling_curve, risk_weighted_blindness, BlindAccuracy,
    EstimatorMode,
};
use crate::io::files::{
    abstraction_from_kv, read_class_tallies, read_counts_file, read_samples_file, read_weights_file,
    sweep_from_kv, write_samples_file, KeyValues,
};
use crate::io::ingest::{
    ingest_diagnoses, ingest_imu_csv, ingest_pamap2, ingest_samples_csv, ImuColumns, IngestionSummary,
    Placement,
};
use crate::io::report::{
    support_histogram, sweep_json, write_ceiling_csv, write_curves_csv, write_decomposition_csv,
    write_histogram_csv, write_sweep_csv, write_wilson_csv, ReportBundle, ReportRequest, WilsonRow,
};
use crate::simulator::run_sweep;
use crate::wilson::wilson_interval;

#[derive(Debug, Parser)]
#[command(
    name = "blindspot",
    version,
    about = "Blind-spot mass and coverage-risk reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a raw source into a canonical samples file.
    Ingest(IngestArgs),
    /// Blind-spot mass curve over tau = 1..tau-max.
    Curve(CurveArgs),
    /// Per-state contributions to blind mass at one threshold.
    Decompose(DecomposeArgs),
    /// Coverage-imposed accuracy ceiling over tau = 1..tau-max.
    Ceiling(CeilingArgs),
    /// Support count per observed state.
    Histogram(HistogramArgs),
    /// Wilson intervals for per-class accuracy.
    Wilson(WilsonArgs),
    /// Monte-Carlo estimator sweep from a sweep spec file.
    Simulate(SimulateArgs),
    /// Full JSON report bundle.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Source {
    Pamap2,
    ImuCsv,
    SamplesCsv,
    Diagnoses,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlacementArg {
    Hand,
    Chest,
    Ankle,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::Hand => Placement::Hand,
            PlacementArg::Chest => Placement::Chest,
            PlacementArg::Ankle => Placement::Ankle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Plugin,
    #[value(name = "plugin+unseen")]
    PluginUnseen,
    #[value(name = "generalized-gt")]
    GeneralizedGt,
}

impl From<ModeArg> for EstimatorMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plugin => EstimatorMode::Plugin,
            ModeArg::PluginUnseen => EstimatorMode::PluginUnseen,
            ModeArg::GeneralizedGt => EstimatorMode::GeneralizedGoodTuring,
        }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    source: Source,
    /// Input file(s).
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Canonical samples file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ingestion summary (JSON) to write.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// PAMAP2 subject ids.
    #[arg(long, value_delimiter = ',', default_values_t = [101u32, 105])]
    subjects: Vec<u32>,
    #[arg(long, value_enum, default_value = "chest")]
    placement: PlacementArg,
    #[arg(long, default_value_t = 5.0)]
    window_s: f64,
    #[arg(long, default_value_t = 2.5)]
    stride_s: f64,
    /// Abstraction preset (a, a,p, a,p,e, deployment-refined).
    #[arg(long, default_value = "a,p,e", conflicts_with = "config")]
    preset: String,
    /// Abstraction config file (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample rate of imu-csv inputs.
    #[arg(long, default_value_t = 100.0)]
    sample_rate_hz: f64,
    /// Recording-id column of imu-csv inputs; a new value starts a new segment.
    #[arg(long)]
    group_column: Option<String>,
    /// Timestamp column of imu-csv inputs (default: row index / rate).
    #[arg(long)]
    timestamp_column: Option<String>,
    /// Fit quantile edges only on windows from these subjects
    /// (for imu-csv: zero-based input file positions).
    #[arg(long, value_delimiter = ',')]
    fit_subjects: Vec<u32>,
    /// Write the fitted abstraction config here.
    #[arg(long)]
    fitted_config: Option<PathBuf>,
    /// Key columns for samples-csv sources.
    #[arg(long, value_delimiter = ',')]
    key_columns: Vec<String>,
}

#[derive(Debug, Args)]
#[group(id = "table_input", required = true, multiple = false)]
struct TableInput {
    /// Canonical samples file.
    #[arg(long, group = "table_input")]
    samples: Option<PathBuf>,
    /// (state, count) CSV.
    #[arg(long, group = "table_input")]
    counts: Option<PathBuf>,
}

impl TableInput {
    fn load(&self) -> Result<CountTable> {
        match (&self.samples, &self.counts) {
            (Some(p), _) => {
                let (schema, samples) = read_samples_file(p)?;
                CountTable::build(&samples, &schema)
            }
            (None, Some(p)) => read_counts_file(p),
            (None, None) => unreachable!("clap enforces one table input"),
        }
    }

    fn dataset_id(&self) -> String {
        self.samples
            .as_ref()
            .or(self.counts.as_ref())
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

fn positive_tau() -> clap::builder::RangedU64ValueParser<u64> {
    clap::value_parser!(u64).range(1..)
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    input: TableInput,
    #[arg(long, value_parser = positive_tau())]
    tau_max: u64,
    #[arg(long = "mode", value_enum, default_values_t = [ModeArg::Plugin])]
    modes: Vec<ModeArg>,
    /// CSV output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON report bundle.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: TableInput,
    #[arg(long, value_parser = positive_tau())]
    tau: u64,
    /// Risk weights file (`state<TAB>weight`, `*` for the default).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BlindAccuracyArgs {
    /// Accuracy assumed inside the blind region (default 0).
    #[arg(long, conflicts_with = "chance_classes")]
    assumed_blind_accuracy: Option<f64>,
    /// Use chance accuracy 1/classes inside the blind region.
    #[arg(long)]
    chance_classes: Option<u32>,
}

impl BlindAccuracyArgs {
    fn resolve(&self) -> BlindAccuracy {
        match (self.assumed_blind_accuracy, self.chance_classes) {
            (Some(a), _) => BlindAccuracy::Fixed(a),
            (None, Some(c)) => BlindAccuracy::Chance(c),
            (None, None) => BlindAccuracy::Zero,
        }
    }
}

#[derive(Debug, Args)]
struct CeilingArgs {
    #[command(flatten)]
    input: TableInput,
    #[arg(long, value_parser = positive_tau())]
    tau_max: u64,
    #[arg(long, value_enum, default_value = "plugin")]
    mode: ModeArg,
    #[command(flatten)]
    blind: BlindAccuracyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HistogramArgs {
    #[command(flatten)]
    input: TableInput,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WilsonArgs {
    /// CSV with class, successes, trials columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Sweep spec file (key = value).
    #[arg(long)]
    spec: PathBuf,
    /// Overrides `master_seed` from the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    input: TableInput,
    #[arg(long, value_parser = positive_tau())]
    tau_max: u64,
    #[arg(long = "mode", value_enum, default_values_t = [ModeArg::Plugin, ModeArg::PluginUnseen, ModeArg::GeneralizedGt])]
    modes: Vec<ModeArg>,
    /// Thresholds at which to decompose blind mass.
    #[arg(long, value_delimiter = ',', value_parser = positive_tau())]
    decompose_tau: Vec<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, value_enum, default_value = "plugin")]
    ceiling_mode: ModeArg,
    #[command(flatten)]
    blind: BlindAccuracyArgs,
    /// Abstraction config to record in the metadata.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset_id: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Curve(a) => curve(a),
        Command::Decompose(a) => decompose(a),
        Command::Ceiling(a) => ceiling(a),
        Command::Histogram(a) => histogram(a),
        Command::Wilson(a) => wilson(a),
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(a),
    }
}

/// Run `f` against the file at `path`, or stdout.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut buf = Vec::new();
            f(&mut buf)?;
            fs::write(p, buf).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_abstraction(preset: &str, config: Option<&Path>) -> Result<AbstractionConfig> {
    match config {
        Some(p) => abstraction_from_kv(&KeyValues::load(p)?),
        None => AbstractionConfig::preset(preset),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let (schema, samples, summary) = match a.source {
        Source::Pamap2 => {
            let (stream, summary) = ingest_pamap2(&a.inputs, &a.subjects, a.placement.into())?;
            abstract_stream(&a, stream, summary)?
        }
        Source::ImuCsv => {
            let columns = ImuColumns {
                timestamp: a.timestamp_column.clone(),
                group: a.group_column.clone(),
                ..Default::default()
            };
            let mut stream = LabeledStream {
                sample_rate_hz: a.sample_rate_hz,
                samples: Vec::new(),
            };
            let mut total = IngestionSummary::default();
            let mut segment_offset = 0;
            for (i, p) in a.inputs.iter().enumerate() {
                let (part, s) = ingest_imu_csv(p, &columns, a.sample_rate_hz)?;
                let mut max_segment = 0;
                for mut sample in part.samples {
                    sample.source = i as u32;
                    max_segment = max_segment.max(sample.segment);
                    sample.segment += segment_offset;
                    stream.samples.push(sample);
                }
                segment_offset += max_segment + 1;
                merge_summary(&mut total, s);
            }
            abstract_stream(&a, stream, total)?
        }
        Source::SamplesCsv => {
            if a.key_columns.is_empty() {
                return Err(Error::invalid("--key-columns is required for samples-csv"));
            }
            let (samples, summary) = merge_inputs(&a.inputs, |p| ingest_samples_csv(p, &a.key_columns))?;
            (a.key_columns.clone(), samples, summary)
        }
        Source::Diagnoses => {
            let (samples, summary) = merge_inputs(&a.inputs, ingest_diagnoses)?;
            (vec!["icd4".to_owned()], samples, summary)
        }
    };
    write_samples_file(&a.out, &schema, &samples)?;
    if let Some(p) = &a.summary {
        let mut json = serde_json::to_string_pretty(&summary).map_err(|e| Error::invalid(e.to_string()))?;
        json.push('\n');
        write_text(p, &json)?;
    }
    Ok(())
}

fn abstract_stream(
    a: &IngestArgs,
    stream: LabeledStream,
    mut summary: IngestionSummary,
) -> Result<(Vec<String>, Vec<crate::counts::StateKey>, IngestionSummary)> {
    let mut cfg = load_abstraction(&a.preset, a.config.as_deref())?;
    let windows = make_windows(&stream, a.window_s, a.stride_s)?;
    if a.fit_subjects.is_empty() {
        cfg.fit(&windows)?;
    } else {
        let reference: Vec<SensorWindow> = windows
            .iter()
            .filter(|w| a.fit_subjects.contains(&w.source))
            .cloned()
            .collect();
        if reference.is_empty() {
            return Err(Error::invalid("no windows from the --fit-subjects population"));
        }
        cfg.fit(&reference)?;
    }
    let keys = abstract_windows(&windows, &cfg)?;
    summary.emitted = keys.len() as u64;
    if let Some(p) = &a.fitted_config {
        write_text(p, &crate::io::files::write_abstraction(&cfg))?;
    }
    Ok((cfg.schema(), keys, summary))
}

fn merge_summary(total: &mut IngestionSummary, s: IngestionSummary) {
    total.source_files.extend(s.source_files);
    total.rows_read += s.rows_read;
    total.rows_kept += s.rows_kept;
    total.emitted += s.emitted;
    total.admissions_skipped += s.admissions_skipped;
    for (r, c) in s.rows_dropped {
        *total.rows_dropped.entry(r).or_insert(0) += c;
    }
}

fn merge_inputs(
    inputs: &[PathBuf],
    f: impl Fn(&Path) -> Result<(Vec<crate::counts::StateKey>, IngestionSummary)>,
) -> Result<(Vec<crate::counts::StateKey>, IngestionSummary)> {
    let mut all = Vec::new();
    let mut total = IngestionSummary::default();
    for p in inputs {
        let (samples, s) = f(p)?;
        all.extend(samples);
        merge_summary(&mut total, s);
    }
    Ok((all, total))
}

fn curve(a: CurveArgs) -> Result<()> {
    let table = a.input.load()?;
    let mut modes: Vec<EstimatorMode> = a.modes.iter().map(|&m| m.into()).collect();
    modes.sort();
    modes.dedup();
    let curves = modes
        .iter()
        .map(|&m| blind_spot_curve(&table, m, a.tau_max))
        .collect::<Result<Vec<_>>>()?;
    emit(a.out.as_deref(), |w| write_curves_csv(w, &curves))?;
    if let Some(p) = &a.json {
        let bundle = ReportBundle::build(
            &table,
            &ReportRequest {
                dataset_id: a.input.dataset_id(),
                abstraction: None,
                modes,
                tau_max: a.tau_max,
                decompose_at: Vec::new(),
                top_k: None,
                ceiling_mode: EstimatorMode::Plugin,
                assumed_blind_accuracy: BlindAccuracy::Zero,
            },
        )?;
        write_text(p, &bundle.to_json()?)?;
    }
    Ok(())
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let table = a.input.load()?;
    let d = match &a.weights {
        Some(p) => {
            let weights = read_weights_file(p, table.schema())?;
            let (_, mut d) = risk_weighted_blindness(&table, &table.plug_in(), &weights, a.tau)?;
            if let Some(k) = a.top_k {
                d.entries.truncate(k);
            }
            d
        }
        None => blindness_decomposition(&table, a.tau, a.top_k)?,
    };
    emit(a.out.as_deref(), |w| write_decomposition_csv(w, &d))
}

fn ceiling(a: CeilingArgs) -> Result<()> {
    let table = a.input.load()?;
    let curve = blind_spot_curve(&table, a.mode.into(), a.tau_max)?;
    let c = ceiling_curve(&curve, a.blind.resolve())?;
    emit(a.out.as_deref(), |w| write_ceiling_csv(w, &c))
}

fn histogram(a: HistogramArgs) -> Result<()> {
    let table = a.input.load()?;
    let rows = support_histogram(&table);
    emit(a.out.as_deref(), |w| write_histogram_csv(w, &rows))
}

fn wilson(a: WilsonArgs) -> Result<()> {
    let rows = read_class_tallies(&a.input)?
        .into_iter()
        .map(|t| {
            Ok(WilsonRow {
                interval: wilson_interval(t.successes, t.trials, a.confidence)?,
                class: t.class,
                successes: t.successes,
                trials: t.trials,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(a.out.as_deref(), |w| write_wilson_csv(w, &rows))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = sweep_from_kv(&KeyValues::load(&a.spec)?)?;
    let seed = a.seed.unwrap_or(spec.master_seed);
    let result = run_sweep(&spec.grid, spec.trials, seed)?;
    if a.out_csv.is_none() && a.out_json.is_none() {
        return emit(None, |w| write_sweep_csv(w, &result));
    }
    if let Some(p) = &a.out_csv {
        emit(Some(p), |w| write_sweep_csv(w, &result))?;
    }
    if let Some(p) = &a.out_json {
        write_text(p, &sweep_json(&result)?)?;
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let table = a.input.load()?;
    let abstraction = a
        .config
        .as_deref()
        .map(|p| abstraction_from_kv(&KeyValues::load(p)?))
        .transpose()?;
    let bundle = ReportBundle::build(
        &table,
        &ReportRequest {
            dataset_id: a.dataset_id.clone().unwrap_or_else(|| a.input.dataset_id()),
            abstraction,
            modes: a.modes.iter().map(|&m| m.into()).collect(),
            tau_max: a.tau_max,
            decompose_at: a.decompose_tau.clone(),
            top_k: a.top_k,
            ceiling_mode: a.ceiling_mode.into(),
            assumed_blind_accuracy: a.blind.resolve(),
        },
    )?;
    let json = bundle.to_json()?;
    emit(a.out.as_deref(), |w| {
        w.write_all(json.as_bytes()).map_err(|e| Error::io("<output>", e))
    })
}
