//! Source adapters: PAMAP2 raw files, generic labeled CSVs and
//! admission-diagnosis tables.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::Serialize;

use crate::abstraction::{icd_prefix_state, Admission, LabeledStream, SensorSample};
use crate::counts::StateKey;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    MissingLabel,
    NanAfterImpute,
    TransientActivity,
    NoSeq1Diagnosis,
    NonPrimaryDiagnosis,
    DuplicateSeq1,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::MissingLabel => "missing-label",
            DropReason::NanAfterImpute => "nan-after-impute",
            DropReason::TransientActivity => "transient-activity",
            DropReason::NoSeq1Diagnosis => "no-seq1-diagnosis",
            DropReason::NonPrimaryDiagnosis => "non-primary-diagnosis",
            DropReason::DuplicateSeq1 => "duplicate-seq1",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestionSummary {
    pub source_files: Vec<String>,
    pub rows_read: u64,
    pub rows_kept: u64,
    pub rows_dropped: BTreeMap<DropReason, u64>,
    /// Samples or windows handed to the next stage.
    pub emitted: u64,
    /// Admissions skipped for lacking a primary diagnosis.
    pub admissions_skipped: u64,
}

impl IngestionSummary {
    fn drop_row(&mut self, reason: DropReason) {
        *self.rows_dropped.entry(reason).or_insert(0) += 1;
    }

    pub fn dropped(&self, reason: DropReason) -> u64 {
        self.rows_dropped.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_dropped(&self) -> u64 {
        self.rows_dropped.values().sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.rows_read == self.rows_kept + self.total_dropped()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Hand,
    Chest,
    Ankle,
}

impl Placement {
    /// First column of this IMU's 17-column block.
    fn first_column(self) -> usize {
        match self {
            Placement::Hand => 3,
            Placement::Chest => 20,
            Placement::Ankle => 37,
        }
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hand" => Ok(Placement::Hand),
            "chest" => Ok(Placement::Chest),
            "ankle" => Ok(Placement::Ankle),
            other => Err(Error::invalid(format!(
                "unknown placement `{other}` (hand, chest or ankle)"
            ))),
        }
    }
}

pub const PAMAP2_COLUMNS: usize = 54;
pub const PAMAP2_RATE_HZ: f64 = 100.0;
pub const PAMAP2_SUBJECTS: std::ops::RangeInclusive<u32> = 101..=109;

// Offsets inside one IMU block: temperature, acc 16g (3), acc 6g (3), gyro (3), ...
const ACC16_OFFSET: usize = 1;
const GYRO_OFFSET: usize = 7;

fn subject_of(path: &Path) -> Option<u32> {
    let stem = path.file_stem()?.to_str()?;
    stem.strip_prefix("subject")?.parse().ok()
}

/// Read the chosen IMU of the requested subjects into one 100 Hz stream.
///
/// Files are matched to subjects by their `subject<id>.dat` names and read
/// in the order of `subjects`. Transient rows (activity 0) are dropped.
/// Missing sensor values are forward-filled within a contiguous activity
/// segment; rows that remain incomplete are dropped. Every file starts a
/// new segment, as does every label change or dropped row.
pub fn ingest_pamap2(
    paths: &[PathBuf],
    subjects: &[u32],
    placement: Placement,
) -> Result<(LabeledStream, IngestionSummary)> {
    let mut by_subject: HashMap<u32, &PathBuf> = HashMap::new();
    for p in paths {
        if let Some(s) = subject_of(p) {
            by_subject.entry(s).or_insert(p);
        }
    }
    let mut summary = IngestionSummary::default();
    let mut samples = Vec::new();
    let mut segment = 0u32;
    for &s in subjects {
        if !PAMAP2_SUBJECTS.contains(&s) {
            return Err(Error::invalid(format!("unknown PAMAP2 subject {s}")));
        }
        let path = by_subject
            .get(&s)
            .ok_or_else(|| Error::invalid(format!("no subject{s}.dat among the input files")))?;
        summary.source_files.push(path.display().to_string());
        read_pamap2_file(path, s, placement, &mut samples, &mut summary, &mut segment)?;
    }
    summary.emitted = samples.len() as u64;
    Ok((
        LabeledStream {
            sample_rate_hz: PAMAP2_RATE_HZ,
            samples,
        },
        summary,
    ))
}

fn read_pamap2_file(
    path: &Path,
    subject: u32,
    placement: Placement,
    out: &mut Vec<SensorSample>,
    summary: &mut IngestionSummary,
    segment: &mut u32,
) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = placement.first_column();
    let acc_cols = [
        base + ACC16_OFFSET,
        base + ACC16_OFFSET + 1,
        base + ACC16_OFFSET + 2,
    ];
    let gyro_cols = [base + GYRO_OFFSET, base + GYRO_OFFSET + 1, base + GYRO_OFFSET + 2];
    let mut builder = SegmentedStream::new(out, summary, segment, subject);

    let mut fields: Vec<f64> = Vec::with_capacity(PAMAP2_COLUMNS);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        fields.clear();
        for tok in line.split_ascii_whitespace() {
            let v = if tok.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                tok.parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("non-numeric token `{tok}`")))?
            };
            fields.push(v);
        }
        if fields.len() != PAMAP2_COLUMNS {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {PAMAP2_COLUMNS} columns, found {}", fields.len()),
            ));
        }
        let activity = fields[1];
        let label = if activity.is_nan() {
            Err(DropReason::MissingLabel)
        } else if activity == 0.0 {
            Err(DropReason::TransientActivity)
        } else {
            Ok(format!("{}", activity as i64))
        };
        builder.push(
            fields[0],
            label,
            acc_cols.map(|c| fields[c]),
            gyro_cols.map(|c| fields[c]),
        );
    }
    Ok(())
}

/// Accumulates rows into labeled segments with per-segment forward fill.
struct SegmentedStream<'a> {
    out: &'a mut Vec<SensorSample>,
    summary: &'a mut IngestionSummary,
    segment: &'a mut u32,
    source: u32,
    /// Label and last complete values of the open segment.
    last: Option<(String, [f64; 3], [f64; 3])>,
    open: bool,
}

impl<'a> SegmentedStream<'a> {
    fn new(
        out: &'a mut Vec<SensorSample>,
        summary: &'a mut IngestionSummary,
        segment: &'a mut u32,
        source: u32,
    ) -> Self {
        *segment += 1;
        Self {
            out,
            summary,
            segment,
            source,
            last: None,
            open: false,
        }
    }

    fn close(&mut self) {
        if self.open {
            *self.segment += 1;
            self.open = false;
        }
        self.last = None;
    }

    fn push(
        &mut self,
        timestamp: f64,
        label: std::result::Result<String, DropReason>,
        mut acc: [f64; 3],
        mut gyro: [f64; 3],
    ) {
        self.summary.rows_read += 1;
        let label = match label {
            Ok(l) => l,
            Err(reason) => {
                self.summary.drop_row(reason);
                self.close();
                return;
            }
        };
        if self.last.as_ref().is_some_and(|(l, _, _)| *l != label) {
            self.close();
        }
        if let Some((_, pa, pg)) = &self.last {
            fill(&mut acc, pa);
            fill(&mut gyro, pg);
        }
        if acc.iter().chain(&gyro).any(|v| v.is_nan()) {
            self.summary.drop_row(DropReason::NanAfterImpute);
            self.close();
            return;
        }
        self.summary.rows_kept += 1;
        self.open = true;
        self.last = Some((label.clone(), acc, gyro));
        self.out.push(SensorSample {
            timestamp,
            label,
            segment: *self.segment,
            source: self.source,
            acc,
            gyro,
        });
    }
}

fn fill(v: &mut [f64; 3], prev: &[f64; 3]) {
    for (x, p) in v.iter_mut().zip(prev) {
        if x.is_nan() {
            *x = *p;
        }
    }
}

/// Column names for a generic IMU CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuColumns {
    pub label: String,
    pub acc: [String; 3],
    pub gyro: [String; 3],
    pub timestamp: Option<String>,
    /// Optional recording id; a change of value starts a new segment.
    pub group: Option<String>,
}

impl Default for ImuColumns {
    fn default() -> Self {
        Self {
            label: "activity".into(),
            acc: ["acc_x".into(), "acc_y".into(), "acc_z".into()],
            gyro: ["gyro_x".into(), "gyro_y".into(), "gyro_z".into()],
            timestamp: None,
            group: None,
        }
    }
}

/// A time-ordered IMU CSV with one labeled sample per row at a constant
/// `sample_rate_hz`. Empty or `NaN` sensor cells are forward-filled like
/// PAMAP2 rows; rows with an empty label are dropped.
pub fn ingest_imu_csv(
    path: &Path,
    columns: &ImuColumns,
    sample_rate_hz: f64,
) -> Result<(LabeledStream, IngestionSummary)> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| column_index(&headers, path, &[name]);
    let label_col = col(&columns.label)?;
    let acc_cols = [
        col(&columns.acc[0])?,
        col(&columns.acc[1])?,
        col(&columns.acc[2])?,
    ];
    let gyro_cols = [
        col(&columns.gyro[0])?,
        col(&columns.gyro[1])?,
        col(&columns.gyro[2])?,
    ];
    let ts_col = columns.timestamp.as_deref().map(col).transpose()?;
    let group_col = columns.group.as_deref().map(col).transpose()?;

    let mut summary = IngestionSummary {
        source_files: vec![path.display().to_string()],
        ..Default::default()
    };
    let mut samples = Vec::new();
    let mut segment = 0u32;
    let mut builder = SegmentedStream::new(&mut samples, &mut summary, &mut segment, 0);
    let mut group: Option<String> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let num = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("").trim();
            if raw.is_empty() || raw.eq_ignore_ascii_case("nan") {
                return Ok(f64::NAN);
            }
            raw.parse()
                .map_err(|_| Error::parse(path, line, format!("non-numeric value `{raw}`")))
        };
        if let Some(g) = group_col {
            let g = record.get(g).unwrap_or("").trim();
            if group.as_deref() != Some(g) {
                builder.close();
                group = Some(g.to_owned());
            }
        }
        let timestamp = match ts_col {
            Some(c) => num(c)?,
            None => row as f64 / sample_rate_hz,
        };
        let label = record.get(label_col).unwrap_or("").trim();
        let label = if label.is_empty() {
            Err(DropReason::MissingLabel)
        } else {
            Ok(label.to_owned())
        };
        let acc = [num(acc_cols[0])?, num(acc_cols[1])?, num(acc_cols[2])?];
        let gyro = [num(gyro_cols[0])?, num(gyro_cols[1])?, num(gyro_cols[2])?];
        builder.push(timestamp, label, acc, gyro);
    }
    drop(builder);
    summary.emitted = samples.len() as u64;
    Ok((
        LabeledStream {
            sample_rate_hz,
            samples,
        },
        summary,
    ))
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e.to_string())
}

fn column_index(headers: &csv::StringRecord, path: &Path, names: &[&str]) -> Result<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim() == *n))
        .ok_or_else(|| Error::parse(path, 1, format!("missing column `{}`", names[0])))
}

/// One key per row from the named columns, in the given order. Rows with an
/// empty key cell are dropped.
pub fn ingest_samples_csv<S: AsRef<str>>(
    path: &Path,
    key_columns: &[S],
) -> Result<(Vec<StateKey>, IngestionSummary)> {
    if key_columns.is_empty() {
        return Err(Error::invalid("at least one key column is required"));
    }
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = key_columns
        .iter()
        .map(|c| column_index(&headers, path, &[c.as_ref()]))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = IngestionSummary {
        source_files: vec![path.display().to_string()],
        ..Default::default()
    };
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        summary.rows_read += 1;
        let values: Vec<&str> = cols.iter().map(|&c| record.get(c).unwrap_or("").trim()).collect();
        if values.iter().any(|v| v.is_empty()) {
            summary.drop_row(DropReason::MissingLabel);
            continue;
        }
        summary.rows_kept += 1;
        samples.push(StateKey::new(key_columns.iter().map(|c| c.as_ref()).zip(values))?);
    }
    summary.emitted = samples.len() as u64;
    Ok((samples, summary))
}

/// Admission-level ICD prefix states from a diagnoses table with
/// admission id, sequence number and ICD code columns. Admissions are
/// emitted in order of first appearance.
pub fn ingest_diagnoses(path: &Path) -> Result<(Vec<StateKey>, IngestionSummary)> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let id_col = column_index(&headers, path, &["hadm_id", "admission_id", "admission-id"])?;
    let seq_col = column_index(&headers, path, &["seq_num", "seq-num"])?;
    let code_col = column_index(&headers, path, &["icd_code", "icd-code"])?;

    let mut summary = IngestionSummary {
        source_files: vec![path.display().to_string()],
        ..Default::default()
    };
    let mut order: Vec<String> = Vec::new();
    let mut admissions: HashMap<String, Admission> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        summary.rows_read += 1;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record.get(id_col).unwrap_or("").trim();
        let code = record.get(code_col).unwrap_or("").trim();
        if id.is_empty() || code.is_empty() {
            summary.drop_row(DropReason::MissingLabel);
            continue;
        }
        let seq_raw = record.get(seq_col).unwrap_or("").trim();
        let seq: u32 = seq_raw
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid sequence number `{seq_raw}`")))?;
        let adm = admissions.entry(id.to_owned()).or_insert_with(|| {
            order.push(id.to_owned());
            Admission {
                id: id.to_owned(),
                diagnoses: Vec::new(),
            }
        });
        adm.diagnoses.push((seq, code.to_owned()));
    }

    let mut samples = Vec::with_capacity(order.len());
    for id in &order {
        let adm = &admissions[id];
        let rows = adm.diagnoses.len() as u64;
        match icd_prefix_state(adm) {
            Some(key) => {
                let primaries = adm.diagnoses.iter().filter(|(s, _)| *s == 1).count() as u64;
                summary.rows_kept += 1;
                for _ in 1..primaries {
                    summary.drop_row(DropReason::DuplicateSeq1);
                }
                for _ in 0..rows - primaries {
                    summary.drop_row(DropReason::NonPrimaryDiagnosis);
                }
                samples.push(key);
            }
            None => {
                warn!("admission {id} has no sequence-1 diagnosis; skipped");
                summary.admissions_skipped += 1;
                for _ in 0..rows {
                    summary.drop_row(DropReason::NoSeq1Diagnosis);
                }
            }
        }
    }
    summary.emitted = samples.len() as u64;
    Ok((samples, summary))
}
