//! Core data model: Likert self-reports, GPS points, CSV ingestion, and
//! day bucketing.
//!
//! CSV schemas (UTF-8, comma-separated, `\n` line endings, header required):
//!
//! - reports: `participant_id,timestamp,kind,value` with kind in
//!   {mood, energy} and value an integer Likert level in [1, 9]
//! - GPS: `participant_id,timestamp,lat,lon` in decimal degrees
//!
//! Loading is single-threaded per file; the assembled [`CohortDataset`] is
//! immutable afterward and safe for concurrent reads.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Lowest valid Likert level.
pub const LIKERT_MIN: u8 = 1;
/// Highest valid Likert level (nine-point scale).
pub const LIKERT_MAX: u8 = 9;
/// Length of a day bucket in seconds.
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Errors from loading, validating, or assembling the data model.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {msg}")]
    MalformedRow { path: String, line: u64, msg: String },
    #[error("{path}:{line}: value {value} out of range [{LIKERT_MIN}, {LIKERT_MAX}]")]
    ValueOutOfRange { path: String, line: u64, value: i64 },
    #[error("{path}:{line}: unknown kind token `{token}`")]
    UnknownKind { path: String, line: u64, token: String },
    #[error("{path}:{line}: lat {lat} out of range [-90, 90]")]
    LatOutOfRange { path: String, line: u64, lat: f64 },
    #[error("{path}:{line}: lon {lon} out of range [-180, 180]")]
    LonOutOfRange { path: String, line: u64, lon: f64 },
    #[error("both report and GPS inputs are empty")]
    EmptyInput,
    #[error("duplicate participant id `{0}`")]
    DuplicateParticipant(String),
}

/// Which self-report item a Likert value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Mood,
    Energy,
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportKind::Mood => write!(f, "mood"),
            ReportKind::Energy => write!(f, "energy"),
        }
    }
}

impl FromStr for ReportKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mood" => Ok(ReportKind::Mood),
            "energy" => Ok(ReportKind::Energy),
            _ => Err(()),
        }
    }
}

/// One timestamped self-report on the nine-point Likert scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertReport {
    pub participant_id: String,
    /// UTC seconds since epoch, non-negative.
    pub timestamp: i64,
    pub kind: ReportKind,
    /// Likert level in [1, 9].
    pub value: u8,
}

/// One timestamped latitude/longitude sample for a participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub participant_id: String,
    /// UTC seconds since epoch.
    pub timestamp: i64,
    /// Degrees in [-90, 90].
    pub lat: f64,
    /// Degrees in [-180, 180].
    pub lon: f64,
}

/// All streams belonging to a single participant, each sorted by timestamp.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticipantRecord {
    pub id: String,
    pub reports: Vec<LikertReport>,
    pub gps: Vec<GpsPoint>,
}

impl ParticipantRecord {
    /// Iterator over this participant's Likert values of one kind, in time order.
    pub fn values_of_kind(&self, kind: ReportKind) -> impl Iterator<Item = u8> + '_ {
        self.reports
            .iter()
            .filter(move |r| r.kind == kind)
            .map(|r| r.value)
    }
}

/// A validated cohort: unique participants plus the day-boundary offset
/// shared by every day-bucketed computation downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortDataset {
    participants: Vec<ParticipantRecord>,
    pub day_offset_seconds: i64,
}

impl CohortDataset {
    /// Build a dataset from per-participant records, validating that ids are
    /// unique and the cohort is non-empty. Records are sorted by id and each
    /// stream by timestamp.
    pub fn new(
        mut participants: Vec<ParticipantRecord>,
        day_offset_seconds: i64,
    ) -> Result<Self, DataError> {
        if participants.is_empty() {
            return Err(DataError::EmptyInput);
        }
        participants.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in participants.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(DataError::DuplicateParticipant(pair[0].id.clone()));
            }
        }
        for rec in &mut participants {
            rec.reports.sort_by_key(|r| r.timestamp);
            rec.gps.sort_by_key(|g| g.timestamp);
        }
        Ok(CohortDataset {
            participants,
            day_offset_seconds,
        })
    }

    pub fn participants(&self) -> &[ParticipantRecord] {
        &self.participants
    }

    pub fn participant(&self, id: &str) -> Option<&ParticipantRecord> {
        self.participants
            .binary_search_by(|rec| rec.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.participants[i])
    }

    pub fn participant_ids(&self) -> Vec<String> {
        self.participants.iter().map(|p| p.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }
}

/// Day index of a UTC timestamp under a fixed day-boundary offset.
///
/// `floor((timestamp - day_offset_seconds) / 86400)`; monotone
/// non-decreasing in `timestamp` for a fixed offset.
pub fn local_day(timestamp: i64, day_offset_seconds: i64) -> i64 {
    (timestamp - day_offset_seconds).div_euclid(SECONDS_PER_DAY)
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Load and validate a reports CSV, optionally keeping only one kind.
///
/// Rows are returned sorted by `(participant_id, timestamp)`; any row that
/// fails validation aborts the load with the offending line number.
pub fn load_reports(
    path: &Path,
    kind_filter: Option<ReportKind>,
) -> Result<Vec<LikertReport>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    check_header(path, &mut reader, &["participant_id", "timestamp", "kind", "value"])?;

    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_record_error(path, e))?;
        let line = record_line(&record);
        if record.len() != 4 {
            return Err(DataError::MalformedRow {
                path: path_str(path),
                line,
                msg: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let participant_id = record[0].to_string();
        let timestamp: i64 = parse_field(path, line, &record[1], "timestamp")?;
        if timestamp < 0 {
            return Err(DataError::MalformedRow {
                path: path_str(path),
                line,
                msg: format!("negative timestamp {timestamp}"),
            });
        }
        let kind = ReportKind::from_str(&record[2]).map_err(|_| DataError::UnknownKind {
            path: path_str(path),
            line,
            token: record[2].to_string(),
        })?;
        let value: i64 = parse_field(path, line, &record[3], "value")?;
        if !(LIKERT_MIN as i64..=LIKERT_MAX as i64).contains(&value) {
            return Err(DataError::ValueOutOfRange {
                path: path_str(path),
                line,
                value,
            });
        }
        if kind_filter.is_none_or(|k| k == kind) {
            out.push(LikertReport {
                participant_id,
                timestamp,
                kind,
                value: value as u8,
            });
        }
    }
    out.sort_by(|a, b| {
        (&a.participant_id, a.timestamp).cmp(&(&b.participant_id, b.timestamp))
    });
    Ok(out)
}

/// Load and validate a GPS CSV, sorted by `(participant_id, timestamp)`.
pub fn load_gps(path: &Path) -> Result<Vec<GpsPoint>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    check_header(path, &mut reader, &["participant_id", "timestamp", "lat", "lon"])?;

    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_record_error(path, e))?;
        let line = record_line(&record);
        if record.len() != 4 {
            return Err(DataError::MalformedRow {
                path: path_str(path),
                line,
                msg: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let participant_id = record[0].to_string();
        let timestamp: i64 = parse_field(path, line, &record[1], "timestamp")?;
        let lat: f64 = parse_field(path, line, &record[2], "lat")?;
        let lon: f64 = parse_field(path, line, &record[3], "lon")?;
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(DataError::LatOutOfRange {
                path: path_str(path),
                line,
                lat,
            });
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(DataError::LonOutOfRange {
                path: path_str(path),
                line,
                lon,
            });
        }
        out.push(GpsPoint {
            participant_id,
            timestamp,
            lat,
            lon,
        });
    }
    out.sort_by(|a, b| {
        (&a.participant_id, a.timestamp).cmp(&(&b.participant_id, b.timestamp))
    });
    Ok(out)
}

fn csv_open_error(path: &Path, err: csv::Error) -> DataError {
    match err.into_kind() {
        csv::ErrorKind::Io(source) => DataError::Io {
            path: path_str(path),
            source,
        },
        other => DataError::MalformedRow {
            path: path_str(path),
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}

fn csv_record_error(path: &Path, err: csv::Error) -> DataError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => DataError::Io {
            path: path_str(path),
            source,
        },
        other => DataError::MalformedRow {
            path: path_str(path),
            line,
            msg: format!("{other:?}"),
        },
    }
}

fn check_header(
    path: &Path,
    reader: &mut csv::Reader<std::fs::File>,
    expected: &[&str],
) -> Result<(), DataError> {
    let headers = reader.headers().map_err(|e| csv_record_error(path, e))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(DataError::MalformedRow {
            path: path_str(path),
            line: 1,
            msg: format!("expected header {expected:?}, got {got:?}"),
        });
    }
    Ok(())
}

fn parse_field<T: FromStr>(
    path: &Path,
    line: u64,
    raw: &str,
    field: &str,
) -> Result<T, DataError> {
    raw.trim().parse().map_err(|_| DataError::MalformedRow {
        path: path_str(path),
        line,
        msg: format!("cannot parse {field} from `{raw}`"),
    })
}

/// Group validated report and GPS streams into a cohort.
///
/// Participants appearing in either stream are kept; ids are unique by
/// construction. Errors only when both inputs are empty.
pub fn assemble_dataset(
    reports: Vec<LikertReport>,
    gps: Vec<GpsPoint>,
    day_offset_seconds: i64,
) -> Result<CohortDataset, DataError> {
    if reports.is_empty() && gps.is_empty() {
        return Err(DataError::EmptyInput);
    }
    let mut by_id: BTreeMap<String, ParticipantRecord> = BTreeMap::new();
    for report in reports {
        let rec = by_id
            .entry(report.participant_id.clone())
            .or_insert_with(|| ParticipantRecord {
                id: report.participant_id.clone(),
                ..Default::default()
            });
        rec.reports.push(report);
    }
    for point in gps {
        let rec = by_id
            .entry(point.participant_id.clone())
            .or_insert_with(|| ParticipantRecord {
                id: point.participant_id.clone(),
                ..Default::default()
            });
        rec.gps.push(point);
    }
    CohortDataset::new(by_id.into_values().collect(), day_offset_seconds)
}

/// Write reports in the canonical CSV schema.
pub fn write_reports_csv(path: &Path, reports: &[LikertReport]) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
    writer
        .write_record(["participant_id", "timestamp", "kind", "value"])
        .map_err(|e| csv_record_error(path, e))?;
    for r in reports {
        writer
            .write_record([
                r.participant_id.as_str(),
                &r.timestamp.to_string(),
                &r.kind.to_string(),
                &r.value.to_string(),
            ])
            .map_err(|e| csv_record_error(path, e))?;
    }
    writer.flush().map_err(|e| DataError::Io {
        path: path_str(path),
        source: e,
    })?;
    Ok(())
}

/// Write GPS points in the canonical CSV schema.
pub fn write_gps_csv(path: &Path, points: &[GpsPoint]) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
    writer
        .write_record(["participant_id", "timestamp", "lat", "lon"])
        .map_err(|e| csv_record_error(path, e))?;
    for p in points {
        writer
            .write_record([
                p.participant_id.as_str(),
                &p.timestamp.to_string(),
                &p.lat.to_string(),
                &p.lon.to_string(),
            ])
            .map_err(|e| csv_record_error(path, e))?;
    }
    writer.flush().map_err(|e| DataError::Io {
        path: path_str(path),
        source: e,
    })?;
    Ok(())
}
