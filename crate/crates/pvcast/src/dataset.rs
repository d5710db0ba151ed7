//! PV power CSV ingestion, daylight filtering, windowing and splitting.
//!
//! Daylight samples of consecutive days are concatenated into one sequence
//! before windowing, so a window may span the evening→morning join. With the
//! default 60-sample window and 60 daylight samples per day, per-day
//! windowing would yield no windows at all; concatenation is what makes
//! "previous 60 samples predict the next" well defined.
//!
//! Normalization is min-max to [0, 1] with bounds taken from the training
//! portion only. An all-equal series degenerates to scale 1.

use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDateTime, NaiveTime, Timelike};
use thiserror::Error;

pub const DEFAULT_WINDOW_LENGTH: usize = 60;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_DAYLIGHT_START: &str = "05:00";
pub const DEFAULT_DAYLIGHT_END: &str = "20:00";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("structural: {0}")]
    Structural(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("no daylight samples in the requested window")]
    NoDaylight,
    #[error("series too short: {have} samples, need more than {need}")]
    TooShort { have: usize, need: usize },
    #[error("bad cache file: {0}")]
    BadCache(String),
}

/// Raw power series at a fixed time step.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub timestamps: Vec<NaiveDateTime>,
    /// Power in MW, one per timestamp, finite and ≥ 0.
    pub values: Vec<f64>,
    /// Rated capacity (y_rated) in MW.
    pub capacity_mw: f64,
    /// Step between consecutive samples of the unfiltered series.
    pub step: Duration,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Validates lengths, ordering, finiteness and sign; used by every
    /// constructor path.
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        values: Vec<f64>,
        capacity_mw: f64,
        step: Duration,
    ) -> Result<Self, DatasetError> {
        if timestamps.len() != values.len() {
            return Err(DatasetError::Structural(format!(
                "{} timestamps vs {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if capacity_mw <= 0.0 || !capacity_mw.is_finite() {
            return Err(DatasetError::Validation(format!(
                "capacity must be positive, got {capacity_mw}"
            )));
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(DatasetError::Structural(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1]
                )));
            }
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(DatasetError::Validation(format!(
                    "power value {v} at sample {i} (must be finite and ≥ 0)"
                )));
            }
        }
        Ok(RawSeries {
            timestamps,
            values,
            capacity_mw,
            step,
        })
    }
}

fn parse_timestamp(s: &str, line: usize) -> Result<NaiveDateTime, DatasetError> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .map_err(|e| DatasetError::Parse {
            line,
            message: format!("bad timestamp {s:?}: {e}"),
        })
}

/// Loads a `timestamp,power_mw` CSV, sorts by timestamp, and validates a
/// strictly increasing, constant-step series of finite non-negative powers.
pub fn load_csv(path: &Path, capacity_mw: f64) -> Result<RawSeries, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<(NaiveDateTime, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(DatasetError::Parse {
                line,
                message: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let ts = parse_timestamp(&record[0], line)?;
        let power: f64 = record[1].parse().map_err(|e| DatasetError::Parse {
            line,
            message: format!("bad power {:?}: {e}", &record[1]),
        })?;
        rows.push((ts, power));
    }
    if rows.len() < 2 {
        return Err(DatasetError::TooShort {
            have: rows.len(),
            need: 2,
        });
    }
    rows.sort_by_key(|(ts, _)| *ts);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(DatasetError::Structural(format!(
                "duplicate timestamp {}",
                pair[0].0
            )));
        }
    }
    let step = rows[1].0 - rows[0].0;
    for pair in rows.windows(2) {
        if pair[1].0 - pair[0].0 != step {
            return Err(DatasetError::Structural(format!(
                "non-constant step: {} → {} (expected {} min)",
                pair[0].0,
                pair[1].0,
                step.num_minutes()
            )));
        }
    }
    let (timestamps, values): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    RawSeries::new(timestamps, values, capacity_mw, step)
}

/// Retains samples with time-of-day in [start, end). Idempotent.
pub fn filter_daylight(
    series: &RawSeries,
    start: NaiveTime,
    end: NaiveTime,
) -> Result<RawSeries, DatasetError> {
    if start >= end {
        return Err(DatasetError::Validation(format!(
            "daylight start {start} must be before end {end}"
        )));
    }
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (ts, &v) in series.timestamps.iter().zip(&series.values) {
        let tod = ts.time();
        if tod >= start && tod < end {
            timestamps.push(*ts);
            values.push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(DatasetError::NoDaylight);
    }
    Ok(RawSeries {
        timestamps,
        values,
        capacity_mw: series.capacity_mw,
        step: series.step,
    })
}

/// Affine normalization metadata: x_norm = (x − offset) / scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Norm {
    pub scale: f64,
    pub offset: f64,
}

impl Norm {
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.scale + self.offset
    }
}

/// Normalized, windowed, chronologically split supervised samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    /// Concatenated daylight samples, normalized.
    values: Vec<f64>,
    timestamps: Vec<NaiveDateTime>,
    pub window_length: usize,
    /// Count of training windows; windows `0..split_index` train, the rest test.
    pub split_index: usize,
    pub norm: Norm,
    pub capacity_mw: f64,
}

/// Windows the concatenated daylight sequence and splits chronologically.
/// Window `i` is `values[i..i+L]` with target `values[i+L]`; the first
/// `floor(train_fraction · n)` windows are the training set.
pub fn prepare(
    series: &RawSeries,
    window_length: usize,
    train_fraction: f64,
) -> Result<PreparedDataset, DatasetError> {
    if window_length == 0 {
        return Err(DatasetError::Validation("window_length must be ≥ 1".into()));
    }
    if !(0.0 < train_fraction && train_fraction < 1.0) {
        return Err(DatasetError::Validation(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if series.len() <= window_length {
        return Err(DatasetError::TooShort {
            have: series.len(),
            need: window_length,
        });
    }
    let n_windows = series.len() - window_length;
    let split_index = (train_fraction * n_windows as f64).floor() as usize;
    if split_index == 0 || split_index == n_windows {
        return Err(DatasetError::TooShort {
            have: series.len(),
            need: window_length + 2,
        });
    }
    // Normalization bounds from values touched by training windows only.
    let train_extent = window_length + split_index;
    let train_vals = &series.values[..train_extent];
    let min = train_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = train_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if max > min { max - min } else { 1.0 };
    let norm = Norm { scale, offset: min };
    let values = series.values.iter().map(|&v| norm.normalize(v)).collect();
    Ok(PreparedDataset {
        values,
        timestamps: series.timestamps.clone(),
        window_length,
        split_index,
        norm,
        capacity_mw: series.capacity_mw,
    })
}

impl PreparedDataset {
    pub fn num_windows(&self) -> usize {
        self.values.len() - self.window_length
    }

    pub fn num_test_windows(&self) -> usize {
        self.num_windows() - self.split_index
    }

    /// Normalized input window `i`.
    pub fn window(&self, i: usize) -> &[f64] {
        &self.values[i..i + self.window_length]
    }

    /// Normalized target of window `i` at horizon `k` (k ≥ 1).
    pub fn target(&self, i: usize, horizon: usize) -> f64 {
        self.values[i + self.window_length + horizon - 1]
    }

    /// Timestamp of the horizon-k target of window `i`.
    pub fn target_time(&self, i: usize, horizon: usize) -> NaiveDateTime {
        self.timestamps[i + self.window_length + horizon - 1]
    }

    /// Largest window index with a valid horizon-`max_horizon` target.
    pub fn last_window_for_horizon(&self, max_horizon: usize) -> usize {
        self.num_windows() - (max_horizon - 1)
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        self.norm.denormalize(v)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        self.norm.normalize(x)
    }

    pub fn normalized_values(&self) -> &[f64] {
        &self.values
    }

    /// Writes the versioned dataset cache: filtered daylight samples in MW
    /// plus the windowing parameters needed to rebuild deterministically.
    pub fn save_cache(
        series: &RawSeries,
        window_length: usize,
        train_fraction: f64,
        path: &Path,
    ) -> Result<(), DatasetError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "pvcast-dataset-cache,1")?;
        writeln!(
            f,
            "capacity_mw={},step_minutes={},window_length={window_length},train_fraction={train_fraction}",
            series.capacity_mw,
            series.step.num_minutes(),
        )?;
        writeln!(f, "timestamp,power_mw")?;
        for (ts, v) in series.timestamps.iter().zip(&series.values) {
            writeln!(f, "{},{}", ts.format("%Y-%m-%dT%H:%M:%S"), v)?;
        }
        Ok(())
    }

    /// Reads a cache written by [`PreparedDataset::save_cache`] and rebuilds
    /// the dataset via [`prepare`].
    pub fn load_cache(path: &Path) -> Result<PreparedDataset, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let version = lines
            .next()
            .ok_or_else(|| DatasetError::BadCache("empty file".into()))?;
        if version.trim() != "pvcast-dataset-cache,1" {
            return Err(DatasetError::BadCache(format!(
                "unknown header {version:?}"
            )));
        }
        let meta = lines
            .next()
            .ok_or_else(|| DatasetError::BadCache("missing metadata line".into()))?;
        let mut capacity = None;
        let mut step_minutes = None;
        let mut window_length = None;
        let mut train_fraction = None;
        for kv in meta.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| DatasetError::BadCache(format!("bad metadata {kv:?}")))?;
            match k {
                "capacity_mw" => capacity = v.parse().ok(),
                "step_minutes" => step_minutes = v.parse().ok(),
                "window_length" => window_length = v.parse().ok(),
                "train_fraction" => train_fraction = v.parse().ok(),
                _ => {}
            }
        }
        let (capacity, step_minutes, window_length, train_fraction): (f64, i64, usize, f64) =
            match (capacity, step_minutes, window_length, train_fraction) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => return Err(DatasetError::BadCache("incomplete metadata".into())),
            };
        let header = lines.next().unwrap_or("");
        if header.trim() != "timestamp,power_mw" {
            return Err(DatasetError::BadCache(format!(
                "bad column header {header:?}"
            )));
        }
        let mut timestamps = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (ts, v) = line
                .split_once(',')
                .ok_or_else(|| DatasetError::BadCache(format!("bad row {line:?}")))?;
            timestamps.push(parse_timestamp(ts, i + 4)?);
            values.push(v.trim().parse().map_err(|e| DatasetError::Parse {
                line: i + 4,
                message: format!("bad power: {e}"),
            })?);
        }
        let series = RawSeries::new(
            timestamps,
            values,
            capacity,
            Duration::minutes(step_minutes),
        )?;
        prepare(&series, window_length, train_fraction)
    }
}

pub fn parse_time_of_day(s: &str) -> Result<NaiveTime, DatasetError> {
    NaiveTime::parse_from_str(s, "%H:%M").map_err(|e| DatasetError::Validation(format!(
        "bad time of day {s:?}: {e}"
    )))
}

/// True if the timestamp's time-of-day lies in [start, end).
pub fn in_daylight(ts: &NaiveDateTime, start: NaiveTime, end: NaiveTime) -> bool {
    let tod = NaiveTime::from_hms_opt(ts.hour(), ts.minute(), ts.second()).unwrap();
    tod >= start && tod < end
}
