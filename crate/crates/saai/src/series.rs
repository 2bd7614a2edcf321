//! Regular, equidistant multivariate time series.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::Sequence;

/// A regular multivariate time series with implicit timestamps
/// `t_n = start_time + n * step` (minutes).
///
/// Values are stored column-major: one `Vec<f64>` per dimension, all of the
/// same length `N >= 2`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    start_time: i64,
    step: i64,
    columns: Vec<Vec<f64>>,
}

impl MultivariateSeries {
    /// Builds a series from per-dimension columns, validating all invariants.
    pub fn new(start_time: i64, step: i64, columns: Vec<Vec<f64>>) -> Result<Self> {
        if step <= 0 {
            return Err(Error::InvalidSeries(format!("step must be > 0, got {step}")));
        }
        if columns.is_empty() {
            return Err(Error::InvalidSeries("dimension count is 0".into()));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::InvalidSeries(format!("length < 2 (got {n})")));
        }
        for (d, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidSeries(format!(
                    "column {d} has length {} but column 0 has length {n}",
                    col.len()
                )));
            }
            for (row, v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidSeries(format!(
                        "non-finite value at row {row}, column {d}"
                    )));
                }
            }
        }
        Ok(Self { start_time, step, columns })
    }

    /// Builds a series from row-major data (one row per timestamp).
    pub fn from_rows(start_time: i64, step: i64, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSeries("length < 2 (got 0)".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidSeries("dimension count is 0".into()));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidSeries(format!(
                    "row {i} has {} columns, expected {d}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                columns[j].push(*v);
            }
        }
        Self::new(start_time, step, columns)
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    /// Number of timestamps N.
    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false // N >= 2 by construction
    }

    /// Number of dimensions D.
    pub fn n_dims(&self) -> usize {
        self.columns.len()
    }

    pub fn timestamp(&self, n: usize) -> i64 {
        self.start_time + n as i64 * self.step
    }

    pub fn value(&self, n: usize, dim: usize) -> f64 {
        self.columns[dim][n]
    }

    pub fn column(&self, dim: usize) -> &[f64] {
        &self.columns[dim]
    }

    /// Extracts the value view of the subsequence `[a, b]` (inclusive) in one
    /// dimension.
    pub fn subsequence(&self, dim: usize, a: usize, b: usize) -> Result<Sequence> {
        if dim >= self.n_dims() {
            return Err(Error::InvalidInterval(format!(
                "dim {dim} out of range for series with {} dimensions",
                self.n_dims()
            )));
        }
        if a >= b || b >= self.len() {
            return Err(Error::InvalidInterval(format!(
                "bounds [{a}, {b}] invalid for series of length {}",
                self.len()
            )));
        }
        Sequence::new(self.columns[dim][a..=b].to_vec())
    }

    /// Writes the series as CSV with header `timestamp,dim_0,...,dim_{D-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string()];
        header.extend((0..self.n_dims()).map(|d| format!("dim_{d}")));
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_dims() + 1);
        for n in 0..self.len() {
            record.clear();
            record.push(self.timestamp(n).to_string());
            for d in 0..self.n_dims() {
                record.push(format_float(self.columns[d][n]));
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a series from CSV. The step is inferred from the first two
    /// timestamps and all further timestamps must stay equidistant.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.is_empty() || &headers[0] != "timestamp" {
            return Err(Error::Parse("expected header starting with 'timestamp'".into()));
        }
        let d = headers.len() - 1;
        if d == 0 {
            return Err(Error::Parse("no dimension columns in header".into()));
        }
        let mut timestamps: Vec<i64> = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); d];
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(Error::Parse(format!(
                    "row {row} has {} fields, expected {}",
                    rec.len(),
                    d + 1
                )));
            }
            let t: i64 = rec[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad timestamp at row {row}: {}", &rec[0])))?;
            timestamps.push(t);
            for j in 0..d {
                let v: f64 = rec[j + 1].parse().map_err(|_| {
                    Error::Parse(format!("bad value at row {row}, column {j}: {}", &rec[j + 1]))
                })?;
                columns[j].push(v);
            }
        }
        if timestamps.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "length < 2 (got {})",
                timestamps.len()
            )));
        }
        let step = timestamps[1] - timestamps[0];
        if step <= 0 {
            return Err(Error::InvalidSeries(format!("step must be > 0, got {step}")));
        }
        for (n, pair) in timestamps.windows(2).enumerate() {
            if pair[1] - pair[0] != step {
                return Err(Error::InvalidSeries(format!(
                    "timestamps not equidistant at row {}: {} -> {}",
                    n + 1,
                    pair[0],
                    pair[1]
                )));
            }
        }
        Self::new(timestamps[0], step, columns)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Shortest round-trippable decimal representation.
fn format_float(v: f64) -> String {
    let mut buf = ryu_like(v);
    // Keep integral values readable as e.g. "20" -> "20.0" so the column is
    // unambiguously floating point.
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_like(v: f64) -> String {
    // f64 Display in Rust produces the shortest representation that
    // round-trips, which is exactly what byte-stable output needs.
    format!("{v}")
}

/// Validates a series, reporting the first violated invariant.
///
/// Construction already enforces the invariants; this is the standalone entry
/// point for data loaded through other routes.
pub fn validate_series(series: &MultivariateSeries) -> Result<()> {
    // Re-run the constructor checks on the existing storage.
    MultivariateSeries::new(
        series.start_time(),
        series.step(),
        series.columns.clone(),
    )
    .map(|_| ())
}
