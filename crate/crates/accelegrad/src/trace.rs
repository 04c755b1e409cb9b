//! Per-iteration run records and their CSV form.
//!
//! The CSV schema is the cross-tool contract: header
//! `iter,evals,f_avg,f_last,eta,S`, `.` as the decimal separator, no
//! digit grouping, floats printed with 17 significant digits so values
//! round-trip bit-exactly.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 6] = ["iter", "evals", "f_avg", "f_last", "eta", "S"];

/// One recorded point of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    /// Iteration count, 1-based, strictly increasing across records.
    pub iter: u64,
    /// Cumulative atomic gradient evaluations, nondecreasing.
    pub evals: u64,
    /// Objective at the averaged output.
    pub f_avg: f64,
    /// Objective at the latest non-averaged iterate.
    pub f_last: f64,
    /// Step size used at this iteration; 0 marks a degenerate
    /// (zero-gradient) step.
    pub eta: f64,
    /// The optimizer's running squared-gradient statistic.
    pub s: f64,
}

/// Ordered sequence of records from a single run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iter <= last.iter {
                return Err(Error::InvalidArgument(format!(
                    "trace iterations must be strictly increasing: {} after {}",
                    record.iter, last.iter
                )));
            }
            if record.evals < last.evals {
                return Err(Error::InvalidArgument(format!(
                    "trace evals must be nondecreasing: {} after {}",
                    record.evals, last.evals
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&CSV_COLUMNS.join(","));
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iter,
                r.evals,
                format_float(r.f_avg),
                format_float(r.f_last),
                format_float(r.eta),
                format_float(r.s)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv_str(text: &str) -> Result<Trace> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty trace file"))?;
        check_header(header)?;

        let mut trace = Trace::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != CSV_COLUMNS.len() {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "expected {} fields, found {}",
                        CSV_COLUMNS.len(),
                        fields.len()
                    ),
                ));
            }
            let record = TraceRecord {
                iter: parse_u64(fields[0], "iter", lineno)?,
                evals: parse_u64(fields[1], "evals", lineno)?,
                f_avg: parse_f64(fields[2], "f_avg", lineno)?,
                f_last: parse_f64(fields[3], "f_last", lineno)?,
                eta: parse_f64(fields[4], "eta", lineno)?,
                s: parse_f64(fields[5], "S", lineno)?,
            };
            trace
                .push(record)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        Ok(trace)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Trace> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Trace::from_csv_str(&text)
    }
}

/// 17 significant digits: enough to reconstruct any f64 exactly.
fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_header(header: &str) -> Result<()> {
    let found: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, expected) in CSV_COLUMNS.iter().enumerate() {
        match found.get(i) {
            Some(f) if f == expected => {}
            Some(f) => {
                return Err(Error::SchemaMismatch {
                    column: expected.to_string(),
                    expected: expected.to_string(),
                    found: f.to_string(),
                })
            }
            None => {
                return Err(Error::SchemaMismatch {
                    column: expected.to_string(),
                    expected: expected.to_string(),
                    found: "<missing>".to_string(),
                })
            }
        }
    }
    if found.len() > CSV_COLUMNS.len() {
        return Err(Error::SchemaMismatch {
            column: found[CSV_COLUMNS.len()].to_string(),
            expected: "<end of header>".to_string(),
            found: found[CSV_COLUMNS.len()].to_string(),
        });
    }
    Ok(())
}

fn parse_u64(field: &str, column: &str, lineno: usize) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid {column} value `{field}`")))
}

fn parse_f64(field: &str, column: &str, lineno: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid {column} value `{field}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(
            lineno,
            format!("non-finite {column} value `{field}`"),
        ));
    }
    Ok(v)
}

/// Which tracked sequence of a trace to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputSeries {
    /// The weighted/uniform averaged output covered by the error bounds.
    Averaged,
    /// The latest non-averaged iterate.
    Last,
}

/// `(iteration, f - f_star)` pairs for one tracked sequence.
pub fn suboptimality_series(trace: &Trace, series: OutputSeries, f_star: f64) -> Vec<(f64, f64)> {
    trace
        .records()
        .iter()
        .map(|r| {
            let f = match series {
                OutputSeries::Averaged => r.f_avg,
                OutputSeries::Last => r.f_last,
            };
            (r.iter as f64, f - f_star)
        })
        .collect()
}

/// Recording cadence for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cadence {
    /// Record every `n`-th iteration (and always the final one).
    Every(u64),
    /// About `target` logarithmically spaced records plus the final one.
    Logarithmic { target: usize },
}

impl Cadence {
    /// Every iteration for short runs, ~200 log-spaced records otherwise.
    pub fn default_for(iterations: u64) -> Cadence {
        if iterations <= 1000 {
            Cadence::Every(1)
        } else {
            Cadence::Logarithmic { target: 200 }
        }
    }

    pub fn schedule(&self, iterations: u64) -> Result<RecordSchedule> {
        match *self {
            Cadence::Every(n) => {
                if n == 0 {
                    return Err(Error::InvalidArgument("cadence must be >= 1".into()));
                }
                Ok(RecordSchedule::Every(n))
            }
            Cadence::Logarithmic { target } => {
                if target < 2 {
                    return Err(Error::InvalidArgument(
                        "logarithmic cadence needs at least 2 records".into(),
                    ));
                }
                let mut points = BTreeSet::new();
                let t = iterations.max(1) as f64;
                for k in 0..target {
                    let frac = k as f64 / (target - 1) as f64;
                    let point = t.powf(frac).round() as u64;
                    points.insert(point.clamp(1, iterations.max(1)));
                }
                points.insert(iterations.max(1));
                Ok(RecordSchedule::Points(points))
            }
        }
    }
}

/// Materialized record set for one run length.
#[derive(Clone, Debug)]
pub enum RecordSchedule {
    Every(u64),
    Points(BTreeSet<u64>),
}

impl RecordSchedule {
    pub fn should_record(&self, iter: u64, total: u64) -> bool {
        match self {
            RecordSchedule::Every(n) => iter.is_multiple_of(*n) || iter == total,
            RecordSchedule::Points(points) => points.contains(&iter) || iter == total,
        }
    }
}
