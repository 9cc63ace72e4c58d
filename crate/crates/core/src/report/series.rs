use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::radar::{RadarTruth, RangeMeasurements};

pub const SERIES_HEADER: [&str; 14] = [
    "step", "t", "truth_x", "truth_v", "truth_h", "est_x", "est_v", "est_h", "var_x", "var_v",
    "var_h", "err_x", "err_v", "err_h",
];

pub const TRUTH_HEADER: [&str; 6] = ["step", "t", "truth_x", "truth_v", "truth_h", "range"];

/// One measurement step. State triples are ordered `[x, ẋ, h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub step: usize,
    pub t: f64,
    pub truth: [f64; 3],
    pub estimate: [f64; 3],
    pub variance: [f64; 3],
    pub error: [f64; 3],
}

impl EstimateRow {
    pub fn new(step: usize, t: f64, truth: [f64; 3], estimate: [f64; 3], variance: [f64; 3]) -> Self {
        let error = [
            estimate[0] - truth[0],
            estimate[1] - truth[1],
            estimate[2] - truth[2],
        ];
        Self {
            step,
            t,
            truth,
            estimate,
            variance,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSeries {
    pub estimator: String,
    pub rows: Vec<EstimateRow>,
}

impl EstimateSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with [`SERIES_HEADER`]; floats use Rust's shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(SERIES_HEADER)?;
        for r in &self.rows {
            let mut record = Vec::with_capacity(SERIES_HEADER.len());
            record.push(r.step.to_string());
            record.push(r.t.to_string());
            for v in r.truth.iter().chain(&r.estimate).chain(&r.variance).chain(&r.error) {
                record.push(v.to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, estimator: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let header = reader.headers()?;
        if header.iter().ne(SERIES_HEADER) {
            return Err(Error::Format(format!(
                "unexpected header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| {
                    Error::Format(format!("column {}: `{}`: {e}", SERIES_HEADER[i], &record[i]))
                })
            };
            let triple = |start: usize| -> Result<[f64; 3]> {
                Ok([field(start)?, field(start + 1)?, field(start + 2)?])
            };
            let step = record[0]
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("column step: `{}`: {e}", &record[0])))?;
            rows.push(EstimateRow {
                step,
                t: field(1)?,
                truth: triple(2)?,
                estimate: triple(5)?,
                variance: triple(8)?,
                error: triple(11)?,
            });
        }
        Ok(Self {
            estimator: estimator.to_string(),
            rows,
        })
    }
}

/// Truth and raw ranges, one row per measurement step.
pub fn write_truth_csv<W: Write>(
    truth: &RadarTruth,
    measurements: &RangeMeasurements,
    out: W,
) -> Result<()> {
    if truth.len() != measurements.range.len() {
        return Err(Error::DimensionMismatch {
            context: "truth and measurement lengths",
            expected: truth.len(),
            found: measurements.range.len(),
        });
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRUTH_HEADER)?;
    for k in 0..truth.len() {
        w.write_record([
            (k + 1).to_string(),
            truth.t[k].to_string(),
            truth.x[k].to_string(),
            truth.v[k].to_string(),
            truth.h[k].to_string(),
            measurements.range[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
