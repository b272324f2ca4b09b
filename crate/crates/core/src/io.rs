//! Sample ingestion (CSV with tie handling) and serialization of fits,
//! traces and selection reports.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! finite f64 exactly.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::FitTrace;
use crate::projection::weighted_mean;
use crate::selection::{EntryStatus, SelectionReport};
use crate::simulate::ExperimentRow;
use crate::variation::DecompositionPair;

/// What to do with rows that share an abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Replace a tie group by its weighted mean response with summed
    /// weight.
    #[default]
    MergeMean,
    /// Reject duplicate abscissas.
    Error,
}

/// Where a merged sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// Number of raw input rows.
    pub raw_rows: usize,
    /// Number of abscissas that absorbed more than one raw row.
    pub tie_groups: usize,
}

/// One raw observation before sorting and merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// Strictly increasing abscissas with merged responses and positive
/// weights; the input every fitting routine works on.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    provenance: Provenance,
}

impl SortedSample {
    /// Unit-weight sample; rows are sorted and exact ties mean-merged.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let rows = x
            .into_iter()
            .zip(y)
            .map(|(x, y)| SampleRow { x, y, w: 1.0 })
            .collect();
        Self::from_rows(rows, TiePolicy::MergeMean)
    }

    /// Sorts rows by abscissa and applies the tie policy.
    pub fn from_rows(mut rows: Vec<SampleRow>, ties: TiePolicy) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ZeroRows);
        }
        for (i, row) in rows.iter().enumerate() {
            if !row.x.is_finite() || !row.y.is_finite() {
                return Err(Error::InvalidSample(format!("non-finite row {i}")));
            }
            if !row.w.is_finite() || row.w <= 0.0 {
                return Err(Error::NonPositiveWeight { row: i });
            }
        }
        rows.sort_by(|a, b| a.x.partial_cmp(&b.x).expect("abscissas are finite"));

        let raw_rows = rows.len();
        let mut x = Vec::with_capacity(raw_rows);
        let mut y = Vec::with_capacity(raw_rows);
        let mut w = Vec::with_capacity(raw_rows);
        let mut tie_groups = 0;
        let mut i = 0;
        while i < raw_rows {
            let mut j = i + 1;
            let mut wsum = rows[i].w;
            let mut ysum = rows[i].w * rows[i].y;
            while j < raw_rows && rows[j].x == rows[i].x {
                wsum += rows[j].w;
                ysum += rows[j].w * rows[j].y;
                j += 1;
            }
            if j > i + 1 {
                if ties == TiePolicy::Error {
                    return Err(Error::DuplicateAbscissa(rows[i].x));
                }
                tie_groups += 1;
            }
            x.push(rows[i].x);
            y.push(ysum / wsum);
            w.push(wsum);
            i = j;
        }
        Ok(Self {
            x,
            y,
            w,
            provenance: Provenance {
                raw_rows,
                tie_groups,
            },
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Number of distinct abscissas.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Number of raw rows before tie merging.
    pub fn raw_len(&self) -> usize {
        self.provenance.raw_rows
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn weighted_mean_y(&self) -> f64 {
        weighted_mean(&self.y, &self.w)
    }
}

/// Formats a float with 17 significant digits (round-trip exact).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a CSV sample: header row with columns `x`, `y` and optional `w`;
/// unknown columns are ignored. Rows are sorted and ties handled per
/// `ties`.
pub fn load_sample(source: impl Read, ties: TiePolicy) -> Result<SortedSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let x_col = find("x").ok_or(Error::MissingColumn("x"))?;
    let y_col = find("y").ok_or(Error::MissingColumn("y"))?;
    let w_col = find("w");

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1; // 1-based data row for messages
        let parse = |col: usize, name: &str| -> Result<f64> {
            let cell = record.get(col).ok_or_else(|| Error::NonNumericCell {
                row,
                column: name.to_string(),
            })?;
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: name.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidSample(format!(
                    "non-finite {name} at row {row}"
                )));
            }
            Ok(v)
        };
        let x = parse(x_col, "x")?;
        let y = parse(y_col, "y")?;
        let w = match w_col {
            Some(col) => {
                let w = parse(col, "w")?;
                if w <= 0.0 {
                    return Err(Error::NonPositiveWeight { row });
                }
                w
            }
            None => 1.0,
        };
        rows.push(SampleRow { x, y, w });
    }
    if rows.is_empty() {
        return Err(Error::ZeroRows);
    }
    SortedSample::from_rows(rows, ties)
}

/// Writes a fitted decomposition as CSV with columns
/// `x,y,w,u_hat,b_hat,y_hat,residual`.
pub fn write_fit(
    pair: &DecompositionPair,
    y_hat: &[f64],
    sample: &SortedSample,
    sink: impl Write,
) -> Result<()> {
    let n = sample.len();
    if n == 0 || pair.is_empty() {
        return Err(Error::EmptySequence);
    }
    if pair.len() != n || y_hat.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: pair.len().min(y_hat.len()),
        });
    }
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["x", "y", "w", "u_hat", "b_hat", "y_hat", "residual"])?;
    for (i, fitted) in y_hat.iter().enumerate() {
        writer.write_record([
            format_f64(sample.x()[i]),
            format_f64(sample.y()[i]),
            format_f64(sample.w()[i]),
            format_f64(pair.increasing()[i]),
            format_f64(pair.decreasing()[i]),
            format_f64(*fitted),
            format_f64(sample.y()[i] - fitted),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a sample as CSV (`x,y` plus a `truth` column when given). The
/// output is loadable by [`load_sample`], which ignores the extra column.
pub fn write_sample(
    sample: &SortedSample,
    truth: Option<&[f64]>,
    sink: impl Write,
) -> Result<()> {
    if let Some(t) = truth {
        if t.len() != sample.len() {
            return Err(Error::LengthMismatch {
                left: sample.len(),
                right: t.len(),
            });
        }
    }
    let mut writer = csv::Writer::from_writer(sink);
    match truth {
        Some(_) => writer.write_record(["x", "y", "truth"])?,
        None => writer.write_record(["x", "y"])?,
    }
    for i in 0..sample.len() {
        let mut record = vec![format_f64(sample.x()[i]), format_f64(sample.y()[i])];
        if let Some(t) = truth {
            record.push(format_f64(t[i]));
        }
        writer.write_record(record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes per-iteration experiment diagnostics as CSV.
pub fn write_experiment(rows: &[ExperimentRow], sink: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["k", "rss", "mse_truth", "level_sets"])?;
    for row in rows {
        writer.write_record([
            row.k.to_string(),
            format_f64(row.rss),
            format_f64(row.mse_truth),
            row.level_sets.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes per-iteration diagnostics in tidy long format (`k,series,value`),
/// one row per series per iteration, ready for any plotting tool.
pub fn write_trace_tidy(
    trace: &FitTrace,
    report: Option<&SelectionReport>,
    sink: impl Write,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["k", "series", "value"])?;
    for state in trace.states() {
        let k = state.k().to_string();
        writer.write_record([k.as_str(), "rss", &format_f64(state.rss())])?;
        writer.write_record([k.as_str(), "level_sets", &state.level_sets().to_string()])?;
        if let Some(EntryStatus::Value(v)) = report
            .and_then(|r| r.entry(state.k()))
            .map(|e| e.status)
        {
            writer.write_record([k.as_str(), "criterion", &format_f64(v)])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct IterationDoc {
    k: usize,
    rss: f64,
    level_sets: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u_hat: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_hat: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_hat: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct TraceDoc {
    algorithm: &'static str,
    n: usize,
    iterations: Vec<IterationDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_k: Option<usize>,
}

/// Writes the trace (and selection report, when present) as JSON. Vectors
/// appear only for iterations whose vectors the trace retained.
pub fn write_trace(
    trace: &FitTrace,
    report: Option<&SelectionReport>,
    mut sink: impl Write,
) -> Result<()> {
    let iterations = trace
        .states()
        .iter()
        .map(|state| {
            let criterion_value = report
                .and_then(|r| r.entry(state.k()))
                .and_then(|e| match e.status {
                    EntryStatus::Value(v) => Some(v),
                    _ => None,
                });
            IterationDoc {
                k: state.k(),
                rss: state.rss(),
                level_sets: state.level_sets(),
                criterion_value,
                u_hat: state.u_hat().map(|v| v.to_vec()),
                b_hat: state.b_hat().map(|v| v.to_vec()),
                y_hat: state.y_hat().map(|v| v.to_vec()),
            }
        })
        .collect();
    let doc = TraceDoc {
        algorithm: trace.algorithm().name(),
        n: trace.sample().len(),
        iterations,
        criterion: report.map(|r| r.criterion().name()),
        chosen_k: report.map(|r| r.chosen_k()),
    };
    serde_json::to_writer(&mut sink, &doc).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}
