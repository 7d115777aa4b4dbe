//! CSV input series and run traces.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use onlinets::series::{MultiSeries, Series};

use crate::error::{invalid, HarnessError, Result};

/// A loaded input file: one column gives a univariate series.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Univariate(Series),
    Multivariate(MultiSeries),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Univariate(s) => s.len(),
            Dataset::Multivariate(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a headed, comma-separated numeric table.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let width = reader.headers()?.len();
    if width == 0 {
        return Err(invalid(format!("{}: empty file", path.display())));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(width);
        for (j, cell) in record.iter().enumerate() {
            let parse_error = |message: String| HarnessError::Parse {
                path: path.to_path_buf(),
                line,
                column: j + 1,
                message,
            };
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_error(format!("cannot parse {cell:?} as a number")))?;
            if !value.is_finite() {
                return Err(parse_error(format!("non-finite value {cell:?}")));
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(invalid(format!("{}: no data rows", path.display())));
    }
    if width == 1 {
        Ok(Dataset::Univariate(Series::new(
            rows.into_iter().map(|r| r[0]).collect(),
        )?))
    } else {
        Ok(Dataset::Multivariate(MultiSeries::new(width, rows)?))
    }
}

/// Names of the three regret-bound columns.
pub const BOUND_LABELS: [&str; 3] = ["bound_identity", "bound_trend", "bound_seasonal"];

/// Per-step output of an experiment.
///
/// For multi-seed runs every column is the pointwise mean over seeds, so
/// `log_avg_loss` is the mean of per-seed log-average curves rather than the
/// log of the mean loss.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub loss: Vec<f64>,
    pub log_avg_loss: Vec<f64>,
    /// Normalized expert weights after each step.
    pub weights: Option<Vec<Vec<f64>>>,
    /// Regret-bound partial sums (identity, trend, seasonal), undefined
    /// while the Gram matrix is singular.
    pub bounds: Option<[Vec<Option<f64>>; 3]>,
}

/// `ln((1/t) Σ_{i≤t} loss_i)` for every `t`.
pub fn log_average(loss: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    loss.iter()
        .enumerate()
        .map(|(i, l)| {
            sum += l;
            (sum / (i + 1) as f64).ln()
        })
        .collect()
}

impl RunTrace {
    pub fn from_losses(loss: Vec<f64>) -> Self {
        Self {
            log_avg_loss: log_average(&loss),
            loss,
            weights: None,
            bounds: None,
        }
    }

    pub fn len(&self) -> usize {
        self.loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loss.is_empty()
    }

    /// Mean of the per-step losses.
    pub fn average_loss(&self) -> f64 {
        self.loss.iter().sum::<f64>() / self.loss.len().max(1) as f64
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string(), "loss".into(), "log_avg_loss".into()];
        if let Some(w) = &self.weights {
            let n = w.first().map_or(0, Vec::len);
            h.extend((0..n).map(|i| format!("w_expert_{i}")));
        }
        if self.bounds.is_some() {
            h.extend(BOUND_LABELS.iter().map(|s| s.to_string()));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let fmt = |v: f64| format!("{v:.16e}");
        for t in 0..self.len() {
            let mut row = vec![
                (t + 1).to_string(),
                fmt(self.loss[t]),
                fmt(self.log_avg_loss[t]),
            ];
            if let Some(weights) = &self.weights {
                row.extend(weights[t].iter().map(|&v| fmt(v)));
            }
            if let Some(bounds) = &self.bounds {
                row.extend(bounds.iter().map(|b| b[t].map(fmt).unwrap_or_default()));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| HarnessError::Io {
            path: "<trace>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(open(path)?);
        let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        let n_weights = header.iter().filter(|h| h.starts_with("w_expert_")).count();
        let has_bounds = header.iter().any(|h| h == BOUND_LABELS[0]);
        let mut trace = RunTrace {
            weights: (n_weights > 0).then(Vec::new),
            bounds: has_bounds.then(|| [Vec::new(), Vec::new(), Vec::new()]),
            ..RunTrace::default()
        };
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let cell = |j: usize| -> Result<Option<f64>> {
                let raw = record.get(j).unwrap_or("");
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse().map(Some).map_err(|_| HarnessError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: j + 1,
                    message: format!("cannot parse {raw:?}"),
                })
            };
            let required = |j: usize| -> Result<f64> {
                cell(j)?.ok_or_else(|| HarnessError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: j + 1,
                    message: "missing value".into(),
                })
            };
            trace.loss.push(required(1)?);
            trace.log_avg_loss.push(required(2)?);
            if let Some(weights) = trace.weights.as_mut() {
                weights.push(
                    (0..n_weights)
                        .map(|i| required(3 + i))
                        .collect::<Result<_>>()?,
                );
            }
            if let Some(bounds) = trace.bounds.as_mut() {
                for (k, b) in bounds.iter_mut().enumerate() {
                    b.push(cell(3 + n_weights + k)?);
                }
            }
        }
        Ok(trace)
    }
}
