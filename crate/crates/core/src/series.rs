//! Validated containers for univariate and multivariate observations.

use crate::error::{ensure_finite, invalid, Result};

/// An ordered univariate series `x_1..x_T` of finite values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series(Vec<f64>);

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure_finite(&values, "series")?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl AsRef<[f64]> for Series {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An ordered sequence of `dim`-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries {
    dim: usize,
    values: Vec<Vec<f64>>,
}

impl MultiSeries {
    pub fn new(dim: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("multivariate series needs dim >= 1"));
        }
        for (t, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(invalid(format!(
                    "observation {t} has length {}, expected {dim}",
                    v.len()
                )));
            }
            ensure_finite(v, &format!("observation {t}"))?;
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// The series of component `j`.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[j]).collect()
    }
}

/// Elementwise transform applied to raw data before prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogMode {
    NaturalLog,
    Identity,
}

pub fn log_transform(x: &[f64], mode: LogMode) -> Result<Vec<f64>> {
    ensure_finite(x, "log_transform input")?;
    match mode {
        LogMode::Identity => Ok(x.to_vec()),
        LogMode::NaturalLog => x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(invalid(format!(
                        "log transform needs positive values, got {v} at index {i}"
                    )))
                }
            })
            .collect(),
    }
}
