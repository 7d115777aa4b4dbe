//! Differencing transforms `τ = Δ^d Δ_s^D` and their one-step inverses `ζ`.
//!
//! Every transform here is a linear filter `τ(x)_t = Σ_j c_j x_{t-j}` with
//! `c_0 = 1`, so the inverse is an additive shift computed from past
//! observations only: `ζ(y_t) = y_t - Σ_{j≥1} c_j x_{t-j}`.

use crate::error::{ensure_finite, invalid, Error, Result};

const MAX_ORDINARY_ORDER: usize = 3;
const MAX_SEASONAL_ORDER: usize = 2;

/// Ordinary and seasonal differencing orders plus the seasonal period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformSpec {
    d: usize,
    seasonal_d: usize,
    period: usize,
}

impl TransformSpec {
    /// `period` is ignored (and stored as 1) when `seasonal_d == 0`.
    pub fn new(d: usize, seasonal_d: usize, period: usize) -> Result<Self> {
        if d > MAX_ORDINARY_ORDER {
            return Err(invalid(format!(
                "differencing order {d} exceeds {MAX_ORDINARY_ORDER}"
            )));
        }
        if seasonal_d > MAX_SEASONAL_ORDER {
            return Err(invalid(format!(
                "seasonal differencing order {seasonal_d} exceeds {MAX_SEASONAL_ORDER}"
            )));
        }
        if seasonal_d > 0 && period < 2 {
            return Err(invalid(format!(
                "seasonal differencing needs a period >= 2, got {period}"
            )));
        }
        let period = if seasonal_d == 0 { 1 } else { period };
        Ok(Self {
            d,
            seasonal_d,
            period,
        })
    }

    pub const fn identity() -> Self {
        Self {
            d: 0,
            seasonal_d: 0,
            period: 1,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seasonal_d(&self) -> usize {
        self.seasonal_d
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_identity(&self) -> bool {
        self.d == 0 && self.seasonal_d == 0
    }

    /// Number of past observations the transform reaches back:
    /// `d + seasonal_d * period`.
    pub fn depth(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    /// Coefficients `c_0..c_depth` of `(1 - B)^d (1 - B^s)^D`.
    pub fn filter(&self) -> Vec<f64> {
        let mut c = vec![1.0];
        for _ in 0..self.d {
            c = multiply_by_one_minus_power(&c, 1);
        }
        for _ in 0..self.seasonal_d {
            c = multiply_by_one_minus_power(&c, self.period);
        }
        c
    }
}

fn multiply_by_one_minus_power(c: &[f64], lag: usize) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + lag];
    for (i, &v) in c.iter().enumerate() {
        out[i] += v;
        out[i + lag] -= v;
    }
    out
}

/// Applies `Δ` `d` times and then `Δ_s` `seasonal_d` times.
///
/// The output has length `len(x) - depth` and starts at the first index with
/// a full set of lags.
pub fn difference(x: &[f64], spec: TransformSpec) -> Result<Vec<f64>> {
    ensure_finite(x, "difference input")?;
    if x.len() <= spec.depth() {
        return Err(Error::InsufficientHistory {
            needed: spec.depth() + 1,
            available: x.len(),
        });
    }
    let mut out = x.to_vec();
    for _ in 0..spec.d {
        out = lag_difference(&out, 1);
    }
    for _ in 0..spec.seasonal_d {
        out = lag_difference(&out, spec.period);
    }
    Ok(out)
}

fn lag_difference(x: &[f64], lag: usize) -> Vec<f64> {
    x.iter().skip(lag).zip(x).map(|(a, b)| a - b).collect()
}

/// The additive shift `ζ(y) - y` for the next observation, given the past.
///
/// `past` holds observations up to `x_{t-1}` (most recent last); only its
/// last `depth` values are used.
pub fn inverse_shift(past: &[f64], spec: TransformSpec) -> Result<f64> {
    let depth = spec.depth();
    if past.len() < depth {
        return Err(Error::InsufficientHistory {
            needed: depth,
            available: past.len(),
        });
    }
    let filter = spec.filter();
    let n = past.len();
    Ok(-(1..=depth).map(|j| filter[j] * past[n - j]).sum::<f64>())
}

/// Maps a forecast on the transformed scale back to the original scale.
///
/// Returns the unique `x̃_t` such that differencing `past ⧺ [x̃_t]` ends in `y`.
pub fn inverse_transform(y: f64, past: &[f64], spec: TransformSpec) -> Result<f64> {
    Ok(y + inverse_shift(past, spec)?)
}

/// `τ(x_t)` for the newest element of `window` (most recent last).
pub fn transform_last(window: &[f64], spec: TransformSpec) -> Result<f64> {
    let x_t = *window.last().ok_or(Error::InsufficientHistory {
        needed: spec.depth() + 1,
        available: 0,
    })?;
    Ok(x_t - inverse_shift(&window[..window.len() - 1], spec)?)
}

/// Inverts [`difference`] along a whole path.
///
/// `initial` supplies the pre-sample observations (most recent last, at least
/// `depth` of them); the returned series starts right after them.
pub fn integrate(y: &[f64], spec: TransformSpec, initial: &[f64]) -> Result<Vec<f64>> {
    let depth = spec.depth();
    if initial.len() < depth {
        return Err(Error::InsufficientHistory {
            needed: depth,
            available: initial.len(),
        });
    }
    let filter = spec.filter();
    let mut path: Vec<f64> = initial[initial.len() - depth..].to_vec();
    path.reserve(y.len());
    for &v in y {
        let n = path.len();
        let shift: f64 = (1..=depth).map(|j| filter[j] * path[n - j]).sum();
        path.push(v - shift);
    }
    Ok(path.split_off(depth))
}
