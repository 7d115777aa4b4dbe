//! MA lag polynomials, the companion-matrix invertibility check, and the AR
//! truncation length that follows from it.

use crate::error::{invalid, Result};
use crate::linalg::{spectral_radius, Matrix};

/// Margin below 1 required of the companion spectral radius.
pub const INVERTIBILITY_MARGIN: f64 = 1e-8;

/// Outcome of [`check_invertibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvertibilityReport {
    pub invertible: bool,
    /// Largest eigenvalue magnitude of the companion matrix.
    pub lambda_max: f64,
    /// Order of the MA lag polynomial (dimension of the companion matrix).
    pub companion_dim: usize,
}

/// Product of two lag polynomials given without their leading 1.
///
/// `a` and `b` hold `a_1..a_p` and `b_1..b_q` of `(1 + Σ a_i B^i)` and
/// `(1 + Σ b_j B^j)`; the product is returned the same way.
pub(crate) fn multiply_lag_polynomials(a: &[f64], b: &[f64]) -> Vec<f64> {
    let full = |c: &[f64]| {
        std::iter::once(1.0)
            .chain(c.iter().copied())
            .collect::<Vec<_>>()
    };
    let (fa, fb) = (full(a), full(b));
    let mut out = vec![0.0; fa.len() + fb.len() - 1];
    for (i, x) in fa.iter().enumerate() {
        for (j, y) in fb.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out.remove(0);
    out
}

/// Spreads seasonal coefficients `c_1..c_Q` onto lags `s, 2s, .., Qs`.
pub(crate) fn seasonal_lags(coeffs: &[f64], period: usize) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() * period];
    for (i, &c) in coeffs.iter().enumerate() {
        out[(i + 1) * period - 1] = c;
    }
    out
}

/// Coefficients of `θ(B) Θ(B^s)` by lag, leading 1 omitted.
///
/// The result has length `q + Q·s`, with `θ(B) = 1 + Σ θ_i B^i` and
/// `Θ(B^s) = 1 + Σ Θ_i B^{is}`.
pub fn expand_ma_polynomial(ma: &[f64], seasonal_ma: &[f64], period: usize) -> Vec<f64> {
    multiply_lag_polynomials(ma, &seasonal_lags(seasonal_ma, period))
}

/// Companion matrix with first row `-β_1..-β_l` and an identity subdiagonal.
pub fn companion_matrix(coeffs: &[f64]) -> Matrix {
    let n = coeffs.len();
    let mut f = Matrix::zeros(n, n);
    for (j, &b) in coeffs.iter().enumerate() {
        f[(0, j)] = -b;
    }
    for i in 1..n {
        f[(i, i - 1)] = 1.0;
    }
    f
}

/// Checks that the MA polynomial `1 + Σ β_i B^i` has all roots outside the
/// unit circle via the spectral radius of its companion matrix.
pub fn check_invertibility(ma_coeffs: &[f64]) -> Result<InvertibilityReport> {
    let lambda_max = spectral_radius(&companion_matrix(ma_coeffs))?;
    Ok(InvertibilityReport {
        invertible: lambda_max < 1.0 - INVERTIBILITY_MARGIN,
        lambda_max,
        companion_dim: ma_coeffs.len(),
    })
}

/// Constants entering the truncation length besides `λ_max` and `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConstants {
    /// Condition-number bound of the companion eigenvector matrix.
    pub kappa: f64,
    /// Lipschitz constant of the loss.
    pub lipschitz: f64,
    /// Bound on the expected absolute noise.
    pub noise_bound: f64,
}

impl Default for TruncationConstants {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            lipschitz: 1.0,
            noise_bound: 1.0,
        }
    }
}

/// AR order `M = ⌈ln(2κ T L M_max √l_m) / ln(1/λ_max)⌉ + l_a`, at least `l_a + 1`.
pub fn truncation_length(
    lambda_max: f64,
    constants: TruncationConstants,
    horizon: usize,
    ma_order: usize,
    ar_order: usize,
) -> Result<usize> {
    if !(lambda_max > 0.0 && lambda_max < 1.0) {
        return Err(invalid(format!(
            "lambda_max must lie in (0, 1), got {lambda_max}"
        )));
    }
    let TruncationConstants {
        kappa,
        lipschitz,
        noise_bound,
    } = constants;
    if !(kappa >= 1.0 && lipschitz > 0.0 && noise_bound > 0.0) {
        return Err(invalid("need kappa >= 1 and positive L, M_max"));
    }
    let arg = 2.0 * kappa * horizon as f64 * lipschitz * noise_bound * (ma_order as f64).sqrt();
    let lags = (arg.ln() / (1.0 / lambda_max).ln()).ceil();
    let lags = if lags.is_finite() && lags > 0.0 {
        lags as usize
    } else {
        0
    };
    Ok((lags + ar_order).max(ar_order + 1))
}
