//! Seeded data-generating processes: SARIMA and error-corrected VARMA.
//!
//! Both simulators start from zero pre-sample values and draw i.i.d.
//! Gaussian innovations from a ChaCha stream, so a seed fully determines
//! the output on every platform.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure_finite, invalid, Result};
use crate::invertibility::{
    check_invertibility, expand_ma_polynomial, multiply_lag_polynomials, seasonal_lags,
};
use crate::linalg::Matrix;
use crate::series::{MultiSeries, Series};
use crate::transform::{integrate, TransformSpec};

/// Coefficients of `φ(B)Φ(B^s) Δ^d Δ_s^D x_t = θ(B)Θ(B^s) ε_t`.
///
/// AR polynomials use the `1 - Σ φ_i B^i` convention, MA polynomials
/// `1 + Σ θ_i B^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SarimaParams {
    pub ar: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub spec: TransformSpec,
    pub noise_sd: f64,
}

impl SarimaParams {
    /// The synthetic benchmark `Δ Δ_12 x_t = (1 - 0.95B)(1 - 0.4B^12) ε_t`.
    pub fn seasonal_benchmark() -> Self {
        Self {
            ar: vec![],
            seasonal_ar: vec![],
            ma: vec![-0.95],
            seasonal_ma: vec![-0.4],
            spec: TransformSpec::new(1, 1, 12).expect("valid spec"),
            noise_sd: 1.0,
        }
    }

    /// ARIMA(0,1,1) with MA coefficient `theta`.
    pub fn arima_011(theta: f64) -> Self {
        Self {
            ar: vec![],
            seasonal_ar: vec![],
            ma: vec![theta],
            seasonal_ma: vec![],
            spec: TransformSpec::new(1, 0, 1).expect("valid spec"),
            noise_sd: 1.0,
        }
    }

    /// AR coefficients `a_i` of the expanded `1 - Σ a_i B^i`.
    pub fn expanded_ar(&self) -> Vec<f64> {
        let neg = |c: &[f64]| c.iter().map(|v| -v).collect::<Vec<_>>();
        let seasonal = seasonal_lags(&neg(&self.seasonal_ar), self.season());
        neg(&multiply_lag_polynomials(&neg(&self.ar), &seasonal))
    }

    pub fn expanded_ma(&self) -> Vec<f64> {
        expand_ma_polynomial(&self.ma, &self.seasonal_ma, self.season())
    }

    fn season(&self) -> usize {
        // Seasonal lag polynomials still need a period when D = 0.
        self.spec.period().max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid(format!(
                "noise_sd must be positive, got {}",
                self.noise_sd
            )));
        }
        for (name, c) in [
            ("ar", &self.ar),
            ("seasonal_ar", &self.seasonal_ar),
            ("ma", &self.ma),
            ("seasonal_ma", &self.seasonal_ma),
        ] {
            ensure_finite(c, name)?;
        }
        if (!self.seasonal_ar.is_empty() || !self.seasonal_ma.is_empty()) && self.spec.period() < 2
        {
            return Err(invalid("seasonal coefficients need a seasonal period >= 2"));
        }
        let report = check_invertibility(&self.expanded_ma())?;
        if !report.invertible {
            return Err(invalid(format!(
                "MA polynomial is not invertible (companion spectral radius {})",
                report.lambda_max
            )));
        }
        Ok(())
    }

    /// Stationary ARMA core on the transformed scale: `burn_in + n` draws
    /// from zero initial conditions, of which the last `n` are returned.
    pub fn arma_core<R: Rng + ?Sized>(
        &self,
        n: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.validate()?;
        let ar = self.expanded_ar();
        let ma = self.expanded_ma();
        let normal = Normal::new(0.0, self.noise_sd).map_err(|e| invalid(e.to_string()))?;
        let total = burn_in + n;
        let mut y = Vec::with_capacity(total);
        let mut eps = Vec::with_capacity(total);
        for t in 0..total {
            let e: f64 = normal.sample(rng);
            let mut v = e;
            for (i, a) in ar.iter().enumerate() {
                if let Some(prev) = t.checked_sub(i + 1) {
                    v += a * y[prev];
                }
            }
            for (j, b) in ma.iter().enumerate() {
                if let Some(prev) = t.checked_sub(j + 1) {
                    v += b * eps[prev];
                }
            }
            eps.push(e);
            y.push(v);
        }
        Ok(y.split_off(burn_in))
    }
}

/// Simulates `x_1..x_T` from a SARIMA process.
///
/// The ARMA core is generated on the differenced scale, `burn_in` samples are
/// discarded, and the rest is integrated from zero pre-sample values.
pub fn simulate_sarima(
    params: &SarimaParams,
    len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Series> {
    if len == 0 {
        return Err(invalid("simulation length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = params.arma_core(len, burn_in, &mut rng)?;
    let zeros = vec![0.0; params.spec.depth()];
    Series::new(integrate(&core, params.spec, &zeros)?)
}

/// `Δx_t = Π x_{t-1} + Σ Γ_i Δx_{t-i} + Σ Θ_i ε_{t-i} + ε_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcVarmaParams {
    pub pi: Matrix,
    pub gammas: Vec<Matrix>,
    pub thetas: Vec<Matrix>,
    pub noise_sd: f64,
}

impl EcVarmaParams {
    pub fn dim(&self) -> usize {
        self.pi.rows()
    }

    /// Rank-one `Π = α βᵀ` with no short-run or MA terms.
    pub fn rank_one(alpha: &[f64], beta: &[f64], noise_sd: f64) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(invalid("alpha and beta must have equal length"));
        }
        let p = Self {
            pi: Matrix::outer(alpha, beta),
            gammas: vec![],
            thetas: vec![],
            noise_sd,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dim();
        if k == 0 || !self.pi.is_square() {
            return Err(invalid("Π must be a non-empty square matrix"));
        }
        for (name, list) in [("Γ", &self.gammas), ("Θ", &self.thetas)] {
            for (i, m) in list.iter().enumerate() {
                if m.rows() != k || m.cols() != k {
                    return Err(invalid(format!(
                        "{name}_{} is {}x{}, expected {k}x{k}",
                        i + 1,
                        m.rows(),
                        m.cols()
                    )));
                }
            }
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid(format!(
                "noise_sd must be positive, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Iterates the error-corrected recursion forward from zero initial values.
pub fn simulate_ecvarma(
    params: &EcVarmaParams,
    len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<MultiSeries> {
    params.validate()?;
    if len == 0 {
        return Err(invalid("simulation length must be >= 1"));
    }
    let k = params.dim();
    let normal = Normal::new(0.0, params.noise_sd).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut level = vec![0.0; k];
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    let mut shocks: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::with_capacity(len);
    for t in 0..burn_in + len {
        let e: Vec<f64> = (0..k).map(|_| normal.sample(&mut rng)).collect();
        let mut dx = params.pi.mul_vec(&level);
        for (i, g) in params.gammas.iter().enumerate() {
            if let Some(prev) = diffs.len().checked_sub(i + 1) {
                add_into(&mut dx, &g.mul_vec(&diffs[prev]));
            }
        }
        for (j, th) in params.thetas.iter().enumerate() {
            if let Some(prev) = shocks.len().checked_sub(j + 1) {
                add_into(&mut dx, &th.mul_vec(&shocks[prev]));
            }
        }
        add_into(&mut dx, &e);
        add_into(&mut level, &dx);
        diffs.push(dx);
        shocks.push(e);
        if t >= burn_in {
            out.push(level.clone());
        }
    }
    MultiSeries::new(k, out)
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}
