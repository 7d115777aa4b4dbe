//! Univariate online predictors: projected online gradient descent over AR
//! coefficients of a differenced series, recursive least squares, and the
//! follow-the-leader regret bound.

use std::collections::VecDeque;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg::{dot, project_box, symmetric_eigen, Matrix, SymmetricEigen};
use crate::transform::{inverse_shift, TransformSpec};

/// Step size schedule. `t` counts updates starting at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `η_t = η₀ / √t`.
    InverseSqrt(f64),
}

impl LearningRate {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LearningRate::Constant(eta) => eta,
            LearningRate::InverseSqrt(eta0) => eta0 / (t.max(1) as f64).sqrt(),
        }
    }

    fn base(&self) -> f64 {
        match *self {
            LearningRate::Constant(eta) | LearningRate::InverseSqrt(eta) => eta,
        }
    }
}

/// Hyper-parameters of [`ArPredictor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OgdConfig {
    /// Number of AR lags `M` on the transformed scale.
    pub lags: usize,
    pub learning_rate: LearningRate,
    /// Radius of the max-norm ball the coefficients are projected onto.
    pub box_radius: f64,
}

impl OgdConfig {
    pub fn new(lags: usize, learning_rate: LearningRate, box_radius: f64) -> Result<Self> {
        if lags == 0 {
            return Err(invalid("need at least one AR lag"));
        }
        let eta = learning_rate.base();
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        if !(box_radius > 0.0 && box_radius.is_finite()) {
            return Err(invalid(format!(
                "box radius must be positive, got {box_radius}"
            )));
        }
        Ok(Self {
            lags,
            learning_rate,
            box_radius,
        })
    }
}

/// Per-step loss as a function of the forecast.
pub trait Loss: Clone + std::fmt::Debug {
    fn value(&self, target: f64, prediction: f64) -> f64;
    /// Derivative of [`Loss::value`] with respect to `prediction`.
    fn derivative(&self, target: f64, prediction: f64) -> f64;
}

/// `½ (x - x̃)²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SquaredLoss;

impl Loss for SquaredLoss {
    fn value(&self, target: f64, prediction: f64) -> f64 {
        0.5 * (target - prediction) * (target - prediction)
    }

    fn derivative(&self, target: f64, prediction: f64) -> f64 {
        prediction - target
    }
}

/// Which differencing the predictor is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    /// No differencing.
    Arma,
    /// Ordinary differencing only.
    Arima,
    /// Ordinary and seasonal differencing.
    Sarima,
}

/// Builds a squared-loss predictor, checking that `spec` fits `kind`.
pub fn make_predictor(
    kind: PredictorKind,
    spec: TransformSpec,
    config: OgdConfig,
) -> Result<ArPredictor> {
    match kind {
        PredictorKind::Arma if !spec.is_identity() => {
            return Err(invalid("an ARMA predictor takes no differencing"))
        }
        PredictorKind::Arima if spec.seasonal_d() > 0 => {
            return Err(invalid("an ARIMA predictor takes no seasonal differencing"))
        }
        _ => {}
    }
    Ok(ArPredictor::with_loss(spec, config, SquaredLoss))
}

/// Sliding window of raw observations and their transformed values, enough
/// to form the AR lag vector and the inverse-transform shift.
#[derive(Debug, Clone)]
pub struct LagHistory {
    spec: TransformSpec,
    lags: usize,
    /// Most recent raw observations, newest last, at most `depth`.
    raw: VecDeque<f64>,
    /// Most recent `τ(x)` values, newest first, at most `lags`.
    transformed: VecDeque<f64>,
}

impl LagHistory {
    pub fn new(spec: TransformSpec, lags: usize) -> Self {
        Self {
            spec,
            lags,
            raw: VecDeque::with_capacity(spec.depth() + 1),
            transformed: VecDeque::with_capacity(lags),
        }
    }

    pub fn spec(&self) -> TransformSpec {
        self.spec
    }

    /// `(τ(x_{t-1}), .., τ(x_{t-M}))`, zero-padded while history is short.
    pub fn lag_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.lags];
        for (slot, &y) in v.iter_mut().zip(&self.transformed) {
            *slot = y;
        }
        v
    }

    /// Whether all `M` lags hold real transformed values.
    pub fn is_full(&self) -> bool {
        self.transformed.len() == self.lags
    }

    /// `ζ(y) - y` for the next observation; fails until `depth` values exist.
    pub fn shift(&self) -> Result<f64> {
        let depth = self.spec.depth();
        if self.raw.len() < depth {
            return Err(Error::InsufficientHistory {
                needed: depth,
                available: self.raw.len(),
            });
        }
        let (a, b) = self.raw.as_slices();
        if b.is_empty() {
            inverse_shift(a, self.spec)
        } else {
            let past: Vec<f64> = self.raw.iter().copied().collect();
            inverse_shift(&past, self.spec)
        }
    }

    /// Last raw observation, if any.
    pub fn last(&self) -> Option<f64> {
        self.raw.back().copied()
    }

    /// Appends `x_t`, returning `τ(x_t)` when it is defined.
    pub fn push(&mut self, x_t: f64) -> Option<f64> {
        let depth = self.spec.depth();
        let y = self.shift().ok().map(|s| x_t - s);
        if let Some(y) = y {
            if self.transformed.len() == self.lags {
                self.transformed.pop_back();
            }
            self.transformed.push_front(y);
        }
        if depth > 0 {
            if self.raw.len() == depth {
                self.raw.pop_front();
            }
            self.raw.push_back(x_t);
        } else {
            self.raw.clear();
            self.raw.push_back(x_t);
        }
        y
    }
}

/// Online AR(M) predictor on `τ(x)` trained by projected gradient descent.
///
/// The forecast is `x̃_t = ζ(Σ_i γ_i τ(x_{t-i}))`. Missing lags during the
/// first `M + depth` steps count as zero.
#[derive(Debug, Clone)]
pub struct ArPredictor<L: Loss = SquaredLoss> {
    spec: TransformSpec,
    config: OgdConfig,
    loss: L,
    gamma: Vec<f64>,
    history: LagHistory,
    steps: usize,
}

impl<L: Loss> ArPredictor<L> {
    pub fn with_loss(spec: TransformSpec, config: OgdConfig, loss: L) -> Self {
        Self {
            spec,
            gamma: vec![0.0; config.lags],
            history: LagHistory::new(spec, config.lags),
            config,
            loss,
            steps: 0,
        }
    }

    pub fn spec(&self) -> TransformSpec {
        self.spec
    }

    pub fn config(&self) -> &OgdConfig {
        &self.config
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Replaces the coefficients, e.g. to start from a fitted model.
    pub fn set_gamma(&mut self, gamma: Vec<f64>) -> Result<()> {
        if gamma.len() != self.config.lags {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                self.config.lags,
                gamma.len()
            )));
        }
        ensure_finite(&gamma, "gamma")?;
        self.gamma = gamma;
        Ok(())
    }

    /// Number of observations consumed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `(τ(x_{t-1}), .., τ(x_{t-M}))`, zero-padded while history is short.
    pub fn lag_vector(&self) -> Vec<f64> {
        self.history.lag_vector()
    }

    /// Forecast of the next observation with coefficients `gamma`.
    fn predict_with(&self, gamma: &[f64]) -> Result<f64> {
        let shift = self.history.shift()?;
        Ok(dot(gamma, &self.history.lag_vector()) + shift)
    }

    /// Forecast of the next observation. Fails until `depth` observations
    /// have been seen, because the inverse transform is undefined before.
    pub fn predict(&self) -> Result<f64> {
        self.predict_with(&self.gamma)
    }

    /// Like [`ArPredictor::predict`], but falls back to the last observation
    /// (or 0 before any) while the inverse transform is undefined.
    pub fn forecast(&self) -> f64 {
        self.predict()
            .unwrap_or_else(|_| self.history.last().unwrap_or(0.0))
    }

    /// `ℓ_t(γ)` for the upcoming observation `x_t` under the current history.
    pub fn loss_at(&self, gamma: &[f64], x_t: f64) -> Result<f64> {
        if gamma.len() != self.config.lags {
            return Err(invalid("gamma has the wrong length"));
        }
        let pred = match self.predict_with(gamma) {
            Ok(p) => p,
            Err(_) => self.forecast(),
        };
        Ok(self.loss.value(x_t, pred))
    }

    /// Gradient of `ℓ_t` at the current coefficients. Zero during cold start,
    /// where the fallback forecast does not depend on `γ`.
    pub fn gradient(&self, x_t: f64) -> Vec<f64> {
        match self.predict() {
            Ok(pred) => {
                let g = self.loss.derivative(x_t, pred);
                self.lag_vector().iter().map(|y| g * y).collect()
            }
            Err(_) => vec![0.0; self.config.lags],
        }
    }

    /// Observes `x_t`: returns the loss of the forecast made before seeing it,
    /// takes a projected gradient step, and appends `x_t` to the history.
    pub fn update(&mut self, x_t: f64) -> Result<f64> {
        if !x_t.is_finite() {
            return Err(invalid(format!("observation {} is not finite", self.steps)));
        }
        let pred = self.predict();
        let loss = self
            .loss
            .value(x_t, *pred.as_ref().unwrap_or(&self.forecast()));
        if let Ok(pred) = pred {
            let eta = self.config.learning_rate.at(self.steps + 1);
            let g = self.loss.derivative(x_t, pred);
            let lags = self.lag_vector();
            let stepped: Vec<f64> = self
                .gamma
                .iter()
                .zip(&lags)
                .map(|(w, y)| w - eta * g * y)
                .collect();
            self.gamma = project_box(&stepped, self.config.box_radius)?;
        }
        self.history.push(x_t);
        self.steps += 1;
        Ok(loss)
    }
}

/// Full lag vectors `ψ_t = (y_{t-1}, .., y_{t-m})` of `y`, for `t = m..len`.
pub fn lag_vectors(y: &[f64], m: usize) -> Vec<Vec<f64>> {
    if m == 0 || y.len() <= m {
        return Vec::new();
    }
    (m..y.len())
        .map(|t| (1..=m).map(|i| y[t - i]).collect())
        .collect()
}

/// Threshold on `λ_min` below which a Gram matrix counts as singular.
pub const RANK_TOL: f64 = 1e-12;

/// Recursive least squares for the linear model `x ≈ ψᵀγ`.
///
/// [`RlsState::new`] runs exact least squares from the first step: until the
/// Gram matrix `G = Σ ψψᵀ` has full rank, `γ` is the minimum-norm change from
/// the prior that fits the data seen so far, after which `V = G⁻¹` is formed
/// once and the usual rank-one recursion takes over.
/// [`RlsState::with_prior`] starts the recursion from a given `(γ₀, V₀)`.
#[derive(Debug, Clone)]
pub struct RlsState {
    gamma: Vec<f64>,
    prior: Vec<f64>,
    v: Option<Matrix>,
    gram: Matrix,
    moment: Vec<f64>,
    steps: usize,
}

impl RlsState {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("RLS needs dimension >= 1"));
        }
        Ok(Self {
            gamma: vec![0.0; dim],
            prior: vec![0.0; dim],
            v: None,
            gram: Matrix::zeros(dim, dim),
            moment: vec![0.0; dim],
            steps: 0,
        })
    }

    /// Starts the recursion from `γ₀` and a symmetric positive definite `V₀`.
    pub fn with_prior(gamma0: Vec<f64>, v0: Matrix) -> Result<Self> {
        let dim = gamma0.len();
        if dim == 0 || v0.rows() != dim || !v0.is_square() {
            return Err(invalid("prior dimensions do not match"));
        }
        ensure_finite(&gamma0, "gamma0")?;
        let eig = symmetric_eigen(&v0)?;
        if eig.values[0] <= 0.0 {
            return Err(invalid("V0 must be positive definite"));
        }
        Ok(Self {
            prior: gamma0.clone(),
            gamma: gamma0,
            v: Some(v0),
            gram: Matrix::zeros(dim, dim),
            moment: vec![0.0; dim],
            steps: 0,
        })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `V_t`, available once the recursion is running.
    pub fn inverse_gram(&self) -> Option<&Matrix> {
        self.v.as_ref()
    }

    /// `G_t = Σ ψψᵀ` over the steps seen.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn predict(&self, psi: &[f64]) -> f64 {
        dot(&self.gamma, psi)
    }

    /// Returns `½(x - ψᵀγ_{t-1})²` and then folds `(ψ, x)` into the estimate.
    pub fn rls_step(&mut self, psi: &[f64], x: f64) -> Result<f64> {
        let dim = self.gamma.len();
        if psi.len() != dim {
            return Err(invalid(format!(
                "regressor has length {}, expected {dim}",
                psi.len()
            )));
        }
        ensure_finite(psi, "regressor")?;
        if !x.is_finite() {
            return Err(invalid("target is not finite"));
        }
        let residual = x - dot(psi, &self.gamma);
        let loss = 0.5 * residual * residual;

        self.gram.add_scaled(1.0, &Matrix::outer(psi, psi));
        for (m, p) in self.moment.iter_mut().zip(psi) {
            *m += x * p;
        }
        self.steps += 1;

        match self.v.as_mut() {
            Some(v) => {
                let vpsi = v.mul_vec(psi);
                let denom = 1.0 + dot(psi, &vpsi);
                for (g, vp) in self.gamma.iter_mut().zip(&vpsi) {
                    *g += vp * residual / denom;
                }
                v.add_scaled(-1.0 / denom, &Matrix::outer(&vpsi, &vpsi));
            }
            None => self.exact_update()?,
        }
        Ok(loss)
    }

    fn exact_update(&mut self) -> Result<()> {
        let eig = symmetric_eigen(&self.gram)?;
        let dim = self.gamma.len();
        let top = eig.values[dim - 1].max(0.0);
        let cutoff = RANK_TOL * top.max(1.0);
        let full_rank = eig.values[0] > cutoff;
        // γ = γ₀ + G⁺(b - Gγ₀), restricted to the eigenvalues above the cutoff.
        let gp = self.gram.mul_vec(&self.prior);
        let rhs: Vec<f64> = self.moment.iter().zip(&gp).map(|(b, g)| b - g).collect();
        let mut gamma = self.prior.clone();
        let mut v = Matrix::zeros(dim, dim);
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let q = eig.vectors.column(k);
            let coef = dot(&q, &rhs) / lambda;
            for (g, qi) in gamma.iter_mut().zip(&q) {
                *g += coef * qi;
            }
            if full_rank {
                v.add_scaled(1.0 / lambda, &Matrix::outer(&q, &q));
            }
        }
        self.gamma = gamma;
        if full_rank {
            self.v = Some(v);
        }
        Ok(())
    }
}

/// Follow-the-leader predictor: least squares over the full lag vectors of
/// `τ(x)` seen so far, kept current by [`RlsState`]. Until `M` transformed
/// values exist it forecasts `ζ(0)` (or the last observation before that).
#[derive(Debug, Clone)]
pub struct FtlPredictor {
    history: LagHistory,
    rls: RlsState,
    steps: usize,
}

impl FtlPredictor {
    pub fn new(spec: TransformSpec, lags: usize) -> Result<Self> {
        Ok(Self {
            history: LagHistory::new(spec, lags),
            rls: RlsState::new(lags)?,
            steps: 0,
        })
    }

    pub fn gamma(&self) -> &[f64] {
        self.rls.gamma()
    }

    pub fn rls(&self) -> &RlsState {
        &self.rls
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn forecast(&self) -> f64 {
        match self.history.shift() {
            Ok(shift) if self.history.is_full() => {
                shift + self.rls.predict(&self.history.lag_vector())
            }
            Ok(shift) => shift,
            Err(_) => self.history.last().unwrap_or(0.0),
        }
    }

    /// Returns `½(x_t - x̃_t)²` for the forecast made before `x_t`, then
    /// refits.
    pub fn update(&mut self, x_t: f64) -> Result<f64> {
        if !x_t.is_finite() {
            return Err(invalid(format!("observation {} is not finite", self.steps)));
        }
        let loss = match self.history.shift() {
            Ok(shift) if self.history.is_full() => {
                let psi = self.history.lag_vector();
                self.rls.rls_step(&psi, x_t - shift)?
            }
            _ => 0.5 * (x_t - self.forecast()).powi(2),
        };
        self.history.push(x_t);
        self.steps += 1;
        Ok(loss)
    }
}

/// Running value of `Σ_t 1 / (t · λ_min(G_t / t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrace {
    /// First step (1-based) at which `G_t` was nonsingular, if any.
    pub first_step: Option<usize>,
    /// Partial sums, one per step; `None` before `first_step`.
    pub partial_sums: Vec<Option<f64>>,
}

impl BoundTrace {
    pub fn total(&self) -> Option<f64> {
        self.partial_sums.last().copied().flatten()
    }
}

/// Evaluates the follow-the-leader regret bound along a regressor sequence.
/// Steps where `G_t` is still singular are skipped.
pub fn ftl_regret_bound(psis: &[Vec<f64>]) -> Result<BoundTrace> {
    let dim = psis.first().map_or(0, Vec::len);
    if psis.iter().any(|p| p.len() != dim) {
        return Err(invalid("regressors must share one dimension"));
    }
    let mut eig = SymmetricEigen {
        values: vec![0.0; dim],
        vectors: Matrix::identity(dim),
    };
    let mut first_step = None;
    let mut sum = 0.0;
    let mut partial_sums = Vec::with_capacity(psis.len());
    for (idx, psi) in psis.iter().enumerate() {
        ensure_finite(psi, "regressor")?;
        let t = idx + 1;
        if dim == 0 {
            partial_sums.push(None);
            continue;
        }
        eig = eig.rank_one_update(psi)?;
        let lambda_min = eig.values[0] / t as f64;
        if first_step.is_none() && lambda_min > RANK_TOL {
            first_step = Some(t);
        }
        if first_step.is_some() {
            sum += 1.0 / (t as f64 * lambda_min);
            partial_sums.push(Some(sum));
        } else {
            partial_sums.push(None);
        }
    }
    Ok(BoundTrace {
        first_step,
        partial_sums,
    })
}
