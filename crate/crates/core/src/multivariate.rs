//! Online error-correction VAR predictor for cointegrated vector series, and
//! its undifferenced VAR ablation.

use std::collections::VecDeque;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg::{project_box, project_l1_ball, svd, Matrix};
use crate::univariate::LearningRate;

/// Euclidean (Frobenius) projection onto `{X : ‖X‖_* ≤ rho}`.
pub fn project_nuclear(a: &Matrix, rho: f64) -> Result<Matrix> {
    if rho.is_nan() || rho < 0.0 {
        return Err(invalid(format!("nuclear radius must be >= 0, got {rho}")));
    }
    ensure_finite(a.as_slice(), "project_nuclear input")?;
    let dec = svd(a)?;
    if dec.sigma.iter().sum::<f64>() <= rho {
        return Ok(a.clone());
    }
    let sigma = project_l1_ball(&dec.sigma, rho)?;
    Ok(dec.reconstruct_with(&sigma))
}

/// Hyper-parameters of [`EcVarmaState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcVarmaConfig {
    pub dim: usize,
    /// Number of lagged (differenced) terms `M`.
    pub lags: usize,
    pub learning_rate: LearningRate,
    /// Nuclear-norm radius for `Π̂`.
    pub rho: f64,
    /// Max-norm radius for each `Γ̂_i`.
    pub gamma_box_radius: f64,
    /// `true` for the error-correction form, `false` for a plain VAR on levels.
    pub differenced: bool,
}

impl EcVarmaConfig {
    pub fn new(
        dim: usize,
        lags: usize,
        learning_rate: LearningRate,
        rho: f64,
        gamma_box_radius: f64,
        differenced: bool,
    ) -> Result<Self> {
        if dim == 0 || lags == 0 {
            return Err(invalid("need dim >= 1 and at least one lag"));
        }
        let eta = learning_rate.at(1);
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(invalid(format!("rho must be >= 0, got {rho}")));
        }
        if !differenced && rho != 0.0 {
            return Err(invalid(
                "the undifferenced VAR form has no Π term; set rho = 0",
            ));
        }
        if !(gamma_box_radius > 0.0 && gamma_box_radius.is_finite()) {
            return Err(invalid("gamma box radius must be positive"));
        }
        Ok(Self {
            dim,
            lags,
            learning_rate,
            rho,
            gamma_box_radius,
            differenced,
        })
    }

    /// Error-correction form with unit box radius.
    pub fn error_correction(
        dim: usize,
        lags: usize,
        learning_rate: LearningRate,
        rho: f64,
    ) -> Result<Self> {
        Self::new(dim, lags, learning_rate, rho, 1.0, true)
    }

    /// Plain VAR on levels with unit box radius.
    pub fn varma(dim: usize, lags: usize, learning_rate: LearningRate) -> Result<Self> {
        Self::new(dim, lags, learning_rate, 0.0, 1.0, false)
    }
}

/// Gradients of the squared loss with respect to `Π̂` and each `Γ̂_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcVarmaGradient {
    pub pi: Matrix,
    pub gammas: Vec<Matrix>,
}

/// Online predictor
/// `x̃_t = x_{t-1} + Π̂ x_{t-1} + Σ_i Γ̂_i Δx_{t-i}` (or `Σ_i Γ̂_i x_{t-i}`
/// when not differenced) trained by projected gradient descent.
#[derive(Debug, Clone)]
pub struct EcVarmaState {
    config: EcVarmaConfig,
    pi: Matrix,
    gammas: Vec<Matrix>,
    /// Recent observations, newest last, at most `M + 1`.
    history: VecDeque<Vec<f64>>,
    steps: usize,
}

impl EcVarmaState {
    pub fn new(config: EcVarmaConfig) -> Self {
        let k = config.dim;
        Self {
            pi: Matrix::zeros(k, k),
            gammas: vec![Matrix::zeros(k, k); config.lags],
            history: VecDeque::with_capacity(config.lags + 1),
            config,
            steps: 0,
        }
    }

    pub fn config(&self) -> &EcVarmaConfig {
        &self.config
    }

    pub fn pi(&self) -> &Matrix {
        &self.pi
    }

    pub fn gammas(&self) -> &[Matrix] {
        &self.gammas
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Overwrites the parameters without projecting them.
    pub fn set_parameters(&mut self, pi: Matrix, gammas: Vec<Matrix>) -> Result<()> {
        let k = self.config.dim;
        let ok = |m: &Matrix| m.rows() == k && m.cols() == k;
        if !ok(&pi) || gammas.len() != self.config.lags || !gammas.iter().all(ok) {
            return Err(invalid("parameter shapes do not match the configuration"));
        }
        self.pi = pi;
        self.gammas = gammas;
        Ok(())
    }

    /// Regressor multiplying `Γ̂_i` (1-based `i`); zero when out of history.
    fn regressor(&self, i: usize) -> Vec<f64> {
        let n = self.history.len();
        let k = self.config.dim;
        if self.config.differenced {
            if n < i + 1 {
                return vec![0.0; k];
            }
            let (a, b) = (&self.history[n - i], &self.history[n - i - 1]);
            a.iter().zip(b).map(|(x, y)| x - y).collect()
        } else {
            if n < i {
                return vec![0.0; k];
            }
            self.history[n - i].clone()
        }
    }

    fn predict_with(&self, pi: &Matrix, gammas: &[Matrix]) -> Result<Vec<f64>> {
        let last = self.history.back().ok_or(Error::InsufficientHistory {
            needed: 1,
            available: 0,
        })?;
        let mut out = if self.config.differenced {
            let pix = pi.mul_vec(last);
            last.iter().zip(&pix).map(|(x, p)| x + p).collect()
        } else {
            vec![0.0; self.config.dim]
        };
        for (i, g) in gammas.iter().enumerate() {
            let z = self.regressor(i + 1);
            for (o, v) in out.iter_mut().zip(g.mul_vec(&z)) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Forecast of the next observation; fails before any observation.
    pub fn predict(&self) -> Result<Vec<f64>> {
        self.predict_with(&self.pi, &self.gammas)
    }

    /// [`EcVarmaState::predict`], or the zero vector before any observation.
    pub fn forecast(&self) -> Vec<f64> {
        self.predict()
            .unwrap_or_else(|_| vec![0.0; self.config.dim])
    }

    fn check_observation(&self, x_t: &[f64]) -> Result<()> {
        if x_t.len() != self.config.dim {
            return Err(invalid(format!(
                "observation has length {}, expected {}",
                x_t.len(),
                self.config.dim
            )));
        }
        ensure_finite(x_t, "observation")
    }

    /// `½‖x_t - x̃_t‖²` for the given parameters under the current history.
    pub fn loss_at(&self, pi: &Matrix, gammas: &[Matrix], x_t: &[f64]) -> Result<f64> {
        self.check_observation(x_t)?;
        let pred = match self.predict_with(pi, gammas) {
            Ok(p) => p,
            Err(_) => self.forecast(),
        };
        Ok(half_squared_distance(x_t, &pred))
    }

    /// Gradients of the loss at the current parameters.
    pub fn gradients(&self, x_t: &[f64]) -> Result<EcVarmaGradient> {
        self.check_observation(x_t)?;
        let k = self.config.dim;
        let zero = || EcVarmaGradient {
            pi: Matrix::zeros(k, k),
            gammas: vec![Matrix::zeros(k, k); self.config.lags],
        };
        let Ok(pred) = self.predict() else {
            return Ok(zero());
        };
        let r: Vec<f64> = pred.iter().zip(x_t).map(|(p, x)| p - x).collect();
        let pi = if self.config.differenced {
            Matrix::outer(&r, self.history.back().expect("history checked by predict"))
        } else {
            Matrix::zeros(k, k)
        };
        let gammas = (1..=self.config.lags)
            .map(|i| Matrix::outer(&r, &self.regressor(i)))
            .collect();
        Ok(EcVarmaGradient { pi, gammas })
    }

    /// Observes `x_t`, returns the loss of the forecast made before seeing it,
    /// and takes one projected gradient step.
    pub fn update(&mut self, x_t: &[f64]) -> Result<f64> {
        self.check_observation(x_t)?;
        let loss = half_squared_distance(x_t, &self.forecast());
        if !self.history.is_empty() {
            let eta = self.config.learning_rate.at(self.steps + 1);
            let grad = self.gradients(x_t)?;
            let radius = self.config.gamma_box_radius;
            for (g, dg) in self.gammas.iter_mut().zip(&grad.gammas) {
                let mut stepped = g.clone();
                stepped.add_scaled(-eta, dg);
                let clipped = project_box(stepped.as_slice(), radius)?;
                stepped.as_mut_slice().copy_from_slice(&clipped);
                *g = stepped;
            }
            if self.config.differenced {
                let mut stepped = self.pi.clone();
                stepped.add_scaled(-eta, &grad.pi);
                self.pi = project_nuclear(&stepped, self.config.rho)?;
            }
        }
        if self.history.len() == self.config.lags + 1 {
            self.history.pop_front();
        }
        self.history.push_back(x_t.to_vec());
        self.steps += 1;
        Ok(loss)
    }
}

fn half_squared_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}
