//! Randomized weighted majority over a set of online predictors, with losses
//! normalized by the largest loss in a sliding window.

use std::collections::VecDeque;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::multivariate::EcVarmaState;
use crate::univariate::{ArPredictor, Loss};

/// An online predictor the ensemble can consult and train.
pub trait Expert {
    type Observation: ?Sized;
    type Forecast: Clone + std::fmt::Debug;

    /// Forecast of the next observation; always defined.
    fn forecast(&self) -> Self::Forecast;

    /// Consumes the observation and returns the loss of the forecast
    /// made before seeing it.
    fn observe(&mut self, x: &Self::Observation) -> Result<f64>;

    /// Loss of an arbitrary forecast against `x`.
    fn forecast_loss(forecast: &Self::Forecast, x: &Self::Observation) -> f64;

    /// Convex combination of forecasts with the given weights.
    fn blend(forecasts: &[Self::Forecast], weights: &[f64]) -> Self::Forecast;
}

impl<L: Loss> Expert for ArPredictor<L> {
    type Observation = f64;
    type Forecast = f64;

    fn forecast(&self) -> f64 {
        ArPredictor::forecast(self)
    }

    fn observe(&mut self, x: &f64) -> Result<f64> {
        self.update(*x)
    }

    fn forecast_loss(forecast: &f64, x: &f64) -> f64 {
        0.5 * (x - forecast) * (x - forecast)
    }

    fn blend(forecasts: &[f64], weights: &[f64]) -> f64 {
        forecasts.iter().zip(weights).map(|(f, w)| f * w).sum()
    }
}

impl Expert for EcVarmaState {
    type Observation = [f64];
    type Forecast = Vec<f64>;

    fn forecast(&self) -> Vec<f64> {
        EcVarmaState::forecast(self)
    }

    fn observe(&mut self, x: &[f64]) -> Result<f64> {
        self.update(x)
    }

    fn forecast_loss(forecast: &Vec<f64>, x: &[f64]) -> f64 {
        0.5 * forecast
            .iter()
            .zip(x)
            .map(|(f, v)| (v - f) * (v - f))
            .sum::<f64>()
    }

    fn blend(forecasts: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let dim = forecasts.first().map_or(0, Vec::len);
        let mut out = vec![0.0; dim];
        for (f, w) in forecasts.iter().zip(weights) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += w * v;
            }
        }
        out
    }
}

/// How the ensemble turns expert forecasts into its own prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictionMode {
    /// Follow one expert drawn from the normalized weights.
    #[default]
    Sample,
    /// Weighted average of all expert forecasts.
    WeightedAverage,
}

/// What happened during one [`Ensemble::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<F> {
    pub chosen_expert: usize,
    /// Loss of the chosen expert, `per_expert_losses[chosen_expert]`.
    pub realized_loss: f64,
    /// The ensemble's prediction (depends on [`PredictionMode`]).
    pub prediction: F,
    /// Loss of `prediction`.
    pub prediction_loss: f64,
    pub per_expert_losses: Vec<f64>,
    pub weights_after: Vec<f64>,
    pub b_t: f64,
}

/// Learning rate `min(√(ln n / T), 0.5)` for `n` experts over horizon `T`.
pub fn default_eta(num_experts: usize, horizon: usize) -> f64 {
    ((num_experts as f64).ln() / horizon as f64).sqrt().min(0.5)
}

/// Weighted-majority ensemble over experts of one type.
///
/// Weights are kept as logarithms so long runs do not underflow.
#[derive(Debug, Clone)]
pub struct Ensemble<E: Expert> {
    experts: Vec<E>,
    log_weights: Vec<f64>,
    eta: f64,
    window_k: usize,
    windows: Vec<VecDeque<f64>>,
    rng: ChaCha8Rng,
    mode: PredictionMode,
    steps: usize,
}

impl<E: Expert> Ensemble<E> {
    pub fn new(experts: Vec<E>, window_k: usize, horizon: usize, seed: u64) -> Result<Self> {
        if experts.len() < 2 {
            return Err(invalid("an ensemble needs at least 2 experts"));
        }
        if window_k == 0 {
            return Err(invalid("window length must be >= 1"));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be >= 1"));
        }
        let n = experts.len();
        Ok(Self {
            eta: default_eta(n, horizon),
            log_weights: vec![0.0; n],
            windows: vec![VecDeque::with_capacity(window_k); n],
            experts,
            window_k,
            rng: ChaCha8Rng::seed_from_u64(seed),
            mode: PredictionMode::Sample,
            steps: 0,
        })
    }

    /// Overrides the learning rate; must lie in `(0, 1)`.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1), got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: PredictionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn experts(&self) -> &[E] {
        &self.experts
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalized weights `w_t / W_t`.
    pub fn weight_snapshot(&self) -> Vec<f64> {
        let top = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_weights.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    }

    /// Predicts, observes `x`, trains every expert and reweights.
    pub fn step(&mut self, x: &E::Observation) -> Result<StepRecord<E::Forecast>> {
        let probs = self.weight_snapshot();
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| invalid(format!("cannot sample from the weights: {e}")))?;
        let chosen = dist.sample(&mut self.rng);
        let forecasts: Vec<E::Forecast> = self.experts.iter().map(E::forecast).collect();
        let prediction = match self.mode {
            PredictionMode::Sample => forecasts[chosen].clone(),
            PredictionMode::WeightedAverage => E::blend(&forecasts, &probs),
        };
        let prediction_loss = E::forecast_loss(&prediction, x);

        let losses = self
            .experts
            .iter_mut()
            .map(|e| e.observe(x))
            .collect::<Result<Vec<f64>>>()?;

        for (w, &l) in self.windows.iter_mut().zip(&losses) {
            if w.len() == self.window_k {
                w.pop_front();
            }
            w.push_back(l);
        }
        let b_t = self.windows.iter().flatten().copied().fold(0.0, f64::max);
        if b_t > 0.0 {
            let log_factor = (-self.eta).ln_1p();
            for (lw, &l) in self.log_weights.iter_mut().zip(&losses) {
                *lw += (l / b_t) * log_factor;
            }
        }
        self.steps += 1;
        Ok(StepRecord {
            chosen_expert: chosen,
            realized_loss: losses[chosen],
            prediction,
            prediction_loss,
            per_expert_losses: losses,
            weights_after: self.weight_snapshot(),
            b_t,
        })
    }
}
