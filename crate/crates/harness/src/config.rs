//! Experiment configuration and data-generating process presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use onlinets::simulate::{EcVarmaParams, SarimaParams};
use onlinets::transform::TransformSpec;
use onlinets::univariate::LearningRate;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HarnessError, Result};

/// Default `η₀` of the `η₀/√t` schedule for univariate predictors.
pub const DEFAULT_UNIVARIATE_ETA: f64 = 0.08;
/// Default constant step size for multivariate predictors.
pub const DEFAULT_MULTIVARIATE_ETA: f64 = 0.01;
/// Samples discarded from the ARMA core before recording.
pub const DEFAULT_BURN_IN: usize = 100;
/// MA coefficient of the ARIMA(0,1,1) preset.
pub const ARIMA_PRESET_THETA: f64 = -0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ArmaOgd,
    ArimaOgd,
    SarimaOgd,
    NonstopUni,
    VarmaOgd,
    EcvarmaOgd,
    NonstopMulti,
    FtlRls,
    RegretBound,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::ArmaOgd,
        Algorithm::ArimaOgd,
        Algorithm::SarimaOgd,
        Algorithm::NonstopUni,
        Algorithm::VarmaOgd,
        Algorithm::EcvarmaOgd,
        Algorithm::NonstopMulti,
        Algorithm::FtlRls,
        Algorithm::RegretBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ArmaOgd => "arma-ogd",
            Algorithm::ArimaOgd => "arima-ogd",
            Algorithm::SarimaOgd => "sarima-ogd",
            Algorithm::NonstopUni => "nonstop-uni",
            Algorithm::VarmaOgd => "varma-ogd",
            Algorithm::EcvarmaOgd => "ecvarma-ogd",
            Algorithm::NonstopMulti => "nonstop-multi",
            Algorithm::FtlRls => "ftl-rls",
            Algorithm::RegretBound => "regret-bound",
        }
    }

    pub fn is_multivariate(self) -> bool {
        matches!(
            self,
            Algorithm::VarmaOgd | Algorithm::EcvarmaOgd | Algorithm::NonstopMulti
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                invalid(format!(
                    "unknown algorithm {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Step-size schedule family; the magnitude comes from `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Constant,
    InverseSqrt,
}

impl FromStr for Schedule {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Schedule::Constant),
            "inverse-sqrt" => Ok(Schedule::InverseSqrt),
            _ => Err(invalid(format!(
                "unknown schedule {s:?}; expected constant or inverse-sqrt"
            ))),
        }
    }
}

/// Serializable SARIMA parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaDgp {
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub seasonal_ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
    #[serde(default)]
    pub seasonal_ma: Vec<f64>,
    pub d: usize,
    #[serde(default)]
    pub seasonal_d: usize,
    #[serde(default = "one")]
    pub period: usize,
    #[serde(default = "unit")]
    pub noise_sd: f64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl SarimaDgp {
    pub fn params(&self) -> Result<SarimaParams> {
        let p = SarimaParams {
            ar: self.ar.clone(),
            seasonal_ar: self.seasonal_ar.clone(),
            ma: self.ma.clone(),
            seasonal_ma: self.seasonal_ma.clone(),
            spec: TransformSpec::new(self.d, self.seasonal_d, self.period)?,
            noise_sd: self.noise_sd,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<&SarimaParams> for SarimaDgp {
    fn from(p: &SarimaParams) -> Self {
        Self {
            ar: p.ar.clone(),
            seasonal_ar: p.seasonal_ar.clone(),
            ma: p.ma.clone(),
            seasonal_ma: p.seasonal_ma.clone(),
            d: p.spec.d(),
            seasonal_d: p.spec.seasonal_d(),
            period: p.spec.period(),
            noise_sd: p.noise_sd,
        }
    }
}

/// Serializable error-correction VAR with `Π = α βᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcVarmaDgp {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default = "unit")]
    pub noise_sd: f64,
}

impl EcVarmaDgp {
    pub fn params(&self) -> Result<EcVarmaParams> {
        Ok(EcVarmaParams::rank_one(
            &self.alpha,
            &self.beta,
            self.noise_sd,
        )?)
    }
}

/// A simulated data source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dgp {
    Sarima(SarimaDgp),
    /// `first` up to `switch_at`, then `second` continuing from its level.
    Switching {
        first: SarimaDgp,
        second: SarimaDgp,
        switch_at: usize,
    },
    Ecvarma(EcVarmaDgp),
}

impl Dgp {
    /// The seasonal benchmark `ΔΔ₁₂x_t = (1 - 0.95B)(1 - 0.4B¹²)ε_t`.
    pub fn seasonal() -> Self {
        Dgp::Sarima((&SarimaParams::seasonal_benchmark()).into())
    }

    pub fn arima() -> Self {
        Dgp::Sarima((&SarimaParams::arima_011(ARIMA_PRESET_THETA)).into())
    }

    pub fn switching(switch_at: usize) -> Self {
        Dgp::Switching {
            first: (&SarimaParams::seasonal_benchmark()).into(),
            second: (&SarimaParams::arima_011(ARIMA_PRESET_THETA)).into(),
            switch_at,
        }
    }

    /// Four components; the first two share a stochastic trend and their
    /// spread mean-reverts with factor 0.5 per step.
    pub fn ecvarma() -> Self {
        Dgp::Ecvarma(EcVarmaDgp {
            alpha: vec![-0.25, 0.25, 0.0, 0.0],
            beta: vec![1.0, -1.0, 0.0, 0.0],
            noise_sd: 1.0,
        })
    }

    pub fn preset_names() -> [&'static str; 4] {
        ["seasonal", "arima", "switching", "ecvarma"]
    }

    /// Resolves a preset name, or reads a JSON description from a file.
    /// `switching` splits at `switch_at` (default a quarter of `horizon`).
    pub fn resolve(name_or_path: &str, switch_at: Option<usize>, horizon: usize) -> Result<Self> {
        match name_or_path {
            "seasonal" => Ok(Dgp::seasonal()),
            "arima" => Ok(Dgp::arima()),
            "switching" => Ok(Dgp::switching(switch_at.unwrap_or(horizon / 4))),
            "ecvarma" => Ok(Dgp::ecvarma()),
            path => {
                let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                    path: PathBuf::from(path),
                    source,
                })?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    pub fn is_multivariate(&self) -> bool {
        matches!(self, Dgp::Ecvarma(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum DataSource {
    Simulated(Dgp),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub spec: TransformSpec,
    pub lags: usize,
    /// Step size; `None` picks the family default.
    pub eta: Option<f64>,
    /// Schedule; `None` picks the family default.
    pub schedule: Option<Schedule>,
    pub rho: f64,
    pub window_k: usize,
    /// Number of steps `T`.
    pub horizon: usize,
    pub num_seeds: usize,
    pub base_seed: u64,
    pub log_input: bool,
    pub source: DataSource,
    pub output: Option<PathBuf>,
    /// Use the weighted-average ensemble prediction instead of sampling.
    pub avg_mode: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults: seasonal period 12 with `d = D = 1`, `M = 24`,
    /// `ρ = 0.5`, window 10, `T = 5000`, 20 seeds.
    pub fn new(algorithm: Algorithm, source: DataSource) -> Self {
        Self {
            algorithm,
            spec: TransformSpec::new(1, 1, 12).expect("valid spec"),
            lags: 24,
            eta: None,
            schedule: None,
            rho: 0.5,
            window_k: 10,
            horizon: 5000,
            num_seeds: 20,
            base_seed: 0,
            log_input: false,
            source,
            output: None,
            avg_mode: false,
        }
    }

    pub fn learning_rate(&self) -> LearningRate {
        let multi = self.algorithm.is_multivariate();
        let default_schedule = if multi {
            Schedule::Constant
        } else {
            Schedule::InverseSqrt
        };
        let default_eta = if multi {
            DEFAULT_MULTIVARIATE_ETA
        } else {
            DEFAULT_UNIVARIATE_ETA
        };
        let eta = self.eta.unwrap_or(default_eta);
        match self.schedule.unwrap_or(default_schedule) {
            Schedule::Constant => LearningRate::Constant(eta),
            Schedule::InverseSqrt => LearningRate::InverseSqrt(eta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("T must be >= 1"));
        }
        if self.num_seeds == 0 {
            return Err(invalid("need at least one seed"));
        }
        if self.lags == 0 {
            return Err(invalid("M must be >= 1"));
        }
        if self.window_k == 0 {
            return Err(invalid("window length must be >= 1"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(invalid(format!("eta must be positive, got {eta}")));
            }
        }
        if let DataSource::Simulated(dgp) = &self.source {
            if dgp.is_multivariate() != self.algorithm.is_multivariate() {
                return Err(invalid(format!(
                    "{} cannot run on this data-generating process",
                    self.algorithm
                )));
            }
            if let Dgp::Switching { switch_at, .. } = dgp {
                if *switch_at == 0 || *switch_at >= self.horizon {
                    return Err(invalid(format!(
                        "switch point {switch_at} must lie strictly between 0 and T = {}",
                        self.horizon
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn output_path(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}
