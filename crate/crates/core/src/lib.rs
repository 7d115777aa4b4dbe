//! Online prediction for nonstationary time series.
//!
//! The crate provides:
//!
//! * differencing transforms (trend and seasonal) with their exact inverses,
//!   plus seeded SARIMA and error-corrected VARMA simulators ([`series`],
//!   [`transform`], [`simulate`], [`invertibility`]);
//! * online gradient descent over a truncated AR model of the transformed
//!   series, and a recursive least squares (follow-the-leader) predictor with
//!   its data-dependent regret bound ([`univariate`]);
//! * an error-corrected multivariate predictor that learns a low-rank
//!   cointegrating matrix through nuclear-norm projection ([`multivariate`]);
//! * a randomized weighted-majority meta-learner that picks the transform
//!   online ([`nonstop`]).
//!
//! ```
//! use onlinets::transform::TransformSpec;
//! use onlinets::univariate::{make_predictor, LearningRate, OgdConfig, PredictorKind};
//!
//! let spec = TransformSpec::new(1, 0, 1).unwrap();
//! let config = OgdConfig::new(4, LearningRate::Constant(0.01), 1.0).unwrap();
//! let mut model = make_predictor(PredictorKind::Arima, spec, config).unwrap();
//! for x in [1.0, 2.0, 3.0, 4.0] {
//!     model.update(x).unwrap();
//! }
//! // Zero coefficients on the differenced scale give a random-walk forecast.
//! assert!(model.predict().unwrap().is_finite());
//! ```

pub mod error;
pub mod invertibility;
pub mod linalg;
pub mod multivariate;
pub mod nonstop;
pub mod series;
pub mod simulate;
pub mod transform;
pub mod univariate;

pub use error::{Error, Result};
