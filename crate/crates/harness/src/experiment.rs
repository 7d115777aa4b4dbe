//! Running configured algorithms over simulated or loaded data.

use std::fs;
use std::path::{Path, PathBuf};

use onlinets::multivariate::{EcVarmaConfig, EcVarmaState};
use onlinets::nonstop::{Ensemble, Expert, PredictionMode};
use onlinets::series::{log_transform, LogMode, MultiSeries, Series};
use onlinets::simulate::{simulate_ecvarma, simulate_sarima, SarimaParams};
use onlinets::transform::{difference, integrate, TransformSpec};
use onlinets::univariate::{
    ftl_regret_bound, lag_vectors, make_predictor, FtlPredictor, OgdConfig, PredictorKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Algorithm, DataSource, Dgp, ExperimentConfig, DEFAULT_BURN_IN};
use crate::data::{load_csv, Dataset, RunTrace};
use crate::error::{invalid, HarnessError, Result};

/// Splices a `b`-driven continuation onto a `first`-driven segment.
///
/// Both ARMA cores come from one seeded stream; the second segment is
/// integrated from the tail of the first, so the level is continuous.
pub fn make_switching_series(
    first: &SarimaParams,
    second: &SarimaParams,
    switch_at: usize,
    total: usize,
    seed: u64,
) -> Result<Series> {
    if switch_at == 0 || switch_at >= total {
        return Err(invalid(format!(
            "switch point {switch_at} must lie strictly between 0 and {total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core_a = first.arma_core(switch_at, DEFAULT_BURN_IN, &mut rng)?;
    let core_b = second.arma_core(total - switch_at, DEFAULT_BURN_IN, &mut rng)?;
    let mut path = integrate(&core_a, first.spec, &vec![0.0; first.spec.depth()])?;
    let depth = second.spec.depth();
    let mut initial = vec![0.0; depth.saturating_sub(path.len())];
    initial.extend_from_slice(&path[path.len().saturating_sub(depth)..]);
    path.extend(integrate(&core_b, second.spec, &initial)?);
    Ok(Series::new(path)?)
}

/// Draws one series of length `horizon` from `dgp`.
pub fn simulate(dgp: &Dgp, horizon: usize, seed: u64) -> Result<Dataset> {
    Ok(match dgp {
        Dgp::Sarima(p) => Dataset::Univariate(simulate_sarima(
            &p.params()?,
            horizon,
            DEFAULT_BURN_IN,
            seed,
        )?),
        Dgp::Switching {
            first,
            second,
            switch_at,
        } => Dataset::Univariate(make_switching_series(
            &first.params()?,
            &second.params()?,
            *switch_at,
            horizon,
            seed,
        )?),
        Dgp::Ecvarma(p) => Dataset::Multivariate(simulate_ecvarma(
            &p.params()?,
            horizon,
            DEFAULT_BURN_IN,
            seed,
        )?),
    })
}

fn apply_log(data: Dataset) -> Result<Dataset> {
    Ok(match data {
        Dataset::Univariate(s) => Dataset::Univariate(Series::new(log_transform(
            s.values(),
            LogMode::NaturalLog,
        )?)?),
        Dataset::Multivariate(m) => {
            let rows = m
                .values()
                .iter()
                .map(|r| log_transform(r, LogMode::NaturalLog))
                .collect::<onlinets::Result<Vec<_>>>()?;
            Dataset::Multivariate(MultiSeries::new(m.dim(), rows)?)
        }
    })
}

/// The three transforms compared by the regret-bound experiment:
/// identity, ordinary differencing of order `d`, and the full `spec`.
pub fn bound_transforms(spec: TransformSpec) -> Result<[TransformSpec; 3]> {
    Ok([
        TransformSpec::identity(),
        TransformSpec::new(spec.d(), 0, 1)?,
        spec,
    ])
}

/// Regret-bound partial sums aligned to the original time index: entry `t`
/// covers the lag vectors available by step `t + 1`.
pub fn bound_curve(x: &[f64], spec: TransformSpec, lags: usize) -> Result<Vec<Option<f64>>> {
    let mut out = vec![None; x.len()];
    if x.len() <= spec.depth() {
        return Ok(out);
    }
    let y = difference(x, spec)?;
    let trace = ftl_regret_bound(&lag_vectors(&y, lags))?;
    let offset = lags + spec.depth();
    for (j, v) in trace.partial_sums.into_iter().enumerate() {
        out[offset + j] = v;
    }
    Ok(out)
}

fn univariate_kind(algorithm: Algorithm) -> Option<PredictorKind> {
    match algorithm {
        Algorithm::ArmaOgd => Some(PredictorKind::Arma),
        Algorithm::ArimaOgd => Some(PredictorKind::Arima),
        Algorithm::SarimaOgd => Some(PredictorKind::Sarima),
        _ => None,
    }
}

fn spec_for(kind: PredictorKind, spec: TransformSpec) -> Result<TransformSpec> {
    Ok(match kind {
        PredictorKind::Arma => TransformSpec::identity(),
        PredictorKind::Arima => TransformSpec::new(spec.d(), 0, 1)?,
        PredictorKind::Sarima => spec,
    })
}

fn run_ensemble<E: Expert>(
    experts: Vec<E>,
    observations: impl Iterator<Item = Box<E::Observation>>,
    config: &ExperimentConfig,
    horizon: usize,
    seed: u64,
) -> Result<RunTrace> {
    let mode = if config.avg_mode {
        PredictionMode::WeightedAverage
    } else {
        PredictionMode::Sample
    };
    let mut ensemble = Ensemble::new(experts, config.window_k, horizon, seed)?.with_mode(mode);
    let mut loss = Vec::with_capacity(horizon);
    let mut weights = Vec::with_capacity(horizon);
    for x in observations {
        let record = ensemble.step(&x)?;
        loss.push(record.prediction_loss);
        weights.push(record.weights_after);
    }
    let mut trace = RunTrace::from_losses(loss);
    trace.weights = Some(weights);
    Ok(trace)
}

fn run_univariate(config: &ExperimentConfig, x: &[f64], seed: u64) -> Result<RunTrace> {
    let ogd = OgdConfig::new(config.lags, config.learning_rate(), 1.0)?;
    let mut losses = Vec::with_capacity(x.len());
    match config.algorithm {
        Algorithm::NonstopUni => {
            let experts = [
                PredictorKind::Arma,
                PredictorKind::Arima,
                PredictorKind::Sarima,
            ]
            .into_iter()
            .map(|k| Ok(make_predictor(k, spec_for(k, config.spec)?, ogd)?))
            .collect::<Result<Vec<_>>>()?;
            return run_ensemble(
                experts,
                x.iter().map(|&v| Box::new(v)),
                config,
                x.len(),
                seed,
            );
        }
        Algorithm::FtlRls | Algorithm::RegretBound => {
            let mut ftl = FtlPredictor::new(config.spec, config.lags)?;
            for &v in x {
                losses.push(ftl.update(v)?);
            }
        }
        algorithm => {
            let kind = univariate_kind(algorithm).expect("univariate algorithm");
            let mut p = make_predictor(kind, spec_for(kind, config.spec)?, ogd)?;
            for &v in x {
                losses.push(p.update(v)?);
            }
        }
    }
    let mut trace = RunTrace::from_losses(losses);
    if config.algorithm == Algorithm::RegretBound {
        let [a, b, c] = bound_transforms(config.spec)?;
        trace.bounds = Some([
            bound_curve(x, a, config.lags)?,
            bound_curve(x, b, config.lags)?,
            bound_curve(x, c, config.lags)?,
        ]);
    }
    Ok(trace)
}

fn run_multivariate(config: &ExperimentConfig, data: &MultiSeries, seed: u64) -> Result<RunTrace> {
    let k = data.dim();
    let lr = config.learning_rate();
    let ec = || EcVarmaConfig::error_correction(k, config.lags, lr, config.rho);
    let varma = || EcVarmaConfig::varma(k, config.lags, lr);
    let single = |c: EcVarmaConfig| -> Result<RunTrace> {
        let mut state = EcVarmaState::new(c);
        let losses = data
            .values()
            .iter()
            .map(|x| state.update(x))
            .collect::<onlinets::Result<Vec<_>>>()?;
        Ok(RunTrace::from_losses(losses))
    };
    match config.algorithm {
        Algorithm::EcvarmaOgd => single(ec()?),
        Algorithm::VarmaOgd => single(varma()?),
        Algorithm::NonstopMulti => {
            let experts = vec![EcVarmaState::new(ec()?), EcVarmaState::new(varma()?)];
            let obs = data.values().iter().map(|r| r.clone().into_boxed_slice());
            run_ensemble(experts, obs, config, data.len(), seed)
        }
        other => Err(invalid(format!("{other} is not a multivariate algorithm"))),
    }
}

/// Runs the configured algorithm once on `data`; `seed` drives any sampling.
pub fn run_on_dataset(config: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<RunTrace> {
    match (data, config.algorithm.is_multivariate()) {
        (Dataset::Univariate(s), false) => run_univariate(config, s.values(), seed),
        (Dataset::Multivariate(m), true) => run_multivariate(config, m, seed),
        (Dataset::Univariate(_), true) => Err(invalid(format!(
            "{} needs a multivariate series",
            config.algorithm
        ))),
        (Dataset::Multivariate(m), false) => Err(invalid(format!(
            "{} needs a univariate series, got {} columns",
            config.algorithm,
            m.dim()
        ))),
    }
}

/// Simulates (or loads) the data for one seed and runs the algorithm on it.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunTrace> {
    let data = match &config.source {
        DataSource::Simulated(dgp) => simulate(dgp, config.horizon, seed)?,
        DataSource::File(path) => truncate(load_csv(path)?, config.horizon)?,
    };
    let data = if config.log_input {
        apply_log(data)?
    } else {
        data
    };
    run_on_dataset(config, &data, seed)
}

fn truncate(data: Dataset, horizon: usize) -> Result<Dataset> {
    Ok(match data {
        Dataset::Univariate(s) if s.len() > horizon => {
            Dataset::Univariate(Series::new(s.values()[..horizon].to_vec())?)
        }
        Dataset::Multivariate(m) if m.len() > horizon => {
            Dataset::Multivariate(MultiSeries::new(m.dim(), m.values()[..horizon].to_vec())?)
        }
        other => other,
    })
}

/// Pointwise mean of per-seed traces; `None` bound cells stay undefined
/// unless every seed has a value.
pub fn average_traces(traces: &[RunTrace]) -> Result<RunTrace> {
    let first = traces
        .first()
        .ok_or_else(|| invalid("no traces to average"))?;
    let len = first.len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(invalid("traces differ in length"));
    }
    if traces.len() == 1 {
        return Ok(first.clone());
    }
    let n = traces.len() as f64;
    let mean = |f: &dyn Fn(&RunTrace) -> &[f64]| -> Vec<f64> {
        (0..len)
            .map(|i| traces.iter().map(|t| f(t)[i]).sum::<f64>() / n)
            .collect()
    };
    let mut out = RunTrace {
        loss: mean(&|t| &t.loss),
        log_avg_loss: mean(&|t| &t.log_avg_loss),
        weights: None,
        bounds: None,
    };
    if first.weights.is_some() {
        let width = first
            .weights
            .as_ref()
            .and_then(|w| w.first())
            .map_or(0, Vec::len);
        out.weights = Some(
            (0..len)
                .map(|i| {
                    (0..width)
                        .map(|j| {
                            traces
                                .iter()
                                .map(|t| t.weights.as_ref().map_or(0.0, |w| w[i][j]))
                                .sum::<f64>()
                                / n
                        })
                        .collect()
                })
                .collect(),
        );
    }
    if first.bounds.is_some() {
        let column = |k: usize| -> Vec<Option<f64>> {
            (0..len)
                .map(|i| {
                    traces
                        .iter()
                        .map(|t| t.bounds.as_ref().and_then(|b| b[k][i]))
                        .sum::<Option<f64>>()
                        .map(|s| s / n)
                })
                .collect()
        };
        out.bounds = Some([column(0), column(1), column(2)]);
    }
    Ok(out)
}

/// Runs every seed (in parallel) and averages the traces in seed order.
/// Writes the result when `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunTrace> {
    config.validate()?;
    let seeds: Vec<u64> = match config.source {
        DataSource::Simulated(_) => (0..config.num_seeds as u64)
            .map(|i| config.base_seed.wrapping_add(i))
            .collect(),
        DataSource::File(_) => vec![config.base_seed],
    };
    let traces = seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect::<Result<Vec<_>>>()?;
    let trace = average_traces(&traces)?;
    if let Some(path) = config.output_path() {
        write_atomically(&trace, path)?;
    }
    Ok(trace)
}

/// Writes next to `path` and renames, so a failed run leaves no partial file.
pub fn write_atomically(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    tmp.as_mut_os_string().push(".partial");
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let result = fs::File::create(&tmp)
        .map_err(io_err)
        .and_then(|f| trace.write_csv(std::io::BufWriter::new(f)))
        .and_then(|()| fs::rename(&tmp, path).map_err(io_err));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switching_splice_is_level_continuous() {
        let a = SarimaParams::seasonal_benchmark();
        let b = SarimaParams::arima_011(-0.5);
        let x = make_switching_series(&a, &b, 50, 80, 3).unwrap();
        assert_eq!(x.len(), 80);
        // After the split, first differences follow b's MA(1) core.
        let dx = difference(&x.values()[49..], b.spec).unwrap();
        assert!(dx.iter().all(|v| v.abs() < 10.0));
        assert!(make_switching_series(&a, &b, 80, 80, 3).is_err());
        assert!(make_switching_series(&a, &b, 0, 80, 3).is_err());
    }

    #[test]
    fn bound_curve_alignment() {
        let x: Vec<f64> = (0..30).map(|t| ((t * t) % 7) as f64).collect();
        let spec = TransformSpec::new(1, 0, 1).unwrap();
        let curve = bound_curve(&x, spec, 2).unwrap();
        assert_eq!(curve.len(), 30);
        assert!(curve[..3].iter().all(Option::is_none));
    }

    #[test]
    fn averaging_requires_every_bound() {
        let mut a = RunTrace::from_losses(vec![1.0, 3.0]);
        let mut b = RunTrace::from_losses(vec![3.0, 1.0]);
        a.bounds = Some([
            vec![None, Some(2.0)],
            vec![Some(1.0), Some(1.0)],
            vec![None, None],
        ]);
        b.bounds = Some([
            vec![Some(4.0), Some(4.0)],
            vec![Some(3.0), Some(1.0)],
            vec![None, None],
        ]);
        let avg = average_traces(&[a, b]).unwrap();
        assert_eq!(avg.loss, vec![2.0, 2.0]);
        let bounds = avg.bounds.unwrap();
        assert_eq!(bounds[0], vec![None, Some(3.0)]);
        assert_eq!(bounds[1], vec![Some(2.0), Some(1.0)]);
    }
}
