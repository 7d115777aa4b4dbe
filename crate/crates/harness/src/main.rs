use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use onlinets::transform::TransformSpec;
use onlinets_harness::config::{Algorithm, DataSource, Dgp, ExperimentConfig, Schedule};
use onlinets_harness::run_experiment;

#[derive(Debug, Parser)]
#[command(
    name = "onlinets",
    version,
    about = "Run online time-series prediction experiments"
)]
struct Cli {
    /// arma-ogd, arima-ogd, sarima-ogd, nonstop-uni, varma-ogd, ecvarma-ogd,
    /// nonstop-multi, ftl-rls or regret-bound
    #[arg(long)]
    algo: Algorithm,
    /// Ordinary differencing order
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Seasonal differencing order
    #[arg(long = "seasonal-d", default_value_t = 1)]
    seasonal_d: usize,
    /// Seasonal period
    #[arg(long, default_value_t = 12)]
    s: usize,
    /// Number of AR (or EC-VAR) lags
    #[arg(long, default_value_t = 24)]
    m: usize,
    /// Step size (η₀ for the inverse-sqrt schedule); family default if unset
    #[arg(long)]
    eta: Option<f64>,
    /// constant or inverse-sqrt; family default if unset
    #[arg(long = "eta-schedule")]
    eta_schedule: Option<Schedule>,
    /// Nuclear-norm radius for the cointegration matrix
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Loss window of the ensemble
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Steps per run
    #[arg(long, default_value_t = 5000)]
    t: usize,
    /// Number of simulated series
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// First seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Take natural logs of the data first
    #[arg(long)]
    log_input: bool,
    /// Preset (seasonal, arima, switching, ecvarma) or a JSON file
    #[arg(long, conflicts_with = "input")]
    dgp: Option<String>,
    /// CSV file with a header row, one column per component
    #[arg(long)]
    input: Option<PathBuf>,
    /// Where to write the trace CSV; stdout if unset
    #[arg(long)]
    output: Option<PathBuf>,
    /// Switch point of the switching preset
    #[arg(long = "switch-at")]
    switch_at: Option<usize>,
    /// Ensemble predicts the weighted average instead of sampling an expert
    #[arg(long = "avg-mode")]
    avg_mode: bool,
}

fn build_config(cli: Cli) -> anyhow::Result<ExperimentConfig> {
    let source = match (cli.input, cli.dgp) {
        (Some(path), _) => DataSource::File(path),
        (None, Some(dgp)) => DataSource::Simulated(Dgp::resolve(&dgp, cli.switch_at, cli.t)?),
        (None, None) if cli.algo.is_multivariate() => DataSource::Simulated(Dgp::ecvarma()),
        (None, None) => match cli.switch_at {
            Some(at) => DataSource::Simulated(Dgp::switching(at)),
            None => DataSource::Simulated(Dgp::seasonal()),
        },
    };
    let mut config = ExperimentConfig::new(cli.algo, source);
    config.spec = TransformSpec::new(cli.d, cli.seasonal_d, cli.s).context("transform")?;
    config.lags = cli.m;
    config.eta = cli.eta;
    config.schedule = cli.eta_schedule;
    config.rho = cli.rho;
    config.window_k = cli.window;
    config.horizon = cli.t;
    config.num_seeds = cli.seeds;
    config.base_seed = cli.seed;
    config.log_input = cli.log_input;
    config.output = cli.output;
    config.avg_mode = cli.avg_mode;
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = build_config(cli)?;
    let trace = run_experiment(&config)?;
    if config.output.is_none() {
        trace.write_csv(std::io::stdout().lock())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
