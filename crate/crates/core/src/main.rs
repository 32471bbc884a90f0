use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use risdam::harness::checks::{ergodic_monte_carlo, invariant_suite};
use risdam::harness::config::dbm_to_watts;
use risdam::harness::output::to_csv;
use risdam::harness::presets::{run_figure, FULL_TRIALS, PRESET_TRIALS};
use risdam::harness::sweep::scenario_schemes;
use risdam::harness::{sweep, write_results, Config, Figure, PresetOptions, RateReport, Scenario, SweepVar};
use risdam::ofdm::OfdmParams;
use risdam::{Error, Result};

#[derive(Parser)]
#[command(name = "risdam", version, about = "Rate simulation for delay-adjustable RIS-assisted OFDM links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Results CSV; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a scenario file over an overriding sweep.
    Sweep {
        scenario: PathBuf,
        /// Sweep variable, e.g. d_BU_x, P, M_z, N, eta.
        #[arg(long = "var")]
        var: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the randomized invariant suite.
    Validate {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Compare the ergodic-rate closed form with Monte Carlo.
    Lemma2 {
        #[arg(long, value_delimiter = ',', default_value = "8,64")]
        elements: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a figure preset (5, 6, 7, 8, 9, 10, 11a, 11b).
    Figure {
        figure: String,
        /// Run 1000 trials.
        #[arg(long, conflicts_with = "trials")]
        full: bool,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also run the SDR-based AO for the optimal schemes where shown.
        #[arg(long)]
        ao: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn emit(table: &[RateReport], output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => write_results(table, path),
        None => to_csv(table, std::io::stdout().lock())
            .map_err(|source| Error::Csv { path: PathBuf::from("<stdout>"), source }),
    }
}

fn load(path: &Path, trials: Option<usize>, seed: Option<u64>) -> Result<Config> {
    let mut config = Config::load(path)?;
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { scenario, trials, seed, output } => {
            let scenario = Scenario::from_config(load(&scenario, trials, seed)?)?;
            emit(&sweep(&scenario, &scenario_schemes(&scenario))?, output.as_deref())?;
        }
        Command::Sweep { scenario, var, values, trials, seed, output } => {
            let mut config = load(&scenario, trials, seed)?;
            let var: SweepVar = var.parse()?;
            config.sweep_variable = Some(var.name().to_string());
            config.sweep_values = values;
            let scenario = Scenario::from_config(config)?;
            emit(&sweep(&scenario, &scenario_schemes(&scenario))?, output.as_deref())?;
        }
        Command::Validate { seeds } => {
            let reports = invariant_suite(seeds)?;
            for r in &reports {
                println!("{r}");
            }
            return Ok(reports.iter().all(|r| r.passed()));
        }
        Command::Lemma2 { elements, trials, seed } => {
            let amplitudes: Vec<f64> =
                [-115.0, -120.0, -125.0].iter().map(|db| (10f64.powf(db / 10.0)).sqrt()).collect();
            let params = OfdmParams {
                subcarriers: 1024,
                cp_len: 16,
                noise_power: dbm_to_watts(-80.0),
                snr_gap: 1.0,
                total_power: dbm_to_watts(20.0),
            };
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "elements,closed_form,monte_carlo,std_error,relative_error");
            for m in elements {
                let c = ergodic_monte_carlo(m, &amplitudes, &params, trials, seed)?;
                let _ = writeln!(
                    out,
                    "{m},{:.8e},{:.8e},{:.8e},{:.8e}",
                    c.closed_form,
                    c.monte_carlo,
                    c.std_error,
                    c.relative_error()
                );
            }
        }
        Command::Figure { figure, full, trials, seed, ao, output } => {
            let figure: Figure = figure.parse()?;
            let trials = trials.unwrap_or(if full { FULL_TRIALS } else { PRESET_TRIALS });
            let table = run_figure(figure, PresetOptions { trials, seed, with_ao: ao })?;
            emit(&table, output.as_deref())?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
