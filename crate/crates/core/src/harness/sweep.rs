//! Monte Carlo sweeps over scenario parameters.

use rayon::prelude::*;

use crate::error::Result;

use super::config::{Scenario, SweepVar};
use super::scheme::{evaluate_scheme, trial_channels, SchemeSpec};

/// Aggregated rates of one scheme at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub scheme: SchemeSpec,
    pub sweep: Option<(SweepVar, f64)>,
    pub seed: u64,
    /// Rates of the successful trials, in trial order.
    pub rates: Vec<f64>,
    pub failed_trials: usize,
    pub mean_rate: f64,
    pub std_error: f64,
}

impl RateReport {
    pub fn new(
        scheme: SchemeSpec,
        sweep: Option<(SweepVar, f64)>,
        seed: u64,
        rates: Vec<f64>,
        failed_trials: usize,
    ) -> Self {
        let n = rates.len();
        let mean_rate = if n == 0 { f64::NAN } else { rates.iter().sum::<f64>() / n as f64 };
        let std_error = if n < 2 {
            0.0
        } else {
            let var = rates.iter().map(|r| (r - mean_rate).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { scheme, sweep, seed, rates, failed_trials, mean_rate, std_error }
    }

    pub fn trials(&self) -> usize {
        self.rates.len() + self.failed_trials
    }
}

/// Runs every scheme on the trials of one scenario. Channels are drawn once
/// per trial and shared by all schemes.
///
/// Configuration errors abort the run; other per-trial failures are counted
/// in [`RateReport::failed_trials`].
pub fn run_point(
    scenario: &Scenario,
    schemes: &[SchemeSpec],
    sweep: Option<(SweepVar, f64)>,
) -> Result<Vec<RateReport>> {
    let per_trial: Vec<Result<Vec<Result<f64>>>> = (0..scenario.trials)
        .into_par_iter()
        .map(|t| {
            let (truth, view) = trial_channels(scenario, t)?;
            Ok(schemes.iter().map(|s| evaluate_scheme(scenario, s, &truth, &view, t)).collect())
        })
        .collect();

    let mut rates = vec![Vec::with_capacity(scenario.trials); schemes.len()];
    let mut failed = vec![0; schemes.len()];
    for trial in per_trial {
        match trial {
            Err(e) if e.is_config() => return Err(e),
            Err(_) => failed.iter_mut().for_each(|f| *f += 1),
            Ok(row) => {
                for (i, r) in row.into_iter().enumerate() {
                    match r {
                        Ok(x) => rates[i].push(x),
                        Err(e) if e.is_config() => return Err(e),
                        Err(_) => failed[i] += 1,
                    }
                }
            }
        }
    }
    Ok(schemes
        .iter()
        .zip(rates)
        .zip(failed)
        .map(|((scheme, rates), failed)| RateReport::new(*scheme, sweep, scenario.seed, rates, failed))
        .collect())
}

/// Full sweep: every sweep value × every scheme × every trial. Without a
/// sweep variable the scenario is run once as is.
pub fn sweep(scenario: &Scenario, schemes: &[SchemeSpec]) -> Result<Vec<RateReport>> {
    match &scenario.sweep {
        None => run_point(scenario, schemes, None),
        Some((var, values)) => {
            let mut table = Vec::with_capacity(values.len() * schemes.len());
            for &v in values {
                let point = scenario.at(*var, v)?;
                table.extend(run_point(&point, schemes, Some((*var, v)))?);
            }
            Ok(table)
        }
    }
}

/// Schemes listed in the scenario, with its optimizer choice.
pub fn scenario_schemes(scenario: &Scenario) -> Vec<SchemeSpec> {
    scenario
        .scheme_indices()
        .iter()
        .map(|&i| SchemeSpec::from_index(i, scenario.optimizer).expect("validated at load"))
        .collect()
}
