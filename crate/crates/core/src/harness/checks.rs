//! Ergodic-rate Monte Carlo comparison and the randomized invariant suite.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{complex_gaussian, ReflectedChannelSet, TapVector};
use crate::error::Result;
use crate::ofdm::{achievable_rate, ergodic_rate_closed_form, pattern_cfr, rate_upper_bound, Cfr, OfdmParams};
use crate::power::{equal_power, waterfill_with_level, PowerAllocation};
use crate::reflection::{feasible_delay_bounds, DamHardware, ReflectionPattern};
use crate::rng::stream;
use crate::sta::{align_sum_tap, run_sta, solve_power, sta_configure};

use super::config::{Config, Scenario};
use super::scheme::trial_channels;

/// One-tap channels `h_{k,m} ~ CN(0, ρ_k²)` with RIS `k` arriving at tap `k`.
pub fn one_tap_set<R: Rng + ?Sized>(elements: usize, amplitudes: &[f64], rng: &mut R) -> Result<ReflectedChannelSet> {
    let channels = amplitudes
        .iter()
        .enumerate()
        .map(|(k, rho)| (0..elements).map(|_| TapVector::impulse(k, complex_gaussian(rng, rho * rho))).collect())
        .collect();
    ReflectedChannelSet::from_channels(channels)
}

/// Closed form next to its Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicComparison {
    pub elements: usize,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
}

impl ErgodicComparison {
    pub fn relative_error(&self) -> f64 {
        (self.monte_carlo - self.closed_form).abs() / self.closed_form
    }
}

/// Mean STA rate over `trials` one-tap realizations, against the closed form.
pub fn ergodic_monte_carlo(
    elements: usize,
    amplitudes: &[f64],
    params: &OfdmParams,
    trials: usize,
    seed: u64,
) -> Result<ErgodicComparison> {
    let hw = DamHardware::lossless(params.cp_len);
    let rates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[t as u64]);
            let set = one_tap_set(elements, amplitudes, &mut rng)?;
            Ok(run_sta(&set, params, &hw)?.rate)
        })
        .collect::<Result<_>>()?;
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(ErgodicComparison {
        elements,
        closed_form: ergodic_rate_closed_form(elements, amplitudes, params),
        monte_carlo: mean,
        std_error: (var / n).sqrt(),
    })
}

/// Outcome of one invariant over a batch of random seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed violation margin, 0 when none.
    pub worst: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn tally(name: &'static str, margins: impl IntoIterator<Item = f64>) -> Self {
        let mut cases = 0;
        let mut violations = 0;
        let mut worst = 0.0f64;
        for m in margins {
            cases += 1;
            if m > 0.0 {
                violations += 1;
                worst = worst.max(m);
            }
        }
        Self { name, cases, violations, worst }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<22} {} cases, {} violations", self.name, self.cases, self.violations)?;
        if !self.passed() {
            write!(f, " (worst margin {:.3e})", self.worst)?;
        }
        Ok(())
    }
}

fn unit_params(n: usize, cp: usize) -> OfdmParams {
    OfdmParams { subcarriers: n, cp_len: cp, noise_power: 1.0, snr_gap: 1.0, total_power: 1.0 }
}

/// STA on one-tap channels gives a flat CFR of magnitude `Σ|h|` and equal power.
pub fn check_one_tap_coherence(seeds: u64) -> Result<CheckReport> {
    let margins = (0..seeds)
        .map(|seed| {
            let mut rng = stream(seed, &[1]);
            let k = rng.random_range(1..=5);
            let taps: Vec<(usize, Complex64)> =
                (0..k).map(|_| (rng.random_range(0..8), complex_gaussian(&mut rng, 1.0))).collect();
            let set = ReflectedChannelSet::from_channels(
                taps.iter().map(|&(l, h)| vec![TapVector::impulse(l, h)]).collect(),
            )?;
            let params = unit_params(64, 8);
            let sol = run_sta(&set, &params, &DamHardware::lossless(8))?;
            let d = pattern_cfr(&set, &sol.pattern, &params, &DamHardware::lossless(8))?;
            let target: f64 = taps.iter().map(|(_, h)| h.norm()).sum();
            let flat = d.d.iter().map(|x| (x.norm() - target).abs() - 1e-10).fold(f64::MIN, f64::max);
            let equal = sol.power.powers().iter().map(|p| (p - 1.0 / 64.0).abs() - 1e-9).fold(f64::MIN, f64::max);
            Ok(flat.max(equal))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::tally("one-tap-coherence", margins))
}

fn random_set<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize) -> Result<ReflectedChannelSet> {
    let channels = (0..k)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let first = rng.random_range(0..4);
                    let len = rng.random_range(1..6);
                    TapVector::new(first, (0..len).map(|_| complex_gaussian(rng, 1.0)).collect())
                })
                .collect()
        })
        .collect();
    ReflectedChannelSet::from_channels(channels)
}

fn random_allocation<R: Rng + ?Sized>(rng: &mut R, n: usize, budget: f64) -> Result<PowerAllocation> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    PowerAllocation::new(w.iter().map(|x| x / s * budget).collect(), budget)
}

/// Jensen: the upper bound dominates the rate for arbitrary patterns and allocations.
pub fn check_jensen(seeds: u64) -> Result<CheckReport> {
    let margins = (0..seeds)
        .map(|seed| {
            let mut rng = stream(seed, &[2]);
            let params = unit_params(32, 12);
            let hw = DamHardware::new(12, rng.random_range(0.8..=1.0))?;
            let (k, m) = (rng.random_range(1..4), rng.random_range(1..5));
            let set = random_set(&mut rng, k, m)?;
            let bounds = feasible_delay_bounds(&set, params.cp_len, &hw)?;
            let phase = (0..set.num_ris())
                .map(|_| (0..set.elements_per_ris()).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect())
                .collect();
            let delay = bounds
                .iter()
                .map(|&b| (0..set.elements_per_ris()).map(|_| rng.random_range(0..=b)).collect())
                .collect();
            let pattern = ReflectionPattern::new(phase, delay)?;
            let d = pattern_cfr(&set, &pattern, &params, &hw)?;
            let p = random_allocation(&mut rng, params.subcarriers, params.total_power)?;
            let r = achievable_rate(&d, &p, &params);
            Ok(r - rate_upper_bound(&d, &p, &params) - 1e-12 * r.abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::tally("jensen-bound", margins))
}

/// Water-filling KKT conditions and absence of an improving ε-transfer.
pub fn check_waterfill(seeds: u64) -> Result<CheckReport> {
    let margins = (0..seeds)
        .map(|seed| {
            let mut rng = stream(seed, &[3]);
            let n = rng.random_range(2..64);
            let budget = 10f64.powf(rng.random_range(-2.0..2.0));
            let params = OfdmParams { total_power: budget, ..unit_params(n, 0) };
            let d = Cfr { d: (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect() };
            let (p, level) = waterfill_with_level(&d, &params)?;
            let mut margin = (p.total() - budget).abs() - 1e-9 * budget;
            for (pn, g) in p.powers().iter().zip(d.gains()) {
                let m = if *pn > 0.0 {
                    (level - 1.0 / g - pn).abs() - 1e-8 * budget.max(1.0)
                } else {
                    level - 1.0 / g - 1e-12
                };
                margin = margin.max(m);
            }
            let base = achievable_rate(&d, &p, &params);
            let eps = 1e-6 * budget;
            for a in 0..n {
                if p.powers()[a] < eps {
                    continue;
                }
                let b = (a + 1 + rng.random_range(0..n - 1)) % n;
                let mut moved = p.powers().to_vec();
                moved[a] -= eps;
                moved[b] += eps;
                let r = achievable_rate(&d, &PowerAllocation::new(moved, budget)?, &params);
                margin = margin.max(r - base - 1e-12 * base);
            }
            Ok(margin)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::tally("waterfill-kkt", margins))
}

/// Flat channels water-fill to exactly equal power.
pub fn check_flat_waterfill(seeds: u64) -> Result<CheckReport> {
    let margins = (0..seeds)
        .map(|seed| {
            let mut rng = stream(seed, &[4]);
            let n = rng.random_range(1..128);
            let g = complex_gaussian(&mut rng, 1.0);
            let params = OfdmParams { total_power: rng.random_range(0.01..100.0), ..unit_params(n, 0) };
            let (p, _) = waterfill_with_level(&Cfr { d: vec![g; n] }, &params)?;
            let eq = equal_power(n, params.total_power)?;
            Ok(p.powers()
                .iter()
                .zip(eq.powers())
                .map(|(a, b)| (a - b).abs() - 1e-12 * params.total_power)
                .fold(f64::MIN, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::tally("waterfill-flat", margins))
}

/// STA never loses to the delay-free tap alignment baseline.
pub fn check_sta_dominance(seeds: u64, config: &Config) -> Result<CheckReport> {
    let scenario = Scenario::from_config(Config {
        trials: seeds as usize,
        csi_error_var: 0.0,
        pilot_power_dbm: None,
        ..config.clone()
    })?;
    let margins = (0..seeds as usize)
        .into_par_iter()
        .map(|t| {
            let (set, _) = trial_channels(&scenario, t)?;
            let sta = solve_power(
                &set,
                sta_configure(&set, scenario.ofdm.cp_len, &scenario.hw)?,
                &scenario.ofdm,
                &scenario.hw,
            )?;
            let base = solve_power(&set, align_sum_tap(&set), &scenario.ofdm, &scenario.hw)?;
            Ok(base.rate - sta.rate - 1e-12 * base.rate)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::tally("sta-dominance", margins))
}

/// Runs the invariant suite over `seeds` random seeds each.
pub fn invariant_suite(seeds: u64) -> Result<Vec<CheckReport>> {
    let dominance = Config { m_z: 4, subcarriers: 256, ..Config::default() };
    Ok(vec![
        check_one_tap_coherence(seeds)?,
        check_jensen(seeds)?,
        check_waterfill(seeds)?,
        check_flat_waterfill(seeds)?,
        check_sta_dominance(seeds, &dominance)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_few_seeds() {
        for r in invariant_suite(8).unwrap() {
            assert!(r.passed(), "{r}");
            assert_eq!(r.cases, 8);
        }
    }

    #[test]
    fn ergodic_small_run_is_close() {
        let params = OfdmParams { subcarriers: 64, cp_len: 8, noise_power: 1e-2, snr_gap: 1.0, total_power: 1.0 };
        let c = ergodic_monte_carlo(32, &[1.0, 0.5], &params, 200, 9).unwrap();
        assert!(c.relative_error() < 0.05, "{c:?}");
        assert_eq!(c, ergodic_monte_carlo(32, &[1.0, 0.5], &params, 200, 9).unwrap());
    }

    #[test]
    fn report_display() {
        let r = CheckReport::tally("x", [-1.0, 0.5]);
        assert!(!r.passed());
        assert!(r.to_string().starts_with("FAIL x"));
    }
}
