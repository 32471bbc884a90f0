//! Alternating optimization of the reflection pattern and the power
//! allocation, with an exhaustive search over delay candidates.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::channel::ReflectedChannelSet;
use crate::error::{Error, Result};
use crate::ofdm::{achievable_rate, pattern_cfr, OfdmParams};
use crate::power::{waterfill, PowerAllocation};
use crate::reflection::{feasible_delay_bounds, DamHardware, ReflectionPattern};
use crate::rng::stream;
use crate::sdp::{build_reflection_quadratic, expand_groups, gaussian_randomize, solve_sdp};
use crate::sta::LinkSolution;

/// How delays are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayMode {
    /// One delay shared by all elements of a RIS.
    PerRisCommon,
    /// Independent delay per element.
    PerElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig {
    /// Number of initial power vectors J.
    pub inits: usize,
    /// Gaussian randomization trials Q.
    pub randomizations: usize,
    pub max_outer_iters: usize,
    /// Relative rate improvement below which the loop stops.
    pub convergence_tol: f64,
    pub delay_mode: DelayMode,
    /// Adjacent elements sharing one coefficient.
    pub group_size: usize,
    /// Largest delay-candidate set searched.
    pub candidate_cap: usize,
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
    pub seed: u64,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            inits: 10,
            randomizations: 100,
            max_outer_iters: 20,
            convergence_tol: 1e-4,
            delay_mode: DelayMode::PerRisCommon,
            group_size: 1,
            candidate_cap: 4096,
            sdp_tol: 1e-6,
            sdp_max_iter: 2000,
            seed: 0,
        }
    }
}

impl AoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inits < 1 || self.randomizations < 1 || self.max_outer_iters < 1 {
            return Err(Error::InvalidScenario("J, Q and the iteration limit must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) || !(self.sdp_tol > 0.0) {
            return Err(Error::InvalidScenario("tolerances must be positive".into()));
        }
        if self.group_size < 1 {
            return Err(Error::InvalidScenario("group size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Enumerates delay assignments `delays[k][m]` with `delays[k][m] <= bounds[k]`.
///
/// Candidates are listed in mixed-radix order with the first coordinate
/// varying fastest, so a componentwise-smaller assignment always comes first.
pub fn delay_candidates(
    bounds: &[usize],
    elements_per_ris: usize,
    mode: DelayMode,
    cap: usize,
) -> Result<Vec<Vec<Vec<usize>>>> {
    let radices: Vec<usize> = match mode {
        DelayMode::PerRisCommon => bounds.iter().map(|b| b + 1).collect(),
        DelayMode::PerElement => bounds.iter().flat_map(|&b| std::iter::repeat_n(b + 1, elements_per_ris)).collect(),
    };
    let size = radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
    if size > cap as u128 {
        return Err(Error::TooManyCandidates { size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut digits = vec![0usize; radices.len()];
    for _ in 0..size {
        let delays = match mode {
            DelayMode::PerRisCommon => digits.iter().map(|&d| vec![d; elements_per_ris]).collect(),
            DelayMode::PerElement => digits.chunks(elements_per_ris).map(<[usize]>::to_vec).collect(),
        };
        out.push(delays);
        for (d, r) in digits.iter_mut().zip(&radices) {
            *d += 1;
            if *d < *r {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Reflection pattern chosen for a fixed power allocation.
#[derive(Debug, Clone)]
pub struct ReflectionChoice {
    pub pattern: ReflectionPattern,
    /// Power-weighted CFR energy `Σ p_n |d_n|²` of `pattern`.
    pub objective: f64,
    /// Relaxation value at the selected delays.
    pub sdp_objective: f64,
    /// Index of the selected delay candidate.
    pub candidate: usize,
}

/// Searches every delay candidate for the pattern maximizing
/// `Σ_n p_n |d_n|²`. Randomization for candidate `c` draws from the stream
/// `tags ++ [c]`.
pub fn optimize_reflection(
    channels: &ReflectedChannelSet,
    p: &PowerAllocation,
    params: &OfdmParams,
    hw: &DamHardware,
    cfg: &AoConfig,
    tags: &[u64],
) -> Result<ReflectionChoice> {
    let bounds = feasible_delay_bounds(channels, params.cp_len, hw)?;
    let candidates = delay_candidates(&bounds, channels.elements_per_ris(), cfg.delay_mode, cfg.candidate_cap)?;
    let evaluated: Vec<Result<(f64, f64, Vec<Complex64>)>> = candidates
        .par_iter()
        .enumerate()
        .map(|(c, delays)| {
            let r = build_reflection_quadratic(channels, delays, p, params.subcarriers, hw, cfg.group_size)?;
            let sol = solve_sdp(&r, cfg.sdp_tol, cfg.sdp_max_iter);
            let mut rng_tags = tags.to_vec();
            rng_tags.push(c as u64);
            let rounded = gaussian_randomize(&sol, &r, cfg.randomizations, &mut stream(cfg.seed, &rng_tags));
            Ok((rounded.objective, sol.objective, rounded.phi))
        })
        .collect();

    let mut best: Option<(usize, f64, f64, Vec<Complex64>)> = None;
    for (c, item) in evaluated.into_iter().enumerate() {
        let (objective, sdp_objective, phi) = item?;
        // Near-ties keep the earlier candidate so the choice is reproducible.
        if best.as_ref().is_none_or(|b| objective > b.1 * (1.0 + 1e-12)) {
            best = Some((c, objective, sdp_objective, phi));
        }
    }
    let (candidate, objective, sdp_objective, phi) = best.expect("candidate set is never empty");
    let coefficients = expand_groups(&phi, channels.num_ris(), channels.elements_per_ris(), cfg.group_size);
    let pattern = ReflectionPattern::from_coefficients(&coefficients, candidates[candidate].clone())?;
    Ok(ReflectionChoice { pattern, objective, sdp_objective, candidate })
}

/// Result of [`alternating_optimize`].
#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub solution: LinkSolution,
    /// Rate after each outer iteration of the winning initialization.
    pub history: Vec<f64>,
    /// Final rate of every initialization.
    pub init_rates: Vec<f64>,
    pub best_init: usize,
    pub converged: bool,
}

fn initial_power<R: Rng + ?Sized>(n: usize, budget: f64, rng: &mut R) -> Result<PowerAllocation> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = raw.iter().sum();
    PowerAllocation::new(raw.iter().map(|x| x / sum * budget).collect(), budget)
}

struct InitRun {
    solution: LinkSolution,
    history: Vec<f64>,
    converged: bool,
}

fn run_init(
    channels: &ReflectedChannelSet,
    params: &OfdmParams,
    hw: &DamHardware,
    cfg: &AoConfig,
    j: usize,
) -> Result<InitRun> {
    let mut power = if j == 0 {
        PowerAllocation::equal(params.subcarriers, params.total_power)?
    } else {
        initial_power(params.subcarriers, params.total_power, &mut stream(cfg.seed, &[j as u64, u64::MAX]))?
    };
    let mut incumbent: Option<ReflectionPattern> = None;
    let mut history = Vec::new();
    let mut converged = false;
    for it in 0..cfg.max_outer_iters {
        let choice = optimize_reflection(channels, &power, params, hw, cfg, &[j as u64, it as u64])?;
        let pattern = match incumbent.take() {
            Some(old) => {
                let rate_of = |p: &ReflectionPattern| -> Result<f64> {
                    Ok(achievable_rate(&pattern_cfr(channels, p, params, hw)?, &power, params))
                };
                if rate_of(&choice.pattern)? > rate_of(&old)? {
                    choice.pattern
                } else {
                    old
                }
            }
            None => choice.pattern,
        };
        let d = pattern_cfr(channels, &pattern, params, hw)?;
        power = waterfill(&d, params)?;
        let rate = achievable_rate(&d, &power, params);
        incumbent = Some(pattern);
        let previous = history.last().copied();
        history.push(rate);
        if let Some(prev) = previous {
            if rate - prev <= cfg.convergence_tol * prev.abs() {
                converged = true;
                break;
            }
        }
    }
    let rate = *history.last().expect("at least one outer iteration");
    let pattern = incumbent.expect("at least one outer iteration");
    Ok(InitRun { solution: LinkSolution { pattern, power, rate }, history, converged })
}

/// Runs the reflection/power ladder from `J` initial allocations and keeps
/// the best final rate.
pub fn alternating_optimize(
    channels: &ReflectedChannelSet,
    params: &OfdmParams,
    hw: &DamHardware,
    cfg: &AoConfig,
) -> Result<AoOutcome> {
    cfg.validate()?;
    let runs =
        (0..cfg.inits).into_par_iter().map(|j| run_init(channels, params, hw, cfg, j)).collect::<Result<Vec<_>>>()?;
    let init_rates: Vec<f64> = runs.iter().map(|r| r.solution.rate).collect();
    let mut best_init = 0;
    for (j, &r) in init_rates.iter().enumerate() {
        if r > init_rates[best_init] {
            best_init = j;
        }
    }
    let best = runs.into_iter().nth(best_init).expect("J >= 1");
    Ok(AoOutcome { solution: best.solution, history: best.history, init_rates, best_init, converged: best.converged })
}
