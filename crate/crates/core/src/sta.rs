//! Strongest tap alignment and the delay-free largest-sum-tap baseline.

use crate::channel::{ReflectedChannelSet, TapVector};
use crate::error::Result;
use crate::ofdm::{achievable_rate, pattern_cfr, OfdmParams};
use crate::power::{waterfill, PowerAllocation};
use crate::reflection::{feasible_delay_bounds, DamHardware, ReflectionPattern};

/// Index of the strongest tap of `h`; ties go to the smallest index.
pub fn strongest_tap(h: &TapVector) -> usize {
    let mut best = 0;
    for (i, t) in h.taps.iter().enumerate() {
        if t.norm_sqr() > h.taps[best].norm_sqr() {
            best = i;
        }
    }
    h.first_tap_index + best
}

/// Strongest tap of `h` within `[lo, hi]`, with absent taps counting as zero.
fn strongest_in_window(h: &TapVector, lo: usize, hi: usize) -> usize {
    let mut best = lo;
    let mut best_gain = h.get(lo).norm_sqr();
    for l in lo + 1..=hi {
        let gain = h.get(l).norm_sqr();
        if gain > best_gain {
            best = l;
            best_gain = gain;
        }
    }
    best
}

/// Re-seeks every element's strongest tap inside `[l_max - τ'_k, l_max]`,
/// where `l_max` is the latest unconstrained strongest tap.
pub fn restrict_to_feasible(l_hat: &[Vec<usize>], bounds: &[usize], channels: &ReflectedChannelSet) -> Vec<Vec<usize>> {
    let l_max = l_hat.iter().flatten().copied().max().unwrap_or(0);
    l_hat
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let lo = l_max.saturating_sub(bounds[k]);
            (0..row.len()).map(|m| strongest_in_window(channels.channel(k, m), lo, l_max)).collect()
        })
        .collect()
}

fn configure_counted(
    channels: &ReflectedChannelSet,
    n_cp: usize,
    hw: &DamHardware,
) -> Result<(ReflectionPattern, u64)> {
    let bounds = feasible_delay_bounds(channels, n_cp, hw)?;
    let mut ops = 0u64;
    let l_hat: Vec<Vec<usize>> = (0..channels.num_ris())
        .map(|k| {
            channels
                .ris(k)
                .iter()
                .map(|h| {
                    ops += h.len() as u64;
                    strongest_tap(h)
                })
                .collect()
        })
        .collect();
    let l_tilde = restrict_to_feasible(&l_hat, &bounds, channels);
    ops += (0..channels.num_ris()).map(|k| (bounds[k] as u64 + 1) * channels.elements_per_ris() as u64).sum::<u64>();

    let target = l_tilde.iter().flatten().copied().max().unwrap_or(0);
    let mut phase = Vec::with_capacity(channels.num_ris());
    let mut delay = Vec::with_capacity(channels.num_ris());
    for (k, row) in l_tilde.iter().enumerate() {
        phase.push(row.iter().enumerate().map(|(m, &l)| -channels.channel(k, m).get(l).arg()).collect());
        delay.push(row.iter().map(|&l| target - l).collect());
    }
    Ok((ReflectionPattern::new(phase, delay)?, ops))
}

/// Phases conjugating each element's feasible strongest tap and delays
/// stacking all of them onto the latest one.
pub fn sta_configure(channels: &ReflectedChannelSet, n_cp: usize, hw: &DamHardware) -> Result<ReflectionPattern> {
    configure_counted(channels, n_cp, hw).map(|(p, _)| p)
}

/// Number of tap inspections [`sta_configure`] performs on `channels`.
pub fn sta_operation_count(channels: &ReflectedChannelSet, n_cp: usize, hw: &DamHardware) -> Result<u64> {
    configure_counted(channels, n_cp, hw).map(|(_, ops)| ops)
}

/// Configured pattern, allocation and rate of one optimizer run.
#[derive(Debug, Clone)]
pub struct LinkSolution {
    pub pattern: ReflectionPattern,
    pub power: PowerAllocation,
    /// Achievable rate, b/s/Hz.
    pub rate: f64,
}

/// Strongest tap alignment followed by water-filling.
pub fn run_sta(channels: &ReflectedChannelSet, params: &OfdmParams, hw: &DamHardware) -> Result<LinkSolution> {
    let pattern = sta_configure(channels, params.cp_len, hw)?;
    solve_power(channels, pattern, params, hw)
}

/// Water-fills over the CFR produced by `pattern` and evaluates the rate.
pub fn solve_power(
    channels: &ReflectedChannelSet,
    pattern: ReflectionPattern,
    params: &OfdmParams,
    hw: &DamHardware,
) -> Result<LinkSolution> {
    let d = pattern_cfr(channels, &pattern, params, hw)?;
    let power = waterfill(&d, params)?;
    let rate = achievable_rate(&d, &power, params);
    Ok(LinkSolution { pattern, power, rate })
}

/// Delay-free baseline: all elements phase-align on the single tap index with
/// the largest summed magnitude.
pub fn align_sum_tap(channels: &ReflectedChannelSet) -> ReflectionPattern {
    let mut best = 0;
    let mut best_sum = f64::NEG_INFINITY;
    for l in 0..channels.max_span() {
        let sum: f64 = channels.iter().map(|(_, _, h)| h.get(l).norm()).sum();
        if sum > best_sum {
            best = l;
            best_sum = sum;
        }
    }
    let phase = (0..channels.num_ris()).map(|k| channels.ris(k).iter().map(|h| -h.get(best).arg()).collect()).collect();
    ReflectionPattern::without_delay(phase).expect("phase rows share one shape")
}
