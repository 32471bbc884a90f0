//! Frequency responses and rate formulas.
//!
//! The DFT is unnormalized (`d_n = Σ_l g_l e^{-j2πnl/N}`), so Parseval's
//! identity reads `Σ|d_n|² = N Σ|g_l|²`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channel::{ReflectedChannelSet, TapVector, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::power::PowerAllocation;
use crate::reflection::{composite_channel, DamHardware, ReflectionPattern};

/// OFDM link parameters, linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub subcarriers: usize,
    pub cp_len: usize,
    /// Noise power per subcarrier, watts.
    pub noise_power: f64,
    /// SNR gap Γ ≥ 1.
    pub snr_gap: f64,
    /// Transmit power budget P, watts.
    pub total_power: f64,
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.subcarriers < 1 {
            return Err(Error::InvalidScenario("at least one subcarrier is required".into()));
        }
        if self.cp_len > self.subcarriers {
            return Err(Error::InvalidScenario(format!("CP length {} exceeds N = {}", self.cp_len, self.subcarriers)));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidScenario("noise power must be positive".into()));
        }
        if !(self.snr_gap >= 1.0 && self.snr_gap.is_finite()) {
            return Err(Error::InvalidScenario("SNR gap must be at least 1".into()));
        }
        if !(self.total_power > 0.0 && self.total_power.is_finite()) {
            return Err(Error::InvalidScenario("transmit power must be positive".into()));
        }
        Ok(())
    }

    /// Effective noise `Γσ²`.
    pub fn effective_noise(&self) -> f64 {
        self.snr_gap * self.noise_power
    }

    /// CP overhead factor `N / (N + N_CP)`.
    pub fn efficiency(&self) -> f64 {
        self.subcarriers as f64 / (self.subcarriers + self.cp_len) as f64
    }
}

/// Per-subcarrier channel frequency response.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfr {
    pub d: Vec<Complex64>,
}

impl Cfr {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn gains(&self) -> impl Iterator<Item = f64> + '_ {
        self.d.iter().map(|d| d.norm_sqr())
    }

    pub fn energy(&self) -> f64 {
        self.gains().sum()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT of an arbitrary-length complex buffer, in place.
pub(crate) fn dft_in_place(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// CFR of the zero-padded CIR `g` on `n` subcarriers.
pub fn cfr(g: &TapVector, n: usize) -> Result<Cfr> {
    if g.span() > n {
        return Err(Error::InvalidScenario(format!("CIR span {} exceeds {n} subcarriers", g.span())));
    }
    let mut d = g.to_dense(n);
    dft_in_place(&mut d);
    Ok(Cfr { d })
}

/// CFR of the composite channel produced by `pattern`.
pub fn pattern_cfr(
    channels: &ReflectedChannelSet,
    pattern: &ReflectionPattern,
    params: &OfdmParams,
    hw: &DamHardware,
) -> Result<Cfr> {
    let g = composite_channel(channels, pattern, params.cp_len, hw)?;
    cfr(&g, params.subcarriers)
}

fn check_lengths(d: &Cfr, p: &PowerAllocation, params: &OfdmParams) {
    assert_eq!(d.len(), params.subcarriers, "CFR length differs from N");
    assert_eq!(p.len(), params.subcarriers, "allocation length differs from N");
}

/// Achievable rate in b/s/Hz including the CP overhead.
pub fn achievable_rate(d: &Cfr, p: &PowerAllocation, params: &OfdmParams) -> f64 {
    check_lengths(d, p, params);
    let noise = params.effective_noise();
    let sum: f64 = d.gains().zip(p.powers()).map(|(g, &pn)| (g * pn / noise).ln_1p()).sum();
    sum / std::f64::consts::LN_2 / (params.subcarriers + params.cp_len) as f64
}

/// Jensen upper bound on [`achievable_rate`]; it depends on the CFR only
/// through the power-weighted energy `Σ|d_n|² p_n`.
pub fn rate_upper_bound(d: &Cfr, p: &PowerAllocation, params: &OfdmParams) -> f64 {
    check_lengths(d, p, params);
    let weighted: f64 = d.gains().zip(p.powers()).map(|(g, &pn)| g * pn).sum();
    let n = params.subcarriers as f64;
    params.efficiency() * (weighted / (n * params.effective_noise())).ln_1p() / std::f64::consts::LN_2
}

/// Large-M ergodic rate of one-tap channels `h_{k,m} ~ CN(0, ρ_k²)` after
/// delay-and-phase alignment, with `amplitudes[k] = ρ_k`.
pub fn ergodic_rate_closed_form(elements: usize, amplitudes: &[f64], params: &OfdmParams) -> f64 {
    let m = elements as f64;
    let sum: f64 = amplitudes.iter().sum();
    let sum_sq: f64 = amplitudes.iter().map(|r| r * r).sum();
    let gain = PI * m * m * sum * sum + (4.0 - PI) * m * sum_sq;
    let snr = gain * params.total_power / (4.0 * params.subcarriers as f64 * params.effective_noise());
    params.efficiency() * snr.log2_1p()
}

trait Log2OnePlus {
    fn log2_1p(self) -> Self;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// Largest square RIS whose aperture delay spread stays below half a sample:
/// `⌊c² / (32 f_s² d²)⌋`.
pub fn max_negligible_delay_elements(sampling_rate: f64, spacing: f64) -> u64 {
    let ratio = SPEED_OF_LIGHT / (sampling_rate * spacing);
    let bound = ratio * ratio / 32.0;
    let nearest = bound.round();
    // Snap representation error (e.g. 449.99999999999994) onto the integer.
    if (bound - nearest).abs() <= 1e-9 * bound {
        nearest as u64
    } else {
        bound.floor() as u64
    }
}
