//! Reflection algebra of delay-adjustable elements.
//!
//! Each element rotates the cascaded channel by a unit-modulus coefficient and
//! shifts it by an integer number of samples. Feasible delays never push a
//! channel past the cyclic prefix, so the circular shift of the zero-padded
//! CIR is a plain index shift here.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::{ReflectedChannelSet, TapVector};
use crate::error::{Error, Result};

/// Delay-adjustable metasurface limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamHardware {
    /// Largest storable delay in samples.
    pub tau_max_samples: usize,
    /// Per-sample power decay factor η in (0, 1].
    pub decay: f64,
}

impl DamHardware {
    pub fn new(tau_max_samples: usize, decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::InvalidScenario(format!("decay factor {decay} outside (0, 1]")));
        }
        Ok(Self { tau_max_samples, decay })
    }

    /// Lossless hardware with the given delay budget.
    pub fn lossless(tau_max_samples: usize) -> Self {
        Self { tau_max_samples, decay: 1.0 }
    }

    /// Delay budget from a storage time in seconds, rounded to the nearest sample.
    pub fn from_storage_time(tau_max_s: f64, sampling_rate: f64, decay: f64) -> Result<Self> {
        if !(tau_max_s >= 0.0) {
            return Err(Error::InvalidScenario("negative storage time".into()));
        }
        Self::new((tau_max_s * sampling_rate).round() as usize, decay)
    }

    /// Amplitude factor after `delay` samples of storage.
    pub fn amplitude(&self, delay: usize) -> f64 {
        if self.decay == 1.0 {
            1.0
        } else {
            self.decay.powf(delay as f64 / 2.0)
        }
    }
}

/// Per-element phases (radians, wrapped to `[0, 2π)`) and integer delays.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPattern {
    phase: Vec<Vec<f64>>,
    delay: Vec<Vec<usize>>,
}

fn wrap(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

impl ReflectionPattern {
    pub fn new(phase: Vec<Vec<f64>>, delay: Vec<Vec<usize>>) -> Result<Self> {
        if phase.is_empty()
            || phase.len() != delay.len()
            || phase.iter().zip(&delay).any(|(p, d)| p.len() != d.len() || p.is_empty())
        {
            return Err(Error::InvalidScenario("phase and delay shapes disagree".into()));
        }
        if phase.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::InvalidScenario("non-finite phase".into()));
        }
        let phase = phase.into_iter().map(|r| r.into_iter().map(wrap).collect()).collect();
        Ok(Self { phase, delay })
    }

    /// Pattern with all delays zero.
    pub fn without_delay(phase: Vec<Vec<f64>>) -> Result<Self> {
        let delay = phase.iter().map(|r| vec![0; r.len()]).collect();
        Self::new(phase, delay)
    }

    /// Pattern whose phases are the arguments of `coefficients`.
    pub fn from_coefficients(coefficients: &[Vec<Complex64>], delay: Vec<Vec<usize>>) -> Result<Self> {
        let phase = coefficients.iter().map(|r| r.iter().map(|c| c.arg()).collect()).collect();
        Self::new(phase, delay)
    }

    /// Identity pattern (zero phase, zero delay) shaped like `channels`.
    pub fn identity(num_ris: usize, elements_per_ris: usize) -> Self {
        Self { phase: vec![vec![0.0; elements_per_ris]; num_ris], delay: vec![vec![0; elements_per_ris]; num_ris] }
    }

    pub fn num_ris(&self) -> usize {
        self.phase.len()
    }

    pub fn elements_per_ris(&self) -> usize {
        self.phase[0].len()
    }

    pub fn phase(&self, k: usize, m: usize) -> f64 {
        self.phase[k][m]
    }

    pub fn delay(&self, k: usize, m: usize) -> usize {
        self.delay[k][m]
    }

    pub fn delays(&self) -> &[Vec<usize>] {
        &self.delay
    }

    pub fn phases(&self) -> &[Vec<f64>] {
        &self.phase
    }

    /// Unit-modulus reflection coefficient `e^{jθ}`.
    pub fn coefficient(&self, k: usize, m: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phase[k][m])
    }

    pub fn max_delay(&self) -> usize {
        self.delay.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Checks delay bounds for every element against the channel spans.
    pub fn check_feasible(&self, channels: &ReflectedChannelSet, n_cp: usize, hw: &DamHardware) -> Result<()> {
        if self.num_ris() != channels.num_ris() || self.elements_per_ris() != channels.elements_per_ris() {
            return Err(Error::InvalidScenario("pattern shape does not match the channel set".into()));
        }
        for k in 0..channels.num_ris() {
            let bound = feasible_delay_bound(channels.span(k), n_cp, hw)?;
            if let Some(&d) = self.delay[k].iter().find(|&&d| d > bound) {
                return Err(Error::ConstraintViolation(format!("delay {d} at RIS {k} exceeds feasible bound {bound}")));
            }
        }
        Ok(())
    }
}

/// Largest delay RIS `k` may apply: `min(τ_max, N_CP - L_k)`.
pub fn feasible_delay_bound(span: usize, n_cp: usize, hw: &DamHardware) -> Result<usize> {
    if span > n_cp {
        return Err(Error::InvalidScenario(format!("channel span {span} exceeds cyclic prefix {n_cp}")));
    }
    Ok(hw.tau_max_samples.min(n_cp - span))
}

/// Feasible delay bounds of every RIS in `channels`.
pub fn feasible_delay_bounds(channels: &ReflectedChannelSet, n_cp: usize, hw: &DamHardware) -> Result<Vec<usize>> {
    (0..channels.num_ris()).map(|k| feasible_delay_bound(channels.span(k), n_cp, hw)).collect()
}

/// Rotates `h` by `e^{jθ}`, delays it by `delay` samples and applies the
/// storage decay `η^{delay/2}` to the amplitude.
pub fn apply_element(h: &TapVector, phase: f64, delay: usize, n_cp: usize, hw: &DamHardware) -> Result<TapVector> {
    let bound = feasible_delay_bound(h.span(), n_cp, hw)?;
    if delay > bound {
        return Err(Error::ConstraintViolation(format!("delay {delay} exceeds feasible bound {bound}")));
    }
    let w = Complex64::from_polar(hw.amplitude(delay), phase);
    Ok(TapVector::new(h.first_tap_index + delay, h.taps.iter().map(|t| t * w).collect()))
}

/// Superposition of all reflected, delayed element channels, as a tap vector
/// starting at index 0.
pub fn composite_channel(
    channels: &ReflectedChannelSet,
    pattern: &ReflectionPattern,
    n_cp: usize,
    hw: &DamHardware,
) -> Result<TapVector> {
    pattern.check_feasible(channels, n_cp, hw)?;
    Ok(composite_unchecked(channels, pattern, hw))
}

pub(crate) fn composite_unchecked(
    channels: &ReflectedChannelSet,
    pattern: &ReflectionPattern,
    hw: &DamHardware,
) -> TapVector {
    let len = channels.iter().map(|(k, m, h)| h.span() + pattern.delay(k, m)).max().unwrap_or(1);
    let mut taps = vec![Complex64::default(); len];
    for (k, m, h) in channels.iter() {
        let delay = pattern.delay(k, m);
        let w = pattern.coefficient(k, m) * hw.amplitude(delay);
        let start = h.first_tap_index + delay;
        for (i, t) in h.taps.iter().enumerate() {
            taps[start + i] += t * w;
        }
    }
    TapVector::new(0, taps)
}
