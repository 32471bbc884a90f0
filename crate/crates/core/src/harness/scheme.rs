//! The twelve benchmark schemes and the per-trial pipeline.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;

use crate::ao::{alternating_optimize, optimize_reflection, AoConfig};
use crate::channel::{corrupt_csi, ReflectedChannelSet};
use crate::error::{Error, Result};
use crate::ofdm::{achievable_rate, pattern_cfr, OfdmParams};
use crate::power::{waterfill, PowerAllocation};
use crate::reflection::{feasible_delay_bounds, DamHardware, ReflectionPattern};
use crate::rng::stream;
use crate::sta::{align_sum_tap, sta_configure};

use super::config::{Optimizer, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerScheme {
    Equal,
    Waterfill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseScheme {
    Random,
    Statistical,
    Optimal,
}

impl PowerScheme {
    pub fn name(self) -> &'static str {
        match self {
            PowerScheme::Equal => "equal",
            PowerScheme::Waterfill => "waterfill",
        }
    }
}

impl PhaseScheme {
    pub fn name(self) -> &'static str {
        match self {
            PhaseScheme::Random => "random",
            PhaseScheme::Statistical => "statistical",
            PhaseScheme::Optimal => "optimal",
        }
    }
}

/// One benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeSpec {
    pub power: PowerScheme,
    pub dam: bool,
    pub phase: PhaseScheme,
    /// Used only when `phase` is optimal.
    pub optimizer: Optimizer,
}

const PHASES: [PhaseScheme; 3] = [PhaseScheme::Random, PhaseScheme::Statistical, PhaseScheme::Optimal];

impl SchemeSpec {
    /// Scheme by table index: 1-6 use equal power, 7-12 water-filling; within
    /// each half the first three lack DAM; phases cycle random, statistical,
    /// optimal.
    pub fn from_index(index: usize, optimizer: Optimizer) -> Result<Self> {
        if !(1..=12).contains(&index) {
            return Err(Error::Config(format!("scheme index {index} outside 1..=12")));
        }
        let i = index - 1;
        Ok(Self {
            power: if i < 6 { PowerScheme::Equal } else { PowerScheme::Waterfill },
            dam: i % 6 >= 3,
            phase: PHASES[i % 3],
            optimizer,
        })
    }

    pub fn index(&self) -> usize {
        let half = if self.power == PowerScheme::Equal { 0 } else { 6 };
        let dam = if self.dam { 3 } else { 0 };
        let phase = PHASES.iter().position(|&p| p == self.phase).expect("phase listed");
        half + dam + phase + 1
    }

    pub fn all(optimizer: Optimizer) -> Vec<SchemeSpec> {
        (1..=12).map(|i| Self::from_index(i, optimizer).expect("index in range")).collect()
    }

    /// Hardware seen by this scheme: without DAM no delay can be stored.
    pub fn hardware(&self, hw: &DamHardware) -> DamHardware {
        if self.dam {
            *hw
        } else {
            DamHardware { tau_max_samples: 0, ..*hw }
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.power.name(), if self.dam { "dam" } else { "no-dam" }, self.phase.name())?;
        if self.phase == PhaseScheme::Optimal {
            write!(f, "/{}", self.optimizer)?;
        }
        Ok(())
    }
}

fn random_pattern<R: Rng + ?Sized>(
    channels: &ReflectedChannelSet,
    bounds: &[usize],
    rng: &mut R,
) -> Result<ReflectionPattern> {
    let (k, m) = (channels.num_ris(), channels.elements_per_ris());
    let phase = (0..k).map(|_| (0..m).map(|_| rng.random_range(0.0..TAU)).collect()).collect();
    let delay = bounds.iter().map(|&b| (0..m).map(|_| rng.random_range(0..=b)).collect()).collect();
    ReflectionPattern::new(phase, delay)
}

/// Phases canceling the deterministic LoS phase of every cascaded channel;
/// delays stack each RIS's LoS tap onto the latest one where feasible.
fn statistical_pattern(channels: &ReflectedChannelSet, bounds: &[usize]) -> Result<ReflectionPattern> {
    let los = channels
        .los()
        .ok_or_else(|| Error::InvalidScenario("statistical configuration needs geometry-derived LoS data".into()))?;
    let latest = los.iter().map(|l| l.tap_index).max().unwrap_or(0);
    let phase = los.iter().map(|l| l.phase.iter().map(|p| -p).collect()).collect();
    let delay = los
        .iter()
        .zip(bounds)
        .map(|(l, &b)| vec![(latest - l.tap_index).min(b); channels.elements_per_ris()])
        .collect();
    ReflectionPattern::new(phase, delay)
}

/// Reflection pattern and power allocation of `scheme`, computed from the
/// channels the transmitter believes in.
pub fn configure_scheme<R: Rng + ?Sized>(
    scheme: &SchemeSpec,
    channels: &ReflectedChannelSet,
    params: &OfdmParams,
    hw: &DamHardware,
    ao: &AoConfig,
    rng: &mut R,
) -> Result<(ReflectionPattern, PowerAllocation)> {
    let hw = scheme.hardware(hw);
    let bounds = feasible_delay_bounds(channels, params.cp_len, &hw)?;
    let pattern = match (scheme.phase, scheme.optimizer) {
        (PhaseScheme::Random, _) => random_pattern(channels, &bounds, rng)?,
        (PhaseScheme::Statistical, _) => statistical_pattern(channels, &bounds)?,
        (PhaseScheme::Optimal, Optimizer::Sta) if scheme.dam => sta_configure(channels, params.cp_len, &hw)?,
        (PhaseScheme::Optimal, Optimizer::Sta) => align_sum_tap(channels),
        (PhaseScheme::Optimal, Optimizer::SdrAo) => {
            let ao = AoConfig { seed: rng.random(), ..ao.clone() };
            if scheme.power == PowerScheme::Waterfill {
                let out = alternating_optimize(channels, params, &hw, &ao)?;
                return Ok((out.solution.pattern, out.solution.power));
            }
            let equal = PowerAllocation::equal(params.subcarriers, params.total_power)?;
            optimize_reflection(channels, &equal, params, &hw, &ao, &[0, 0])?.pattern
        }
    };
    let power = match scheme.power {
        PowerScheme::Equal => PowerAllocation::equal(params.subcarriers, params.total_power)?,
        PowerScheme::Waterfill => waterfill(&pattern_cfr(channels, &pattern, params, &hw)?, params)?,
    };
    Ok((pattern, power))
}

const TAG_CHANNEL: u64 = 1;
const TAG_CSI: u64 = 2;
const TAG_SCHEME: u64 = 3;

/// Channels of trial `trial`: the truth and the transmitter's estimate.
pub fn trial_channels(scenario: &Scenario, trial: usize) -> Result<(ReflectedChannelSet, ReflectedChannelSet)> {
    let truth = ReflectedChannelSet::generate(
        &scenario.geometry,
        &scenario.fading,
        &mut stream(scenario.seed, &[TAG_CHANNEL, trial as u64]),
    )?;
    let view = corrupt_csi(&truth, scenario.csi_error_var, &mut stream(scenario.seed, &[TAG_CSI, trial as u64]))?;
    Ok((truth, view))
}

/// Rate of `scheme` on drawn channels: configured on `view`, evaluated on
/// `truth`. The random stream depends on DAM use and phase method only, so
/// the two power variants of a configuration see the same random pattern.
pub fn evaluate_scheme(
    scenario: &Scenario,
    scheme: &SchemeSpec,
    truth: &ReflectedChannelSet,
    view: &ReflectedChannelSet,
    trial: usize,
) -> Result<f64> {
    let tags = [TAG_SCHEME, trial as u64, scheme.dam as u64, scheme.phase as u64];
    let mut rng = stream(scenario.seed, &tags);
    let (pattern, power) = configure_scheme(scheme, view, &scenario.ofdm, &scenario.hw, &scenario.ao, &mut rng)?;
    let d = pattern_cfr(truth, &pattern, &scenario.ofdm, &scheme.hardware(&scenario.hw))?;
    Ok(achievable_rate(&d, &power, &scenario.ofdm))
}

/// Achievable rate of `scheme` on trial `trial` of `scenario`.
pub fn run_trial(scenario: &Scenario, scheme: &SchemeSpec, trial: usize) -> Result<f64> {
    let (truth, view) = trial_channels(scenario, trial)?;
    evaluate_scheme(scenario, scheme, &truth, &view, trial)
}
