//! Figure preset scenarios at reduced trial count.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::config::{Config, Optimizer, Scenario, SweepVar};
use super::scheme::{PhaseScheme, SchemeSpec};
use super::sweep::{sweep, RateReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11a,
    Fig11b,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig8,
        Figure::Fig9,
        Figure::Fig10,
        Figure::Fig11a,
        Figure::Fig11b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig5 => "5",
            Figure::Fig6 => "6",
            Figure::Fig7 => "7",
            Figure::Fig8 => "8",
            Figure::Fig9 => "9",
            Figure::Fig10 => "10",
            Figure::Fig11a => "11a",
            Figure::Fig11b => "11b",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim_start_matches("fig")))
            .ok_or_else(|| Error::Config(format!("unknown figure `{s}` (expected 5, 6, 7, 8, 9, 10, 11a or 11b)")))
    }
}

pub const PRESET_TRIALS: usize = 200;
pub const FULL_TRIALS: usize = 1000;

/// Options layered on top of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetOptions {
    pub trials: usize,
    pub seed: u64,
    /// Adds the AO variant of the optimal schemes where the figure shows it.
    pub with_ao: bool,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self { trials: PRESET_TRIALS, seed: 1, with_ao: false }
    }
}

fn set_sweep(config: &mut Config, var: SweepVar, values: &[f64]) {
    config.sweep_variable = Some(var.name().to_string());
    config.sweep_values = values.to_vec();
}

/// Scenario for `figure` plus the optimizers to run it with.
pub fn preset(figure: Figure, opts: PresetOptions) -> (Config, Vec<Optimizer>) {
    let mut c = Config { trials: opts.trials, seed: opts.seed, ..Config::default() };
    let mut optimizers = vec![Optimizer::Sta];
    match figure {
        Figure::Fig5 => set_sweep(&mut c, SweepVar::DBuX, &[40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0]),
        Figure::Fig6 => {
            set_sweep(&mut c, SweepVar::Power, &[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
            if opts.with_ao {
                optimizers.push(Optimizer::SdrAo);
            }
        }
        Figure::Fig7 => set_sweep(&mut c, SweepVar::Mz, &[1.0, 2.0, 4.0, 6.0, 8.0, 10.0]),
        Figure::Fig8 => {
            c.m_z = 10;
            set_sweep(&mut c, SweepVar::Subcarriers, &[16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0]);
        }
        Figure::Fig9 => set_sweep(&mut c, SweepVar::NonzeroTapsRu, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]),
        Figure::Fig10 => set_sweep(&mut c, SweepVar::RicianRu, &[0.0, 2.0, 4.0, 6.0, 8.0, 10.0]),
        Figure::Fig11a | Figure::Fig11b => {
            c.m_z = 10;
            c.c0_db = -20.0;
            c.fs_mhz = 10.0;
            c.schemes = vec![9, 12];
            if figure == Figure::Fig11a {
                set_sweep(&mut c, SweepVar::Eta, &[0.8, 0.85, 0.9, 0.95, 1.0]);
            } else {
                c.decay = 0.9;
                set_sweep(&mut c, SweepVar::PilotPower, &[10.0, 0.0, -10.0]);
            }
        }
    }
    (c, optimizers)
}

/// Configured schemes under every optimizer. Optimizers other than STA only
/// add the optimal-phase schemes, since the others do not use them.
pub fn preset_schemes(config: &Config, optimizers: &[Optimizer]) -> Result<Vec<SchemeSpec>> {
    let mut out = Vec::new();
    for &opt in optimizers {
        for &i in &config.schemes {
            let s = SchemeSpec::from_index(i, opt)?;
            if opt == Optimizer::Sta || s.phase == PhaseScheme::Optimal {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Runs the full sweep of `figure`.
pub fn run_figure(figure: Figure, opts: PresetOptions) -> Result<Vec<RateReport>> {
    let (config, optimizers) = preset(figure, opts);
    let schemes = preset_schemes(&config, &optimizers)?;
    sweep(&Scenario::from_config(config)?, &schemes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for f in Figure::ALL {
            let (c, opt) = preset(f, PresetOptions::default());
            let s = Scenario::from_config(c).unwrap();
            let (var, values) = s.sweep.clone().unwrap();
            for v in values {
                s.at(var, v).unwrap();
            }
            assert_eq!(opt[0], Optimizer::Sta);
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
    }

    #[test]
    fn fig11a_overrides() {
        let (c, _) = preset(Figure::Fig11a, PresetOptions::default());
        assert_eq!((c.m_x * c.m_z, c.c0_db, c.fs_mhz), (100, -20.0, 10.0));
        assert_eq!(c.schemes, vec![9, 12]);
    }

    #[test]
    fn ao_adds_only_optimal_schemes() {
        let (c, opt) = preset(Figure::Fig6, PresetOptions { with_ao: true, ..PresetOptions::default() });
        let idx: Vec<(usize, Optimizer)> =
            preset_schemes(&c, &opt).unwrap().iter().map(|s| (s.index(), s.optimizer)).collect();
        assert_eq!(idx.len(), 16);
        assert_eq!(
            idx[12..],
            [(3, Optimizer::SdrAo), (6, Optimizer::SdrAo), (9, Optimizer::SdrAo), (12, Optimizer::SdrAo)]
        );
    }
}
