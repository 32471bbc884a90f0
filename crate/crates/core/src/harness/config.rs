//! Scenario files and their resolution into simulator parameters.
//!
//! Scenario files are flat TOML tables. Every key carries its unit in the
//! name; dB and dBm values are converted to linear scale once, in
//! [`Scenario::from_config`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ao::{AoConfig, DelayMode};
use crate::channel::{FadingConfig, Geometry, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::ofdm::OfdmParams;
use crate::reflection::DamHardware;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Optimizer behind the "optimal" phase configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Sta,
    SdrAo,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sta => "sta",
            Optimizer::SdrAo => "sdr-ao",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sta" => Ok(Optimizer::Sta),
            "sdr-ao" | "ao" => Ok(Optimizer::SdrAo),
            other => Err(Error::Config(format!("unknown optimizer `{other}` (expected sta or sdr-ao)"))),
        }
    }
}

/// Scenario parameters that a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVar {
    /// Horizontal BS-UE distance, m.
    DBuX,
    /// Transmit power, dBm.
    Power,
    /// Rows of each RIS.
    Mz,
    /// Subcarrier count.
    Subcarriers,
    /// Non-zero taps of every RIS-UE link.
    NonzeroTapsRu,
    /// Rician factor of every RIS-UE link, dB.
    RicianRu,
    /// DAM decay factor.
    Eta,
    /// Uplink pilot power, dBm.
    PilotPower,
}

impl SweepVar {
    pub const ALL: [SweepVar; 8] = [
        SweepVar::DBuX,
        SweepVar::Power,
        SweepVar::Mz,
        SweepVar::Subcarriers,
        SweepVar::NonzeroTapsRu,
        SweepVar::RicianRu,
        SweepVar::Eta,
        SweepVar::PilotPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::DBuX => "d_BU_x",
            SweepVar::Power => "P",
            SweepVar::Mz => "M_z",
            SweepVar::Subcarriers => "N",
            SweepVar::NonzeroTapsRu => "L_nonzero_RU",
            SweepVar::RicianRu => "rician_RU",
            SweepVar::Eta => "eta",
            SweepVar::PilotPower => "pilot_power",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepVar::Mz | SweepVar::Subcarriers | SweepVar::NonzeroTapsRu)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepVar::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            let names: Vec<&str> = SweepVar::ALL.iter().map(|v| v.name()).collect();
            Error::Config(format!("unknown sweep variable `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// Raw scenario file. Missing keys take the defaults of the reference
/// three-RIS layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub num_ris: usize,
    pub d_br_x_m: f64,
    pub d_br_y_m: f64,
    pub d_b_z_m: f64,
    pub d_r_z_m: f64,
    pub d_bu_x_m: f64,
    pub m_x: usize,
    pub m_z: usize,
    pub element_spacing_m: f64,
    pub carrier_mhz: f64,

    pub c0_db: f64,
    pub alpha_br: f64,
    pub alpha_ru: f64,
    pub rician_br_db: f64,
    pub rician_ru_db: f64,
    pub taps_br: usize,
    pub taps_ru: usize,
    pub fs_mhz: f64,

    pub subcarriers: usize,
    pub cp_len: usize,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub snr_gap_db: f64,

    /// Delay budget in samples; defaults to the CP length.
    pub tau_max_samples: Option<usize>,
    pub decay: f64,

    /// Additive CSI error variance, linear. Overridden by `pilot_power_dbm`.
    pub csi_error_var: f64,
    pub pilot_power_dbm: Option<f64>,
    pub bs_noise_dbm: f64,

    pub ao_inits: usize,
    pub ao_randomizations: usize,
    pub ao_max_iters: usize,
    pub ao_tol: f64,
    pub ao_delay_mode: DelayMode,
    pub ao_group_size: usize,
    pub ao_candidate_cap: usize,

    pub optimizer: Optimizer,
    /// Table indices 1..=12 of the schemes to run.
    pub schemes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub sweep_variable: Option<String>,
    pub sweep_values: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            num_ris: 3,
            d_br_x_m: 100.0,
            d_br_y_m: 20.0,
            d_b_z_m: 10.0,
            d_r_z_m: 10.0,
            d_bu_x_m: 100.0,
            m_x: 10,
            m_z: 1,
            element_spacing_m: 0.05,
            carrier_mhz: 900.0,
            c0_db: -30.0,
            alpha_br: 2.2,
            alpha_ru: 2.8,
            rician_br_db: f64::INFINITY,
            rician_ru_db: 3.0,
            taps_br: 1,
            taps_ru: 5,
            fs_mhz: 50.0,
            subcarriers: 1024,
            cp_len: 16,
            power_dbm: 20.0,
            noise_dbm: -100.0,
            snr_gap_db: 0.0,
            tau_max_samples: None,
            decay: 1.0,
            csi_error_var: 0.0,
            pilot_power_dbm: None,
            bs_noise_dbm: -110.0,
            ao_inits: 10,
            ao_randomizations: 100,
            ao_max_iters: 20,
            ao_tol: 1e-4,
            ao_delay_mode: DelayMode::PerRisCommon,
            ao_group_size: 1,
            ao_candidate_cap: 4096,
            optimizer: Optimizer::Sta,
            schemes: (1..=12).collect(),
            trials: 200,
            seed: 1,
            sweep_variable: None,
            sweep_values: Vec::new(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        // An unreadable scenario is a configuration problem, not a runtime one.
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn sweep_var(&self) -> Result<Option<SweepVar>> {
        self.sweep_variable.as_deref().map(SweepVar::from_str).transpose()
    }

    /// Sets the parameter behind `var` to `value`.
    pub fn set(&mut self, var: SweepVar, value: f64) -> Result<()> {
        if var.is_integer() && (value.fract() != 0.0 || value < 0.0) {
            return Err(Error::Config(format!("{var} takes non-negative integers, got {value}")));
        }
        match var {
            SweepVar::DBuX => self.d_bu_x_m = value,
            SweepVar::Power => self.power_dbm = value,
            SweepVar::Mz => self.m_z = value as usize,
            SweepVar::Subcarriers => self.subcarriers = value as usize,
            SweepVar::NonzeroTapsRu => self.taps_ru = value as usize,
            SweepVar::RicianRu => self.rician_ru_db = value,
            SweepVar::Eta => self.decay = value,
            SweepVar::PilotPower => self.pilot_power_dbm = Some(value),
        }
        Ok(())
    }
}

/// Resolved simulator inputs for one sweep point.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: Geometry,
    pub fading: FadingConfig,
    pub ofdm: OfdmParams,
    pub hw: DamHardware,
    pub ao: AoConfig,
    pub trials: usize,
    pub seed: u64,
    /// Linear CSI error variance; 0 means perfect CSI.
    pub csi_error_var: f64,
    pub optimizer: Optimizer,
    pub sweep: Option<(SweepVar, Vec<f64>)>,
    config: Config,
}

impl Scenario {
    pub fn from_config(config: Config) -> Result<Self> {
        let c = &config;
        if c.trials < 1 {
            return Err(Error::InvalidScenario("trials must be at least 1".into()));
        }
        if c.num_ris < 1 {
            return Err(Error::InvalidScenario("at least one RIS is required".into()));
        }
        if let Some(&bad) = c.schemes.iter().find(|&&s| !(1..=12).contains(&s)) {
            return Err(Error::Config(format!("scheme index {bad} outside 1..=12")));
        }
        let sweep = match c.sweep_var()? {
            Some(var) if c.sweep_values.is_empty() => {
                return Err(Error::Config(format!("sweep over {var} lists no values")));
            }
            Some(var) => Some((var, c.sweep_values.clone())),
            None if !c.sweep_values.is_empty() => {
                return Err(Error::Config("sweep_values given without sweep_variable".into()));
            }
            None => None,
        };

        let k = c.num_ris;
        let geometry = Geometry {
            bs_pos: [0.0, 0.0, c.d_b_z_m],
            ue_pos: [c.d_bu_x_m, 0.0, 0.0],
            ris_ref_pos: (1..=k).map(|i| [c.d_br_x_m, -(i as f64) * c.d_br_y_m, c.d_r_z_m]).collect(),
            element_spacing: c.element_spacing_m,
            wavelength: SPEED_OF_LIGHT / (c.carrier_mhz * 1e6),
            grid: (c.m_x, c.m_z),
        };
        geometry.validate()?;
        let fading = FadingConfig {
            c0: db_to_linear(c.c0_db),
            alpha_br: c.alpha_br,
            alpha_ru: c.alpha_ru,
            rician_br: vec![db_to_linear(c.rician_br_db); k],
            rician_ru: vec![db_to_linear(c.rician_ru_db); k],
            sampling_rate: c.fs_mhz * 1e6,
            nonzero_taps_br: vec![c.taps_br; k],
            nonzero_taps_ru: vec![c.taps_ru; k],
        };
        fading.validate(k)?;
        let ofdm = OfdmParams {
            subcarriers: c.subcarriers,
            cp_len: c.cp_len,
            noise_power: dbm_to_watts(c.noise_dbm),
            snr_gap: db_to_linear(c.snr_gap_db),
            total_power: dbm_to_watts(c.power_dbm),
        };
        ofdm.validate()?;
        let hw = DamHardware::new(c.tau_max_samples.unwrap_or(c.cp_len), c.decay)?;
        let ao = AoConfig {
            inits: c.ao_inits,
            randomizations: c.ao_randomizations,
            max_outer_iters: c.ao_max_iters,
            convergence_tol: c.ao_tol,
            delay_mode: c.ao_delay_mode,
            group_size: c.ao_group_size,
            candidate_cap: c.ao_candidate_cap,
            seed: c.seed,
            ..AoConfig::default()
        };
        ao.validate()?;
        let csi_error_var = match c.pilot_power_dbm {
            Some(pilot) => dbm_to_watts(c.bs_noise_dbm) / dbm_to_watts(pilot),
            None => c.csi_error_var,
        };
        if !(csi_error_var >= 0.0 && csi_error_var.is_finite()) {
            return Err(Error::InvalidScenario(format!("CSI error variance {csi_error_var} must be >= 0")));
        }
        Ok(Self {
            geometry,
            fading,
            ofdm,
            hw,
            ao,
            trials: c.trials,
            seed: c.seed,
            csi_error_var,
            optimizer: c.optimizer,
            sweep,
            config,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config(Config::load(path)?)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// The scenario with `var` fixed at `value`.
    pub fn at(&self, var: SweepVar, value: f64) -> Result<Scenario> {
        let mut config = self.config.clone();
        config.set(var, value)?;
        Scenario::from_config(config)
    }

    /// Table indices of the configured schemes.
    pub fn scheme_indices(&self) -> &[usize] {
        &self.config.schemes
    }
}
