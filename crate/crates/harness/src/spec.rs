//! Experiment description loaded from JSON. Every field is optional; missing
//! fields fall back to the desk-scale defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thzris::channel::{db_to_linear, SystemConfig};
use thzris::ris::{build_phase_set, RisState, DEFAULT_BITS, DEFAULT_MU_BAR, DEFAULT_PHI_MAX_DEG};

use crate::error::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Snr,
    PhaseMax,
    Bits,
    NMs,
    NRis,
    Convergence,
    Complexity,
}

impl SweepKind {
    pub const ALL: [SweepKind; 7] = [
        SweepKind::Snr,
        SweepKind::PhaseMax,
        SweepKind::Bits,
        SweepKind::NMs,
        SweepKind::NRis,
        SweepKind::Convergence,
        SweepKind::Complexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::PhaseMax => "phase_max",
            SweepKind::Bits => "bits",
            SweepKind::NMs => "n_ms",
            SweepKind::NRis => "n_ris",
            SweepKind::Convergence => "convergence",
            SweepKind::Complexity => "complexity",
        }
    }

    /// Grid used when the config gives no `sweep_values`.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepKind::Snr => vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            SweepKind::PhaseMax => vec![60.0, 120.0, 180.0, 240.0, DEFAULT_PHI_MAX_DEG, 360.0],
            SweepKind::Bits => vec![1.0, 2.0, 3.0, 4.0],
            SweepKind::NMs => vec![8.0, 16.0, 32.0, 48.0],
            SweepKind::NRis => vec![16.0, 32.0, 48.0, 64.0],
            SweepKind::Convergence => vec![0.0],
            SweepKind::Complexity => vec![16.0, 32.0, 64.0, 128.0, 256.0],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SimError::Config(format!("unknown sweep kind '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AGd,
    CGd,
    Ao,
    RandomPhase,
    NoRis,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::AGd, Algorithm::CGd, Algorithm::Ao, Algorithm::RandomPhase, Algorithm::NoRis];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AGd => "a_gd",
            Algorithm::CGd => "c_gd",
            Algorithm::Ao => "ao",
            Algorithm::RandomPhase => "random_phase",
            Algorithm::NoRis => "no_ris",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Surface parameters; angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisParams {
    pub phi_max_deg: f64,
    pub mu_bar: f64,
    pub bits: u32,
}

impl Default for RisParams {
    fn default() -> Self {
        Self { phi_max_deg: DEFAULT_PHI_MAX_DEG, mu_bar: DEFAULT_MU_BAR, bits: DEFAULT_BITS }
    }
}

impl RisParams {
    /// Zero-phase surface with `n` elements.
    pub fn template(&self, n: usize) -> Result<RisState, SimError> {
        let set = build_phase_set(self.phi_max_deg.to_radians(), self.bits).map_err(|e| SimError::Config(e.to_string()))?;
        RisState::new(n, set, self.mu_bar).map_err(|e| SimError::Config(e.to_string()))
    }
}

/// Iteration budgets of the optimizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub a_gd_iterations: usize,
    pub c_gd_iterations: usize,
    /// Fixed step of the constant-step variant; calibrated per realization when absent.
    pub c_gd_step: Option<f64>,
    pub ao_max_outer: usize,
    pub ao_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            a_gd_iterations: thzris::gd::DEFAULT_A_GD_ITERATIONS,
            c_gd_iterations: thzris::gd::DEFAULT_C_GD_ITERATIONS,
            c_gd_step: None,
            ao_max_outer: thzris::ao::DEFAULT_MAX_OUTER,
            ao_tol: thzris::ao::DEFAULT_TOL,
        }
    }
}

/// Named starting points for the link parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 64 / 32 / 16 elements.
    Desk,
    /// 512 / 128 / 32 elements, 1000 realizations. Long-running.
    Paper,
    /// 128 / 64 / 16 elements.
    Mid,
}

impl Preset {
    pub fn config(self) -> SystemConfig {
        match self {
            Preset::Desk => SystemConfig::default(),
            Preset::Paper => SystemConfig::paper_scale(),
            Preset::Mid => SystemConfig { n_bs: 128, n_ris: 64, n_ms: 16, ..SystemConfig::default() },
        }
    }

    pub fn realizations(self) -> usize {
        match self {
            Preset::Paper => 1000,
            _ => 50,
        }
    }
}

/// Link parameters as they appear in the JSON config. Gains are given in dBi
/// and the operating point as an SNR in dB.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfig {
    pub f: Option<f64>,
    pub n_bs: Option<usize>,
    pub n_ris: Option<usize>,
    pub n_ms: Option<usize>,
    pub m_bs: Option<usize>,
    pub m_ms: Option<usize>,
    pub n_s: Option<usize>,
    pub delta_sq: Option<f64>,
    pub g_t_dbi: Option<f64>,
    pub g_r_dbi: Option<f64>,
    pub kappa: Option<f64>,
    pub xi: Option<f64>,
    pub r0: Option<f64>,
    pub r_bar0: Option<f64>,
    pub r_tilde0: Option<f64>,
    pub l_paths: Option<usize>,
    pub c: Option<f64>,
    pub antenna_spacing: Option<f64>,
    pub ris_element_side: Option<f64>,
}

impl BaseConfig {
    /// Overlays the given fields on `start`; `rho` is derived later from the SNR.
    pub fn resolve(&self, start: SystemConfig) -> SystemConfig {
        let mut c = start;
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        take!(f, n_bs, n_ris, n_ms, m_bs, m_ms, n_s, delta_sq, kappa, xi, r0, r_bar0, r_tilde0, l_paths, c, antenna_spacing, ris_element_side);
        if let Some(g) = self.g_t_dbi {
            c.g_t = db_to_linear(g);
        }
        if let Some(g) = self.g_r_dbi {
            c.g_r = db_to_linear(g);
        }
        c
    }
}

/// One experiment as written in the JSON config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub preset: Option<Preset>,
    pub sweep_kind: Option<SweepKind>,
    pub sweep_values: Option<Vec<f64>>,
    pub base: BaseConfig,
    pub ris: RisParams,
    pub algorithms: Option<Vec<Algorithm>>,
    pub realizations: Option<usize>,
    pub master_seed: Option<u64>,
    /// Operating SNR in dB for every sweep except `snr`.
    pub snr_db: Option<f64>,
    pub optimizer: OptimizerSettings,
    /// Thread count; `None` uses every core.
    pub threads: Option<usize>,
    /// Fill `wall_ms` with measured times (makes output non-reproducible).
    pub record_wall_time: bool,
}

pub const DEFAULT_SNR_DB: f64 = 10.0;
pub const DEFAULT_MASTER_SEED: u64 = 2024;

/// Fully-resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    pub base: SystemConfig,
    pub ris: RisParams,
    pub algorithms: Vec<Algorithm>,
    pub realizations: usize,
    pub master_seed: u64,
    pub optimizer: OptimizerSettings,
    pub threads: Option<usize>,
    pub record_wall_time: bool,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(format!("bad config: {e}")))
    }

    /// Applies defaults and validates. `kind` overrides `sweep_kind`.
    pub fn resolve(&self, kind: Option<SweepKind>) -> Result<Experiment, SimError> {
        let preset = self.preset.unwrap_or(Preset::Desk);
        let kind = kind.or(self.sweep_kind).ok_or_else(|| SimError::Config("no sweep kind given".into()))?;
        let mut base = self.base.resolve(preset.config());
        base.set_snr_db(self.snr_db.unwrap_or(DEFAULT_SNR_DB));
        base.validate().map_err(|e| SimError::Config(e.to_string()))?;
        let values = match &self.sweep_values {
            Some(v) if self.sweep_kind.is_none() || self.sweep_kind == Some(kind) => v.clone(),
            _ => kind.default_values(),
        };
        if values.is_empty() {
            return Err(SimError::Config("sweep_values is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Config("sweep_values must be finite".into()));
        }
        let realizations = self.realizations.unwrap_or(preset.realizations());
        if realizations == 0 {
            return Err(SimError::Config("realizations must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(SimError::Config("threads must be >= 1".into()));
        }
        self.ris.template(1)?;
        let mut algorithms = self.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec());
        algorithms.sort();
        algorithms.dedup();
        if algorithms.is_empty() {
            return Err(SimError::Config("no algorithms selected".into()));
        }
        let exp = Experiment {
            kind,
            values,
            base,
            ris: self.ris.clone(),
            algorithms,
            realizations,
            master_seed: self.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
            optimizer: self.optimizer.clone(),
            threads: self.threads,
            record_wall_time: self.record_wall_time,
        };
        for &v in &exp.values {
            exp.point(v)?;
        }
        Ok(exp)
    }
}

impl Experiment {
    /// Link and surface parameters at one sweep value.
    pub fn point(&self, value: f64) -> Result<(SystemConfig, RisParams), SimError> {
        let mut cfg = self.base.clone();
        let mut ris = self.ris.clone();
        let as_count = |v: f64| -> Result<usize, SimError> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(SimError::Config(format!("sweep value {v} is not a positive integer")))
            }
        };
        match self.kind {
            SweepKind::Snr => cfg.set_snr_db(value),
            SweepKind::PhaseMax => ris.phi_max_deg = value,
            SweepKind::Bits => ris.bits = as_count(value)? as u32,
            SweepKind::NMs => cfg.n_ms = as_count(value)?,
            SweepKind::NRis => cfg.n_ris = as_count(value)?,
            SweepKind::Convergence => {}
            SweepKind::Complexity => {
                as_count(value)?;
            }
        }
        cfg.validate().map_err(|e| SimError::Config(e.to_string()))?;
        ris.template(cfg.n_ris)?;
        Ok((cfg, ris))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_desk_defaults() {
        let exp = ExperimentSpec::from_json("{}").unwrap().resolve(Some(SweepKind::Snr)).unwrap();
        assert_eq!(exp.base.n_bs, 64);
        assert_eq!(exp.base.n_ris, 32);
        assert_eq!(exp.base.n_ms, 16);
        assert_eq!(exp.realizations, 50);
        assert_eq!(exp.values, SweepKind::Snr.default_values());
        assert_eq!(exp.algorithms.len(), 5);
        assert!((exp.base.snr_db() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gains_converted_once() {
        let spec = ExperimentSpec::from_json(r#"{"base": {"g_t_dbi": 20, "n_s": 2}}"#).unwrap();
        let exp = spec.resolve(Some(SweepKind::Bits)).unwrap();
        assert!((exp.base.g_t - 100.0).abs() < 1e-9);
        assert_eq!(exp.base.n_s, 2);
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(ExperimentSpec::from_json(r#"{"nonsense": 1}"#).is_err());
        let no_kind = ExperimentSpec::default();
        assert!(no_kind.resolve(None).is_err());
        let zero = ExperimentSpec { realizations: Some(0), ..Default::default() };
        assert!(zero.resolve(Some(SweepKind::Snr)).is_err());
        let empty = ExperimentSpec { sweep_values: Some(vec![]), ..Default::default() };
        assert!(empty.resolve(Some(SweepKind::Snr)).is_err());
        let frac = ExperimentSpec { sweep_values: Some(vec![1.5]), ..Default::default() };
        assert!(frac.resolve(Some(SweepKind::Bits)).is_err());
        let too_many = ExperimentSpec { sweep_values: Some(vec![4.0]), ..Default::default() };
        assert!(too_many.resolve(Some(SweepKind::NMs)).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SweepKind::ALL {
            assert_eq!(k.name().parse::<SweepKind>().unwrap(), k);
        }
        assert!("fig12".parse::<SweepKind>().is_err());
    }
}
