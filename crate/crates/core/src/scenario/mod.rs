//! JSON scenario files and their execution.
//!
//! A scenario fixes the atom, trap, noise spectrum, temperature and initial
//! populations, plus parameters for one kind of run. Every numeric field
//! carries its unit in the key (`temperature_uK`, `splitting_MHz`, ...).
//! Missing keys take the defaults of the reference experiment; unknown keys
//! are rejected.

mod run;
#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::atomic::{AtomSpecies, TrapGeometry};
use crate::constants::{GRAVITY, PLANCK};
use crate::error::{Error, Result};
use crate::noise::{reference_spectrum, NoiseSpectrum, ReferenceSpectrumParams, SpectrumComponent};
use crate::rates::{RateConfig, DEFAULT_RATE_SCALE};

pub use run::{run_scenario, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Rates,
    Rinf,
    Evolve,
    Protocol,
    Scan,
    Fit,
    Oracle,
}

impl RunKind {
    pub const ALL: [RunKind; 7] =
        [RunKind::Rates, RunKind::Rinf, RunKind::Evolve, RunKind::Protocol, RunKind::Scan, RunKind::Fit, RunKind::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            RunKind::Rates => "rates",
            RunKind::Rinf => "rinf",
            RunKind::Evolve => "evolve",
            RunKind::Protocol => "protocol",
            RunKind::Scan => "scan",
            RunKind::Fit => "fit",
            RunKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub species: SpeciesOverrides,
    pub trap: TrapConfig,
    /// E⁰₁₂/h at the trap bottom; also the carrier of the noise.
    #[serde(rename = "splitting_MHz")]
    pub splitting_mhz: f64,
    #[serde(rename = "temperature_uK")]
    pub temperature_uk: f64,
    /// Noise centre relative to the carrier.
    #[serde(rename = "delta_f_MHz")]
    pub delta_f_mhz: f64,
    pub spectrum: SpectrumSpec,
    /// Dimensionless multiplier of the golden-rule rates.
    pub rate_scale: f64,
    pub initial: InitialConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSpec>,
    pub mc: McConfig,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            species: SpeciesOverrides::default(),
            trap: TrapConfig::default(),
            splitting_mhz: 18.0,
            temperature_uk: 1.0,
            delta_f_mhz: 0.0,
            spectrum: SpectrumSpec::default(),
            rate_scale: DEFAULT_RATE_SCALE,
            initial: InitialConfig::default(),
            run: None,
            mc: McConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Replacements for the ⁸⁷Rb constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(rename = "hyperfine_GHz", skip_serializing_if = "Option::is_none")]
    pub hyperfine_ghz: Option<f64>,
    #[serde(rename = "g_J", skip_serializing_if = "Option::is_none")]
    pub g_j: Option<f64>,
    #[serde(rename = "g_I", skip_serializing_if = "Option::is_none")]
    pub g_i: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapConfig {
    /// Trap frequencies (x, y, z) of the m_F = 1 level; x is the weak axis.
    #[serde(rename = "frequencies_Hz")]
    pub frequencies_hz: [f64; 3],
    pub gravity: bool,
    pub gravity_m_s2: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        let s = 2f64.sqrt();
        TrapConfig { frequencies_hz: [10.0 / s, 96.0 / s, 96.0 / s], gravity: true, gravity_m_s2: GRAVITY }
    }
}

/// Noise spectrum centred on carrier + Δf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    /// Centre peak, two side peaks and a floor.
    Reference {
        #[serde(default)]
        params: ReferenceSpectrumParams,
    },
    White {
        #[serde(rename = "level_T2_per_Hz")]
        level: f64,
    },
    Monochromatic {
        #[serde(rename = "integrated_power_T2")]
        integrated_power: f64,
    },
    Gaussian {
        #[serde(rename = "sigma_kHz")]
        sigma_khz: f64,
        #[serde(rename = "amplitude_T2_per_Hz")]
        amplitude: f64,
    },
    /// Two-column CSV (Hz, T²/Hz) at Δf = 0; relative paths resolve against
    /// the scenario file.
    Tabulated { path: PathBuf },
    /// Explicit components at Δf = 0.
    Components { components: Vec<SpectrumComponent> },
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec::Reference { params: ReferenceSpectrumParams::default() }
    }
}

impl SpectrumSpec {
    /// The spectrum at Δf = 0.
    pub fn build(&self, carrier_hz: f64) -> Result<NoiseSpectrum> {
        match self {
            SpectrumSpec::Reference { params } => reference_spectrum(carrier_hz, 0.0, params),
            SpectrumSpec::White { level } => NoiseSpectrum::white(*level),
            SpectrumSpec::Monochromatic { integrated_power } => NoiseSpectrum::monochromatic(carrier_hz, *integrated_power),
            SpectrumSpec::Gaussian { sigma_khz, amplitude } => NoiseSpectrum::new(vec![SpectrumComponent::Gaussian {
                center_hz: carrier_hz,
                sigma_hz: sigma_khz * 1e3,
                amplitude: *amplitude,
            }]),
            SpectrumSpec::Tabulated { path } => NoiseSpectrum::from_csv(path),
            SpectrumSpec::Components { components } => NoiseSpectrum::new(components.clone()),
        }
    }

    /// Whether shifting by Δf is meaningful (a flat spectrum is shift-invariant).
    fn is_white(&self) -> bool {
        matches!(self, SpectrumSpec::White { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Fraction of trapped atoms in m_F = 1.
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "N_total")]
    pub n_total: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { r0: 0.09, n_total: 7.0e4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: usize,
    /// Used when no seed is given on the command line; generated if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_samples: 1_000_000, seed: None }
    }
}

/// Oracle agreement: |quadrature − MC| ≤ max(relative · quadrature, sigma · stderr).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub oracle_relative: f64,
    pub oracle_sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { oracle_relative: 0.01, oracle_sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    #[serde(rename = "duration_ms")]
    pub duration_ms: f64,
    #[serde(rename = "delta_f_MHz")]
    pub delta_f_mhz: f64,
    /// Overrides the scenario temperature for this segment.
    #[serde(rename = "temperature_uK", default, skip_serializing_if = "Option::is_none")]
    pub temperature_uk: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// Single exponential in (t_s, R) data.
    Relaxation,
    /// Full ratio solution at fixed α in (t_s, R) data.
    FullModel,
    /// Spectrum shape in (Hz, T²/Hz) data.
    Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunSpec {
    Rates {},
    Rinf {},
    Evolve {
        #[serde(default = "default_duration_ms")]
        duration_ms: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        /// Calibrates the rate scale so that γ̃ takes this value; null keeps
        /// the scenario's `rate_scale`.
        #[serde(default)]
        gamma_tilde_per_s: Option<f64>,
    },
    Protocol {
        #[serde(default = "default_segments")]
        segments: Vec<SegmentSpec>,
        #[serde(default = "default_samples")]
        samples_per_segment: usize,
        /// γ̃ of the first segment; one rate scale calibrated there is shared by
        /// all segments. Null keeps the scenario's `rate_scale`.
        #[serde(default = "default_protocol_gamma")]
        gamma_tilde_per_s: Option<f64>,
    },
    Scan {
        #[serde(rename = "delta_f_MHz", default = "default_scan_detunings")]
        delta_f_mhz: Vec<f64>,
        #[serde(rename = "temperatures_uK", default = "default_scan_temperatures")]
        temperatures_uk: Vec<f64>,
    },
    Fit {
        #[serde(default)]
        input: Option<PathBuf>,
        #[serde(default = "default_fit_model")]
        model: FitModel,
        /// α for the full model; computed from the scenario's rates if null.
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        free_widths: bool,
    },
    Oracle {},
}

fn default_duration_ms() -> f64 {
    200.0
}

fn default_samples() -> usize {
    201
}

fn default_protocol_gamma() -> Option<f64> {
    Some(30.0)
}

/// Red-detuned pumping for 200 ms, then a jump to blue detuning.
pub fn default_segments() -> Vec<SegmentSpec> {
    vec![
        SegmentSpec { duration_ms: 200.0, delta_f_mhz: -0.2, temperature_uk: None },
        SegmentSpec { duration_ms: 200.0, delta_f_mhz: 0.4, temperature_uk: None },
    ]
}

/// −1.0 to 1.2 MHz in 20 kHz steps.
pub fn default_scan_detunings() -> Vec<f64> {
    (0..=110).map(|i| ((-50 + i) as f64 * 0.02 * 1e6).round() / 1e6).collect()
}

fn default_scan_temperatures() -> Vec<f64> {
    vec![0.5, 1.0, 1.5]
}

fn default_fit_model() -> FitModel {
    FitModel::Relaxation
}

impl RunSpec {
    pub fn kind(&self) -> RunKind {
        match self {
            RunSpec::Rates {} => RunKind::Rates,
            RunSpec::Rinf {} => RunKind::Rinf,
            RunSpec::Evolve { .. } => RunKind::Evolve,
            RunSpec::Protocol { .. } => RunKind::Protocol,
            RunSpec::Scan { .. } => RunKind::Scan,
            RunSpec::Fit { .. } => RunKind::Fit,
            RunSpec::Oracle {} => RunKind::Oracle,
        }
    }

    /// Parameters used when the scenario has no `run` section.
    pub fn default_for(kind: RunKind) -> RunSpec {
        match kind {
            RunKind::Rates => RunSpec::Rates {},
            RunKind::Rinf => RunSpec::Rinf {},
            RunKind::Evolve => RunSpec::Evolve { duration_ms: default_duration_ms(), samples: default_samples(), gamma_tilde_per_s: None },
            RunKind::Protocol => RunSpec::Protocol {
                segments: default_segments(),
                samples_per_segment: default_samples(),
                gamma_tilde_per_s: default_protocol_gamma(),
            },
            RunKind::Scan => RunSpec::Scan { delta_f_mhz: default_scan_detunings(), temperatures_uk: default_scan_temperatures() },
            RunKind::Fit => RunSpec::Fit { input: None, model: default_fit_model(), alpha: None, free_widths: false },
            RunKind::Oracle => RunSpec::Oracle {},
        }
    }
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), reason: reason.into() }
}

fn positive(v: f64, field: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(field, format!("must be positive and finite, got {v}")))
    }
}

fn positive_opt(v: Option<f64>, field: &str) -> Result<()> {
    v.map_or(Ok(()), |v| positive(v, field))
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        positive_opt(self.species.mass_kg, "species.mass_kg")?;
        positive_opt(self.species.hyperfine_ghz, "species.hyperfine_GHz")?;
        if let Some(g) = self.species.g_j {
            if !g.is_finite() {
                return Err(config_error("species.g_J", "must be finite"));
            }
        }
        if let Some(g) = self.species.g_i {
            if !g.is_finite() {
                return Err(config_error("species.g_I", "must be finite"));
            }
        }
        for f in self.trap.frequencies_hz {
            positive(f, "trap.frequencies_Hz")?;
        }
        if !(self.trap.gravity_m_s2 >= 0.0) || !self.trap.gravity_m_s2.is_finite() {
            return Err(config_error("trap.gravity_m_s2", "must be finite and nonnegative"));
        }
        positive(self.splitting_mhz, "splitting_MHz")?;
        positive(self.temperature_uk, "temperature_uK")?;
        if !self.delta_f_mhz.is_finite() {
            return Err(config_error("delta_f_MHz", "must be finite"));
        }
        positive(self.rate_scale, "rate_scale")?;
        if !(0.0..=1.0).contains(&self.initial.r0) {
            return Err(config_error("initial.R0", "must lie in [0, 1]"));
        }
        positive(self.initial.n_total, "initial.N_total")?;
        if self.mc.n_samples < 1000 {
            return Err(config_error("mc.n_samples", "need at least 1000 samples"));
        }
        positive(self.tolerances.oracle_relative, "tolerances.oracle_relative")?;
        positive(self.tolerances.oracle_sigma, "tolerances.oracle_sigma")?;
        match &self.spectrum {
            SpectrumSpec::Reference { params } => {
                params.validate().map_err(|e| config_error("spectrum.params", e.to_string()))?
            }
            SpectrumSpec::White { level } => positive(*level, "spectrum.level_T2_per_Hz")?,
            SpectrumSpec::Monochromatic { integrated_power } => positive(*integrated_power, "spectrum.integrated_power_T2")?,
            SpectrumSpec::Gaussian { sigma_khz, amplitude } => {
                positive(*sigma_khz, "spectrum.sigma_kHz")?;
                positive(*amplitude, "spectrum.amplitude_T2_per_Hz")?;
            }
            SpectrumSpec::Tabulated { .. } => {}
            SpectrumSpec::Components { components } => {
                if components.is_empty() {
                    return Err(config_error("spectrum.components", "need at least one component"));
                }
                for c in components {
                    c.validate().map_err(|e| config_error("spectrum.components", e.to_string()))?;
                }
            }
        }
        if let Some(run) = &self.run {
            validate_run(run)?;
        }
        Ok(())
    }

    pub fn species(&self) -> Result<AtomSpecies> {
        let mut s = AtomSpecies::rb87();
        if let Some(m) = self.species.mass_kg {
            s.mass = m;
        }
        if let Some(hfs) = self.species.hyperfine_ghz {
            s.hyperfine_splitting = PLANCK * hfs * 1e9;
        }
        if let Some(g) = self.species.g_j {
            s.electron_g = g;
        }
        if let Some(g) = self.species.g_i {
            s.nuclear_g = g;
        }
        s.lande_gf = s.lande_from_g_factors(s.f);
        s.validate()?;
        Ok(s)
    }

    pub fn trap(&self) -> TrapGeometry {
        TrapGeometry {
            omega1: self.trap.frequencies_hz.map(|f| 2.0 * PI * f),
            gravity: if self.trap.gravity { self.trap.gravity_m_s2 } else { 0.0 },
            bias_splitting: PLANCK * self.carrier_hz(),
        }
    }

    pub fn carrier_hz(&self) -> f64 {
        self.splitting_mhz * 1e6
    }

    /// The scenario's spectrum at Δf = 0.
    pub fn base_spectrum(&self) -> Result<NoiseSpectrum> {
        self.spectrum.build(self.carrier_hz())
    }

    /// Rate inputs at detuning `delta_f_hz` and temperature `temperature_k`,
    /// shifting `base` (from [`Self::base_spectrum`]).
    pub fn rate_config_with(&self, base: &NoiseSpectrum, delta_f_hz: f64, temperature_k: f64) -> Result<RateConfig> {
        let spectrum = if self.spectrum.is_white() || delta_f_hz == 0.0 { base.clone() } else { base.shifted(delta_f_hz) };
        let config = RateConfig {
            species: self.species()?,
            trap: self.trap(),
            spectrum,
            temperature: temperature_k,
            rate_scale: self.rate_scale,
        };
        config.validate()?;
        Ok(config)
    }

    /// Rate inputs at the scenario's own detuning and temperature.
    pub fn rate_config(&self) -> Result<RateConfig> {
        self.rate_config_with(&self.base_spectrum()?, self.delta_f_mhz * 1e6, self.temperature_uk * 1e-6)
    }

    /// The run parameters for `kind`: the `run` section when it matches, the
    /// defaults when there is none.
    pub fn run_for(&self, kind: RunKind) -> Result<RunSpec> {
        match &self.run {
            None => Ok(RunSpec::default_for(kind)),
            Some(run) if run.kind() == kind => Ok(run.clone()),
            Some(run) => Err(config_error(
                "run.type",
                format!("scenario describes a `{}` run but `{}` was requested", run.kind().as_str(), kind.as_str()),
            )),
        }
    }

    /// Makes relative file references absolute with respect to `base_dir`.
    pub fn resolve_paths(&mut self, base_dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        if let SpectrumSpec::Tabulated { path } = &mut self.spectrum {
            fix(path);
        }
        if let Some(RunSpec::Fit { input: Some(path), .. }) = &mut self.run {
            fix(path);
        }
    }
}

fn validate_run(run: &RunSpec) -> Result<()> {
    match run {
        RunSpec::Rates {} | RunSpec::Rinf {} | RunSpec::Oracle {} => Ok(()),
        RunSpec::Evolve { duration_ms, samples, gamma_tilde_per_s } => {
            positive(*duration_ms, "run.duration_ms")?;
            if *samples < 2 {
                return Err(config_error("run.samples", "need at least 2 samples"));
            }
            positive_opt(*gamma_tilde_per_s, "run.gamma_tilde_per_s")
        }
        RunSpec::Protocol { segments, samples_per_segment, gamma_tilde_per_s } => {
            if segments.is_empty() {
                return Err(config_error("run.segments", "need at least one segment"));
            }
            for s in segments {
                positive(s.duration_ms, "run.segments.duration_ms")?;
                if !s.delta_f_mhz.is_finite() {
                    return Err(config_error("run.segments.delta_f_MHz", "must be finite"));
                }
                positive_opt(s.temperature_uk, "run.segments.temperature_uK")?;
            }
            if *samples_per_segment == 0 {
                return Err(config_error("run.samples_per_segment", "must be positive"));
            }
            positive_opt(*gamma_tilde_per_s, "run.gamma_tilde_per_s")
        }
        RunSpec::Scan { delta_f_mhz, temperatures_uk } => {
            if delta_f_mhz.is_empty() || delta_f_mhz.iter().any(|d| !d.is_finite()) {
                return Err(config_error("run.delta_f_MHz", "need a nonempty list of finite detunings"));
            }
            if temperatures_uk.is_empty() {
                return Err(config_error("run.temperatures_uK", "need at least one temperature"));
            }
            temperatures_uk.iter().try_for_each(|t| positive(*t, "run.temperatures_uK"))
        }
        RunSpec::Fit { input, alpha, .. } => {
            if input.is_none() {
                return Err(config_error("run.input", "a fit needs an input CSV"));
            }
            if let Some(a) = alpha {
                if !(*a >= 0.0) || !a.is_finite() {
                    return Err(config_error("run.alpha", "must be finite and nonnegative"));
                }
            }
            Ok(())
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

/// Reads a scenario file; relative paths inside resolve against its directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    if let Some(dir) = path.parent() {
        config.resolve_paths(dir);
    }
    Ok(config)
}
