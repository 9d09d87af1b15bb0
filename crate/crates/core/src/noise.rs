//! Spectral-density models of the applied magnetic noise.
//!
//! Densities are one-sided, per unit ordinary frequency (T²/Hz). Monochromatic
//! lines carry integrated power (T²) and never appear in pointwise densities;
//! rate integrators treat them in closed form.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumComponent {
    /// Unit-peak Lorentzian times unit-peak Gaussian, scaled by `amplitude`.
    LorentzGaussPeak { center_hz: f64, lorentz_fwhm_hz: f64, gauss_sigma_hz: f64, amplitude: f64 },
    Gaussian { center_hz: f64, sigma_hz: f64, amplitude: f64 },
    White { level: f64 },
    Monochromatic { frequency_hz: f64, integrated_power: f64 },
    /// Linear interpolation between samples, clamped to the end values outside.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl SpectrumComponent {
    pub fn validate(&self) -> Result<()> {
        use SpectrumComponent::*;
        let nonneg = |v: f64, f: &'static str| {
            if v >= 0.0 && v.is_finite() { Ok(()) } else { Err(Error::invalid(f, "must be finite and nonnegative")) }
        };
        let pos = |v: f64, f: &'static str| {
            if v > 0.0 && v.is_finite() { Ok(()) } else { Err(Error::invalid(f, "must be positive")) }
        };
        match *self {
            LorentzGaussPeak { center_hz, lorentz_fwhm_hz, gauss_sigma_hz, amplitude } => {
                nonneg(center_hz, "center_hz")?;
                pos(lorentz_fwhm_hz, "lorentz_fwhm_hz")?;
                pos(gauss_sigma_hz, "gauss_sigma_hz")?;
                nonneg(amplitude, "amplitude")
            }
            Gaussian { center_hz, sigma_hz, amplitude } => {
                nonneg(center_hz, "center_hz")?;
                pos(sigma_hz, "sigma_hz")?;
                nonneg(amplitude, "amplitude")
            }
            White { level } => nonneg(level, "level"),
            Monochromatic { frequency_hz, integrated_power } => {
                nonneg(frequency_hz, "frequency_hz")?;
                nonneg(integrated_power, "integrated_power")
            }
            Tabulated { ref samples } => {
                if samples.len() < 2 {
                    return Err(Error::invalid("samples", "need at least two samples"));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::invalid("samples", "frequencies must be strictly increasing"));
                }
                for &(f, s) in samples {
                    nonneg(f, "samples.frequency")?;
                    nonneg(s, "samples.density")?;
                }
                Ok(())
            }
        }
    }

    pub(crate) fn density(&self, f: f64) -> f64 {
        use SpectrumComponent::*;
        match *self {
            LorentzGaussPeak { center_hz, lorentz_fwhm_hz, gauss_sigma_hz, amplitude } => {
                let d = f - center_hz;
                let hw = 0.5 * lorentz_fwhm_hz;
                let z = d / gauss_sigma_hz;
                amplitude * hw * hw / (d * d + hw * hw) * (-0.5 * z * z).exp()
            }
            Gaussian { center_hz, sigma_hz, amplitude } => {
                let z = (f - center_hz) / sigma_hz;
                amplitude * (-0.5 * z * z).exp()
            }
            White { level } => level,
            Monochromatic { .. } => 0.0,
            Tabulated { ref samples } => interpolate(samples, f),
        }
    }

    fn shifted(&self, delta: f64) -> Self {
        use SpectrumComponent::*;
        let mut c = self.clone();
        match &mut c {
            LorentzGaussPeak { center_hz, .. } | Gaussian { center_hz, .. } => *center_hz += delta,
            Monochromatic { frequency_hz, .. } => *frequency_hz += delta,
            Tabulated { samples } => samples.iter_mut().for_each(|s| s.0 += delta),
            White { .. } => {}
        }
        c
    }

    /// Frequencies near which the density has structure.
    fn features(&self, out: &mut Vec<f64>) {
        use SpectrumComponent::*;
        match *self {
            LorentzGaussPeak { center_hz, lorentz_fwhm_hz, gauss_sigma_hz, .. } => {
                out.push(center_hz);
                for k in [1.0, 10.0, 100.0] {
                    let d = 0.5 * k * lorentz_fwhm_hz;
                    out.extend([center_hz - d, center_hz + d]);
                }
                for k in [1.0, 3.0, 6.0] {
                    out.extend([center_hz - k * gauss_sigma_hz, center_hz + k * gauss_sigma_hz]);
                }
            }
            Gaussian { center_hz, sigma_hz, .. } => {
                out.push(center_hz);
                for k in [1.0, 3.0, 6.0] {
                    out.extend([center_hz - k * sigma_hz, center_hz + k * sigma_hz]);
                }
            }
            Tabulated { ref samples } if samples.len() <= 1024 => out.extend(samples.iter().map(|s| s.0)),
            _ => {}
        }
    }
}

fn interpolate(samples: &[(f64, f64)], f: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if f <= first.0 {
        return first.1;
    }
    if f >= last.0 {
        return last.1;
    }
    let i = samples.partition_point(|s| s.0 <= f);
    let (f0, s0) = samples[i - 1];
    let (f1, s1) = samples[i];
    s0 + (s1 - s0) * (f - f0) / (f1 - f0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpectrum {
    pub components: Vec<SpectrumComponent>,
    #[serde(default = "one")]
    pub global_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl NoiseSpectrum {
    pub fn new(components: Vec<SpectrumComponent>) -> Result<Self> {
        let s = NoiseSpectrum { components, global_scale: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn white(level: f64) -> Result<Self> {
        Self::new(vec![SpectrumComponent::White { level }])
    }

    pub fn monochromatic(frequency_hz: f64, integrated_power: f64) -> Result<Self> {
        Self::new(vec![SpectrumComponent::Monochromatic { frequency_hz, integrated_power }])
    }

    pub fn zero() -> Self {
        NoiseSpectrum { components: Vec::new(), global_scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.global_scale >= 0.0) || !self.global_scale.is_finite() {
            return Err(Error::invalid("global_scale", "must be finite and nonnegative"));
        }
        self.components.iter().try_for_each(SpectrumComponent::validate)
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.global_scale *= k;
        self
    }

    /// Same spectrum moved by `delta` Hz.
    pub fn shifted(&self, delta: f64) -> Self {
        NoiseSpectrum {
            components: self.components.iter().map(|c| c.shifted(delta)).collect(),
            global_scale: self.global_scale,
        }
    }

    pub fn has_monochromatic(&self) -> bool {
        self.components.iter().any(|c| matches!(c, SpectrumComponent::Monochromatic { .. }))
    }

    /// Monochromatic lines as (frequency Hz, scaled power T²).
    pub fn lines(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.components.iter().filter_map(move |c| match *c {
            SpectrumComponent::Monochromatic { frequency_hz, integrated_power } => {
                Some((frequency_hz, integrated_power * self.global_scale))
            }
            _ => None,
        })
    }

    /// Continuous density at `f` (T²/Hz). Monochromatic lines are excluded;
    /// check [`NoiseSpectrum::has_monochromatic`] when that matters.
    pub fn spectral_density(&self, f: f64) -> Result<f64> {
        if !(f >= 0.0) {
            return Err(Error::invalid("f", "frequency must be nonnegative"));
        }
        Ok(self.density(f))
    }

    #[inline]
    pub(crate) fn density(&self, f: f64) -> f64 {
        self.global_scale * self.components.iter().map(|c| c.density(f)).sum::<f64>()
    }

    /// Sorted characteristic frequencies of all components.
    pub(crate) fn features(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.components.iter().for_each(|c| c.features(&mut out));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Power (T²) in `[f_lo, f_hi]`, including monochromatic lines inside the band.
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        if !(f_lo >= 0.0) || !(f_hi > f_lo) {
            return Err(Error::invalid("band", "need 0 <= f_lo < f_hi"));
        }
        let mut points = vec![f_lo];
        points.extend(self.features().into_iter().filter(|&f| f > f_lo && f < f_hi));
        points.push(f_hi);
        let tol = Tolerance { relative: 1e-10, absolute: 0.0, max_intervals: 8000 };
        let continuous = quadrature::integrate(|f| self.density(f), &points, tol)?.value;
        let lines: f64 = self.lines().filter(|&(f, _)| f >= f_lo && f <= f_hi).map(|(_, p)| p).sum();
        Ok(continuous + lines)
    }

    /// Tabulated spectrum from a two-column CSV (`frequency_hz`, `density`), header optional.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let samples = read_two_column_csv(path)?;
        Self::new(vec![SpectrumComponent::Tabulated { samples }])
    }
}

/// Reads `x, y` rows from a CSV file; a non-numeric first row is treated as a header.
pub fn read_two_column_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::invalid("csv", format!("row {} has fewer than two columns", i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => out.push((x, y)),
            _ if i == 0 => continue,
            _ => return Err(Error::invalid("csv", format!("row {} is not numeric", i + 1))),
        }
    }
    Ok(out)
}

/// Shape parameters of the composite noise model: a narrow central peak, two
/// identical side peaks placed symmetrically around it, and a white floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpectrumParams {
    /// T²/Hz
    pub center_amplitude: f64,
    pub lorentz_fwhm_hz: f64,
    pub gauss_sigma_hz: f64,
    pub side_offset_hz: f64,
    pub side_sigma_hz: f64,
    /// T²/Hz
    pub side_amplitude: f64,
    /// T²/Hz
    pub white_level: f64,
}

impl ReferenceSpectrumParams {
    /// Reference fixture values (version 1). Side-peak and floor values are
    /// reconstructed estimates; see `fixtures/README.md`.
    pub const FIXTURE_V1: Self = ReferenceSpectrumParams {
        center_amplitude: 1.0e-16,
        lorentz_fwhm_hz: 1.0e3,
        gauss_sigma_hz: 150.0e3,
        side_offset_hz: 0.75e6,
        side_sigma_hz: 60.0e3,
        side_amplitude: 1.0e-22,
        white_level: 1.0e-27,
    };

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.center_amplitude, "center_amplitude", false),
            (self.lorentz_fwhm_hz, "lorentz_fwhm_hz", true),
            (self.gauss_sigma_hz, "gauss_sigma_hz", true),
            (self.side_offset_hz, "side_offset_hz", false),
            (self.side_sigma_hz, "side_sigma_hz", true),
            (self.side_amplitude, "side_amplitude", false),
            (self.white_level, "white_level", false),
        ];
        for (v, name, strict) in checks {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if !ok {
                return Err(Error::invalid(name, if strict { "must be positive" } else { "must be nonnegative" }));
            }
        }
        Ok(())
    }
}

impl Default for ReferenceSpectrumParams {
    fn default() -> Self {
        Self::FIXTURE_V1
    }
}

/// Composite spectrum whose central peak sits at `carrier_hz + delta_f`.
pub fn reference_spectrum(carrier_hz: f64, delta_f: f64, params: &ReferenceSpectrumParams) -> Result<NoiseSpectrum> {
    params.validate()?;
    let c = carrier_hz + delta_f;
    if !(c - params.side_offset_hz >= 0.0) {
        return Err(Error::invalid("delta_f", "spectrum would extend to negative frequency"));
    }
    NoiseSpectrum::new(vec![
        SpectrumComponent::LorentzGaussPeak {
            center_hz: c,
            lorentz_fwhm_hz: params.lorentz_fwhm_hz,
            gauss_sigma_hz: params.gauss_sigma_hz,
            amplitude: params.center_amplitude,
        },
        SpectrumComponent::Gaussian {
            center_hz: c - params.side_offset_hz,
            sigma_hz: params.side_sigma_hz,
            amplitude: params.side_amplitude,
        },
        SpectrumComponent::Gaussian {
            center_hz: c + params.side_offset_hz,
            sigma_hz: params.side_sigma_hz,
            amplitude: params.side_amplitude,
        },
        SpectrumComponent::White { level: params.white_level },
    ])
}
