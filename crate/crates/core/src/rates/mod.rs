//! Spin-flip rates of a thermal cloud driven by magnetic noise.
//!
//! An atom at position r in level i flips to f by exchanging a noise quantum of
//! energy ħω = E⁰_if + |V_f(r) − V_i(r)|: the local splitting, which is smallest
//! at the field minimum. Averaging over the Maxwell–Boltzmann distribution of
//! level i and rescaling space so that |V_f − V_i| = q² k_BT gives
//!
//! ```text
//! γ_if = 4 m_i^{3/2}/√π ∫₀^∞ dq q² e^{−(m_i q² + η²/m_i)} sinh(2ηq)/(2ηq) Γ_if(ω(q))
//! ```
//!
//! with η = (g/ω₁z)√(M/2k_BT) the gravitational sag parameter. For a constant
//! Γ the weight integrates to exactly one. [`gamma_quadrature`] evaluates the
//! one-dimensional form; [`oracle::gamma_mc_oracle`] samples positions
//! directly and serves as an independent check.

pub mod oracle;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::atomic::{
    bias_field_for_splitting, transverse_coupling_strength, zeeman_splitting, AtomSpecies, TransitionChannel,
    TrapGeometry,
};
use crate::constants::{BOHR_MAGNETON, BOLTZMANN, HBAR, PLANCK};
use crate::error::{Error, Result};
use crate::noise::{reference_spectrum, NoiseSpectrum, ReferenceSpectrumParams};
use crate::quadrature::{self, Tolerance};

pub use oracle::{gamma_mc_oracle, McEstimate};

/// Rate calibration that places γ̃ at 300 s⁻¹ for the reference spectrum on
/// resonance at 1 μK. Ratios α, β and R∞ do not depend on it.
pub const DEFAULT_RATE_SCALE: f64 = 0.788_759_634_71;

/// Relative tolerance of the reduced rate integral.
pub const QUAD_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub species: AtomSpecies,
    pub trap: TrapGeometry,
    pub spectrum: NoiseSpectrum,
    /// K
    pub temperature: f64,
    pub rate_scale: f64,
}

impl RateConfig {
    /// Reference setup with the composite spectrum detuned by `delta_f` Hz.
    pub fn reference(delta_f: f64, temperature: f64) -> Result<Self> {
        let trap = TrapGeometry::reference();
        let spectrum = reference_spectrum(trap.bias_splitting / PLANCK, delta_f, &ReferenceSpectrumParams::default())?;
        Ok(RateConfig {
            species: AtomSpecies::rb87(),
            trap,
            spectrum,
            temperature,
            rate_scale: DEFAULT_RATE_SCALE,
        })
    }

    pub fn with_spectrum(mut self, spectrum: NoiseSpectrum) -> Self {
        self.spectrum = spectrum;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.trap.validate()?;
        self.spectrum.validate()?;
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if !(self.rate_scale >= 0.0) || !self.rate_scale.is_finite() {
            return Err(Error::invalid("rate_scale", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.trap.eta(self.species.mass, self.temperature)
    }

    /// Transition energy of `channel` at the trap minimum (J).
    pub fn channel_splitting(&self, channel: TransitionChannel) -> Result<f64> {
        let b = bias_field_for_splitting(&self.species, self.trap.bias_splitting)?;
        zeeman_splitting(&self.species, channel, b)
    }

    /// Γ_if / S(f): converts a per-Hz density (T²/Hz) into a rate (1/s).
    pub fn coupling_prefactor(&self, channel: TransitionChannel) -> Result<f64> {
        let kappa = transverse_coupling_strength(channel)?;
        let g = self.species.lande_gf * BOHR_MAGNETON / HBAR;
        // S_B(ω) = S(f) / 2π
        Ok(self.rate_scale * g * g * kappa / (2.0 * PI))
    }
}

/// Rates of the three channels feeding the two-level kinetics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub gamma_21: f64,
    pub gamma_12: f64,
    pub gamma_10: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl RateSet {
    pub fn from_rates(gamma_21: f64, gamma_12: f64, gamma_10: f64) -> Result<Self> {
        for (v, name) in [(gamma_21, "gamma_21"), (gamma_12, "gamma_12"), (gamma_10, "gamma_10")] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "rates must be finite and nonnegative"));
            }
        }
        if gamma_21 == 0.0 {
            return Err(Error::ZeroReferenceRate);
        }
        Ok(RateSet { gamma_21, gamma_12, gamma_10, alpha: gamma_10 / gamma_21, beta: gamma_12 / gamma_21 })
    }

    /// Same ratios with every rate multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        RateSet {
            gamma_21: self.gamma_21 * k,
            gamma_12: self.gamma_12 * k,
            gamma_10: self.gamma_10 * k,
            ..*self
        }
    }

    pub fn r_infinity(&self) -> f64 {
        crate::dynamics::r_infinity(self.alpha, self.beta).expect("ratios of valid rates")
    }

    /// Relaxation rate γ̃ = (1/R∞ − αR∞) γ₂₁ of the population ratio.
    pub fn gamma_tilde(&self) -> f64 {
        crate::dynamics::ratio_gap(self.alpha, self.beta) * self.gamma_21
    }
}

/// Normalized phase-space weight of the reduced rate integral at `q`.
pub fn thermal_weight(m_i: f64, eta: f64, q: f64) -> f64 {
    let a = eta / m_i;
    let x = 4.0 * eta * q;
    let sinh_ratio = if x > 1e-300 { -(-x).exp_m1() / x } else { 1.0 };
    4.0 * m_i.powf(1.5) / PI.sqrt() * q * q * (-m_i * (q - a).powi(2)).exp() * sinh_ratio
}

/// Upper limit of the reduced integral; the weight there is below e⁻⁴⁹.
pub fn q_cutoff(m_i: f64, eta: f64) -> f64 {
    eta / m_i + 7.0 / m_i.sqrt()
}

/// ∫ thermal_weight(q) · g(q) dq over [0, q_cutoff], with extra breakpoints.
pub fn reduced_integral<G: Fn(f64) -> f64>(m_i: f64, eta: f64, g: G, breakpoints: &[f64], rel_tol: f64) -> Result<f64> {
    if !(m_i > 0.0) || !(eta >= 0.0) {
        return Err(Error::invalid("m_i", "initial level must be trapped and eta nonnegative"));
    }
    let q_max = q_cutoff(m_i, eta);
    let mut pts = vec![0.0, q_max];
    pts.push(eta / m_i);
    pts.extend(breakpoints.iter().copied().filter(|q| *q > 0.0 && *q < q_max));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * q_max);
    let tol = Tolerance { relative: rel_tol, absolute: 0.0, max_intervals: 20_000 };
    Ok(quadrature::integrate(|q| thermal_weight(m_i, eta, q) * g(q), &pts, tol)?.value)
}

fn trapped_index(channel: TransitionChannel) -> Result<f64> {
    if channel.from.m_f < 1 {
        return Err(Error::invalid("channel", "initial level must be a trapped state (m_F >= 1)"));
    }
    Ok(channel.from.m_f as f64)
}

/// Rate of `channel` from the reduced integral. Monochromatic lines are
/// rejected; [`rate_set`] routes them to the closed form.
pub fn gamma_quadrature(config: &RateConfig, channel: TransitionChannel) -> Result<f64> {
    config.validate()?;
    if config.spectrum.has_monochromatic() {
        return Err(Error::MonochromaticComponent);
    }
    continuous_rate(config, channel, QUAD_REL_TOL)
}

fn continuous_rate(config: &RateConfig, channel: TransitionChannel, rel_tol: f64) -> Result<f64> {
    let prefactor = config.coupling_prefactor(channel)?;
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    let m_i = trapped_index(channel)?;
    let e0 = config.channel_splitting(channel)?;
    let kt = BOLTZMANN * config.temperature;
    let f0 = e0 / PLANCK;
    let f_per_q2 = kt / PLANCK;
    let spectrum = &config.spectrum;
    let breaks: Vec<f64> = spectrum
        .features()
        .into_iter()
        .filter(|&f| f > f0)
        .map(|f| ((f - f0) / f_per_q2).sqrt())
        .collect();
    let g = |q: f64| {
        let f = f0 + q * q * f_per_q2;
        if f <= 0.0 {
            0.0
        } else {
            spectrum.density(f)
        }
    };
    Ok(prefactor * reduced_integral(m_i, config.eta(), g, &breaks, rel_tol)?)
}

/// Closed-form rate contributed by the monochromatic lines of the spectrum.
pub fn gamma_monochromatic(config: &RateConfig, channel: TransitionChannel) -> Result<f64> {
    config.validate()?;
    let prefactor = config.coupling_prefactor(channel)?;
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    let m_i = trapped_index(channel)?;
    let f0 = config.channel_splitting(channel)? / PLANCK;
    let f_per_q2 = BOLTZMANN * config.temperature / PLANCK;
    let eta = config.eta();
    let rate = config
        .spectrum
        .lines()
        .map(|(f_line, power)| {
            let x = (f_line - f0) / f_per_q2;
            if x <= 0.0 {
                return 0.0;
            }
            let q = x.sqrt();
            // δ(f − f_line) in q: 1/|df/dq| = 1/(2 q f_per_q2)
            power * thermal_weight(m_i, eta, q) / (2.0 * q * f_per_q2)
        })
        .sum::<f64>();
    Ok(prefactor * rate)
}

/// γ₂₁, γ₁₂ and γ₁₀ with their ratios.
pub fn rate_set(config: &RateConfig) -> Result<RateSet> {
    config.validate()?;
    let continuous = config
        .spectrum
        .components
        .iter()
        .any(|c| !matches!(c, crate::noise::SpectrumComponent::Monochromatic { .. }));
    let rate = |ch| -> Result<f64> {
        let mut r = 0.0;
        if continuous {
            r += continuous_rate(config, ch, QUAD_REL_TOL)?;
        }
        if config.spectrum.has_monochromatic() {
            r += gamma_monochromatic(config, ch)?;
        }
        Ok(r)
    };
    RateSet::from_rates(
        rate(TransitionChannel::TWO_TO_ONE)?,
        rate(TransitionChannel::ONE_TO_TWO)?,
        rate(TransitionChannel::ONE_TO_ZERO)?,
    )
}

/// `rate_scale` for which γ̃ of `config` equals `target_gamma_tilde` (1/s).
pub fn calibrate_rate_scale(config: &RateConfig, target_gamma_tilde: f64) -> Result<f64> {
    if !(target_gamma_tilde > 0.0) {
        return Err(Error::invalid("target_gamma_tilde", "must be positive"));
    }
    let mut unit = config.clone();
    unit.rate_scale = 1.0;
    let g = rate_set(&unit)?.gamma_tilde();
    Ok(target_gamma_tilde / g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonochromaticBeta {
    pub beta: f64,
    /// False for Δf < 0, where a line below the trap-bottom splitting drives no
    /// transitions and `beta` is only the formal continuation.
    pub transitions_allowed: bool,
}

/// Ratio γ₁₂/γ₂₁ for a single line detuned by `delta_f` from E⁰₁₂/h.
pub fn beta_monochromatic(delta_f: f64, temperature: f64, trap: &TrapGeometry, species: &AtomSpecies) -> Result<MonochromaticBeta> {
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    let kt = BOLTZMANN * temperature;
    let sag = species.mass * trap.gravity.powi(2) / (4.0 * trap.omega1[2].powi(2));
    let beta = 2f64.powf(-1.5) * ((PLANCK * delta_f - sag) / kt).exp();
    Ok(MonochromaticBeta { beta, transitions_allowed: delta_f >= 0.0 })
}

/// Photon energies and cloud sizes of the one-dimensional two-atom picture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleModel {
    pub e_2to1: f64,
    pub e_1to2: f64,
    /// rms size of the m_F = 1 cloud, m
    pub d1: f64,
    /// rms size of the m_F = 2 cloud, m
    pub d2: f64,
}

pub fn simple_model_energies(temperature: f64, e12: f64, species: &AtomSpecies, omega1: f64) -> Result<SimpleModel> {
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    let kt = BOLTZMANN * temperature;
    let d = |m: f64| (kt / (m * species.mass * omega1 * omega1)).sqrt();
    let v_diff = |x: f64| 0.5 * species.mass * omega1 * omega1 * x * x;
    let (d1, d2) = (d(1.0), d(2.0));
    Ok(SimpleModel { e_2to1: e12 + v_diff(d2), e_1to2: e12 + v_diff(d1), d1, d2 })
}

/// Time for an untrapped atom to leave a region of size `region_size`:
/// the shorter of thermal flight and free fall.
pub fn escape_time_estimate(temperature: f64, species: &AtomSpecies, region_size: f64, gravity: f64) -> Result<f64> {
    if !(region_size > 0.0) {
        return Err(Error::invalid("region_size", "must be positive"));
    }
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    let v_thermal = (2.0 * BOLTZMANN * temperature / species.mass).sqrt();
    let ballistic = region_size / v_thermal;
    let fall = if gravity > 0.0 { (2.0 * region_size / gravity).sqrt() } else { f64::INFINITY };
    Ok(ballistic.min(fall))
}
