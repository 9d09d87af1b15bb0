//! Population kinetics of the two trapped levels with loss through m_F = 0.
//!
//! ```text
//! dN₁/dt = −(γ₁₂ + γ₁₀) N₁ + γ₂₁ N₂
//! dN₂/dt =   γ₁₂ N₁       − γ₂₁ N₂
//! ```
//!
//! m_F = 0 is absorbing. With γ₁₀ > 0 the populations decay, so R∞ here is the
//! fixed point of the ratio R = N₁/(N₁+N₂), not a population steady state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{reference_spectrum, NoiseSpectrum, ReferenceSpectrumParams};
use crate::rates::{rate_set, RateConfig, RateSet};

/// Detunings closer than this to resonance break the thermal-equilibrium
/// assumption of the rate model; scan rows there are flagged.
pub const EQUILIBRIUM_WINDOW_HZ: f64 = 150.0e3;

fn check_ratios(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be finite and nonnegative"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", "must be finite and nonnegative"));
    }
    Ok(())
}

/// √((1+α+β)² − 4α), written as a sum of squares.
pub(crate) fn ratio_gap(alpha: f64, beta: f64) -> f64 {
    ((1.0 + beta - alpha).powi(2) + 4.0 * alpha * beta).sqrt()
}

/// Asymptotic ratio R∞ = [1+α+β − √((1+α+β)² − 4α)] / 2α.
///
/// Evaluated in the rationalized form 2 / (1+α+β+√…), which is exact at α = 0
/// where it gives 1/(1+β).
pub fn r_infinity(alpha: f64, beta: f64) -> Result<f64> {
    check_ratios(alpha, beta)?;
    Ok(2.0 / (1.0 + alpha + beta + ratio_gap(alpha, beta)))
}

/// Closed-form ratio R(t) for constant rates starting from `r0`.
pub fn analytic_ratio(t: f64, r0: f64, rates: &RateSet) -> Result<f64> {
    if !(0.0..=1.0).contains(&r0) {
        return Err(Error::invalid("r0", "must lie in [0, 1]"));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be nonnegative"));
    }
    let (alpha, beta) = (rates.alpha, rates.beta);
    let r_inf = r_infinity(alpha, beta)?;
    let e = (-rates.gamma_tilde() * t).exp();
    // (R∞ + C e)/(1 + αR∞ C e) with C = (R0 − R∞)/(1 − αR∞R0), cleared of the
    // denominator of C so that αR∞R0 = 1 stays finite.
    let denom_c = 1.0 - alpha * r_inf * r0;
    let num = r_inf * denom_c + (r0 - r_inf) * e;
    let den = denom_c + alpha * r_inf * (r0 - r_inf) * e;
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub n1: f64,
    pub n2: f64,
    /// s
    pub t: f64,
}

impl PopulationState {
    /// `n_total` atoms with fraction `r0` in m_F = 1, at t = 0.
    pub fn from_ratio(r0: f64, n_total: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r0) {
            return Err(Error::invalid("r0", "must lie in [0, 1]"));
        }
        if !(n_total >= 0.0) {
            return Err(Error::invalid("n_total", "must be nonnegative"));
        }
        Ok(PopulationState { n1: r0 * n_total, n2: (1.0 - r0) * n_total, t: 0.0 })
    }

    pub fn total(&self) -> f64 {
        self.n1 + self.n2
    }

    pub fn ratio(&self) -> Option<f64> {
        let total = self.total();
        (total > 0.0).then(|| self.n1 / total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrajectory {
    pub samples: Vec<PopulationState>,
    /// One entry per segment.
    pub rates_used: Vec<RateSet>,
}

impl PopulationTrajectory {
    pub fn last(&self) -> Option<&PopulationState> {
        self.samples.last()
    }
}

/// Exact propagator of the linear rate equations over `dt`.
fn propagate(n: [f64; 2], rates: &RateSet, dt: f64) -> [f64; 2] {
    let (a, b, c) = (rates.gamma_21, rates.gamma_12, rates.gamma_10);
    // eigenvalues s ± d of [[−(b+c), a], [b, −a]]
    let s = -0.5 * (a + b + c);
    let d = 0.5 * ((a - b - c).powi(2) + 4.0 * a * b).sqrt();
    let fast = ((s - d) * dt).exp();
    let slow = ((s + d) * dt).exp();
    let cosh_term = 0.5 * (slow + fast);
    let x = 2.0 * d * dt;
    let sinhc = if x > 0.0 { -(-x).exp_m1() / x } else { 1.0 };
    let sinh_term = slow * dt * sinhc; // e^{st} sinh(dt)/d
    let m11 = -(b + c) - s;
    let m22 = -a - s;
    [
        cosh_term * n[0] + sinh_term * (m11 * n[0] + a * n[1]),
        cosh_term * n[1] + sinh_term * (b * n[0] + m22 * n[1]),
    ]
}

/// Populations at each time of `t_grid` (absolute times, ≥ `initial.t`,
/// strictly increasing). γ₀₁ is neglected.
pub fn evolve_populations(initial: PopulationState, rates: &RateSet, t_grid: &[f64]) -> Result<PopulationTrajectory> {
    if !(initial.n1 >= 0.0 && initial.n2 >= 0.0) {
        return Err(Error::invalid("initial", "populations must be nonnegative"));
    }
    if t_grid.first().is_some_and(|&t0| !(t0 >= initial.t)) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_grid", "times must be strictly increasing from the initial time"));
    }
    let n0 = [initial.n1, initial.n2];
    let samples = t_grid
        .iter()
        .map(|&t| {
            let [n1, n2] = propagate(n0, rates, t - initial.t);
            PopulationState { n1: n1.max(0.0), n2: n2.max(0.0), t }
        })
        .collect();
    Ok(PopulationTrajectory { samples, rates_used: vec![*rates] })
}

/// Ratio of the slowest-decaying eigenmode, the ODE's own notion of R∞.
pub fn slowest_mode_ratio(rates: &RateSet) -> f64 {
    let (a, b, c) = (rates.gamma_21, rates.gamma_12, rates.gamma_10);
    let s = -0.5 * (a + b + c);
    let d = 0.5 * ((a - b - c).powi(2) + 4.0 * a * b).sqrt();
    let lambda = s + d;
    a / (a + b + c + lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSegment {
    /// s
    pub duration: f64,
    pub rate_config: RateConfig,
}

/// Chains constant-noise segments; rates are evaluated once per segment. The
/// trajectory starts with `initial` and holds `samples_per_segment` evenly
/// spaced samples per segment, the last at the segment's end.
pub fn run_protocol(initial: PopulationState, segments: &[ProtocolSegment], samples_per_segment: usize) -> Result<PopulationTrajectory> {
    if segments.is_empty() {
        return Err(Error::invalid("segments", "need at least one segment"));
    }
    if samples_per_segment == 0 {
        return Err(Error::invalid("samples_per_segment", "must be positive"));
    }
    let mut out = PopulationTrajectory { samples: vec![initial], rates_used: Vec::with_capacity(segments.len()) };
    let mut state = initial;
    for seg in segments {
        if !(seg.duration > 0.0) {
            return Err(Error::invalid("duration", "segment duration must be positive"));
        }
        let rates = rate_set(&seg.rate_config)?;
        let grid: Vec<f64> = (1..=samples_per_segment)
            .map(|k| state.t + seg.duration * k as f64 / samples_per_segment as f64)
            .collect();
        let part = evolve_populations(state, &rates, &grid)?;
        state = *part.last().expect("nonempty grid");
        out.samples.extend(part.samples);
        out.rates_used.push(rates);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub delta_f: f64,
    pub temperature: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_21: f64,
    pub r_inf: f64,
    /// False inside the near-resonance window where thermal equilibrium fails.
    pub equilibrium_valid: bool,
}

/// Range of R∞ over temperature at one detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub delta_f: f64,
    pub r_inf_min: f64,
    pub r_inf_max: f64,
    pub equilibrium_valid: bool,
}

/// R∞ over a grid of detunings and temperatures with the composite spectrum.
/// Rows are ordered by detuning, then temperature.
pub fn detuning_scan(
    delta_f_list: &[f64],
    temperatures: &[f64],
    base_config: &RateConfig,
    params: &ReferenceSpectrumParams,
) -> Result<Vec<ScanRow>> {
    let carrier = base_config.trap.bias_splitting / crate::constants::PLANCK;
    let scale = base_config.spectrum.global_scale;
    scan_with(delta_f_list, temperatures, base_config, |df| {
        Ok(reference_spectrum(carrier, df, params)?.scaled(scale))
    })
}

/// Like [`detuning_scan`] with a caller-supplied spectrum for each detuning.
pub fn scan_with<F>(delta_f_list: &[f64], temperatures: &[f64], base_config: &RateConfig, spectrum_for: F) -> Result<Vec<ScanRow>>
where
    F: Fn(f64) -> Result<NoiseSpectrum> + Sync,
{
    if delta_f_list.is_empty() || temperatures.is_empty() {
        return Err(Error::invalid("scan", "detuning and temperature lists must be nonempty"));
    }
    let mut grid: Vec<(f64, f64)> = delta_f_list
        .iter()
        .flat_map(|&df| temperatures.iter().map(move |&t| (df, t)))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    grid.dedup();
    grid.par_iter()
        .map(|&(df, t)| {
            let mut cfg = base_config.clone();
            cfg.spectrum = spectrum_for(df)?;
            cfg.temperature = t;
            let rates = rate_set(&cfg)?;
            Ok(ScanRow {
                delta_f: df,
                temperature: t,
                alpha: rates.alpha,
                beta: rates.beta,
                gamma_21: rates.gamma_21,
                r_inf: rates.r_infinity(),
                equilibrium_valid: df.abs() >= EQUILIBRIUM_WINDOW_HZ,
            })
        })
        .collect()
}

/// Temperature band of a scan: min and max R∞ at each detuning.
pub fn temperature_envelope(rows: &[ScanRow]) -> Vec<EnvelopeRow> {
    let mut out: Vec<EnvelopeRow> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(e) if e.delta_f == r.delta_f => {
                e.r_inf_min = e.r_inf_min.min(r.r_inf);
                e.r_inf_max = e.r_inf_max.max(r.r_inf);
            }
            _ => out.push(EnvelopeRow {
                delta_f: r.delta_f,
                r_inf_min: r.r_inf,
                r_inf_max: r.r_inf,
                equilibrium_valid: r.equilibrium_valid,
            }),
        }
    }
    out
}
