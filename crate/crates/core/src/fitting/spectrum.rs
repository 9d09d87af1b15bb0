//! Log-intensity fit of the four-component noise spectrum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{self, Bounds, LeastSquares};
use super::{covariance, param, rms, FitResult, MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::noise::ReferenceSpectrumParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumFitOptions {
    /// Starting shape. Amplitudes, floor and centre are re-estimated from the
    /// table; widths and the side-peak offset are taken from here.
    pub initial: ReferenceSpectrumParams,
    /// Also fit the Lorentzian FWHM and the Gaussian envelope of the centre peak.
    pub free_widths: bool,
}

impl Default for SpectrumFitOptions {
    fn default() -> Self {
        SpectrumFitOptions { initial: ReferenceSpectrumParams::FIXTURE_V1, free_widths: false }
    }
}

// internal parameter slots; amplitudes and widths are logarithms
const CENTER: usize = 0;
const LN_PEAK: usize = 1;
const LN_OFFSET: usize = 2;
const LN_SIDE_SIGMA: usize = 3;
const LN_SIDE: usize = 4;
const LN_WHITE: usize = 5;
const LN_FWHM: usize = 6;
const LN_ENVELOPE: usize = 7;

const NAMES: [&str; 8] = [
    "center_hz",
    "center_amplitude",
    "side_offset_hz",
    "side_sigma_hz",
    "side_amplitude",
    "white_level",
    "lorentz_fwhm_hz",
    "gauss_sigma_hz",
];

pub(super) struct LogSpectrum<'a> {
    pub(super) f: &'a [f64],
    pub(super) ln_s: Vec<f64>,
    /// ln FWHM and ln σ when not fitted.
    pub(super) fixed_widths: Option<(f64, f64)>,
}

impl LogSpectrum<'_> {
    fn widths(&self, x: &DVector<f64>) -> (f64, f64) {
        match self.fixed_widths {
            Some(w) => w,
            None => (x[LN_FWHM], x[LN_ENVELOPE]),
        }
    }

    /// Density and its gradient in the eight internal parameters.
    fn eval(&self, x: &DVector<f64>, f: f64) -> (f64, [f64; 8]) {
        let (ln_fwhm, ln_env) = self.widths(x);
        let c = x[CENTER];
        let hw = 0.5 * ln_fwhm.exp();
        let env = ln_env.exp();
        let o = x[LN_OFFSET].exp();
        let s = x[LN_SIDE_SIGMA].exp();
        let d = f - c;
        let lor = hw * hw / (d * d + hw * hw);
        let peak = x[LN_PEAK].exp() * lor * (-0.5 * d * d / (env * env)).exp();
        let white = x[LN_WHITE].exp();
        let mut grad = [0.0; 8];
        grad[CENTER] = peak * (2.0 * d / (d * d + hw * hw) + d / (env * env));
        grad[LN_PEAK] = peak;
        grad[LN_FWHM] = peak * 2.0 * d * d / (d * d + hw * hw);
        grad[LN_ENVELOPE] = peak * d * d / (env * env);
        grad[LN_WHITE] = white;
        let mut total = peak + white;
        for sign in [-1.0, 1.0] {
            let e = f - c - sign * o;
            let side = x[LN_SIDE].exp() * (-0.5 * e * e / (s * s)).exp();
            total += side;
            grad[CENTER] += side * e / (s * s);
            grad[LN_OFFSET] += sign * side * e * o / (s * s);
            grad[LN_SIDE_SIGMA] += side * e * e / (s * s);
            grad[LN_SIDE] += side;
        }
        (total, grad)
    }
}

impl LeastSquares for LogSpectrum<'_> {
    fn n_residuals(&self) -> usize {
        self.f.len()
    }

    fn residuals(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for i in 0..self.f.len() {
            out[i] = self.eval(x, self.f[i]).0.ln() - self.ln_s[i];
        }
    }

    fn jacobian(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) {
        let n = x.len();
        for i in 0..self.f.len() {
            let (total, grad) = self.eval(x, self.f[i]);
            for k in 0..n {
                out[(i, k)] = grad[k] / total;
            }
        }
    }
}

/// Fits centre peak, symmetric side peaks and white floor to a table of
/// (Hz, T²/Hz) by least squares in ln S.
///
/// Reported parameters use physical units; fixed widths appear among the
/// derived values.
pub fn fit_spectrum_model(table: &[(f64, f64)], options: &SpectrumFitOptions) -> Result<FitResult> {
    options.initial.validate()?;
    if table.len() < 20 {
        return Err(Error::invalid("table", "need at least 20 points"));
    }
    if table.iter().any(|&(f, s)| !(f >= 0.0) || !f.is_finite() || !(s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid("table", "frequencies must be nonnegative and densities positive"));
    }
    let mut rows = table.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid("table", "frequencies must be distinct"));
    }
    let f: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let span = f[f.len() - 1] - f[0];
    let spacing = f.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

    let mut warnings = Vec::new();
    let mut sorted = s.clone();
    sorted.sort_by(f64::total_cmp);
    let (s_min, s_max) = (sorted[0], sorted[sorted.len() - 1]);
    if s_max / s_min < 1e3 {
        warnings.push(format!("dynamic range is only {:.1} decades", (s_max / s_min).log10()));
    }
    let i_max = (0..s.len()).max_by(|&i, &j| s[i].total_cmp(&s[j])).unwrap();
    if i_max == 0 || i_max == s.len() - 1 {
        warnings.push("maximum lies at the table edge; peak may not be spanned".into());
    }

    let init = &options.initial;
    let center = f[i_max];
    let white = sorted[sorted.len() / 10];
    let side_guess = rows
        .iter()
        .filter(|(fi, _)| ((fi - center).abs() - init.side_offset_hz).abs() < init.side_sigma_hz)
        .map(|r| r.1)
        .fold(0.0, f64::max);
    let side = if side_guess > 0.0 { (side_guess - white).max(1e-3 * white) } else { init.side_amplitude };

    let ln_lo = (s_min * 1e-12).ln();
    let ln_hi = (s_max * 1e3).ln();
    let width_lo = (0.1 * spacing).ln();
    let width_hi = span.ln();
    let mut x0 = vec![
        center,
        s_max.ln(),
        init.side_offset_hz.ln(),
        init.side_sigma_hz.ln(),
        side.ln(),
        white.ln(),
    ];
    let mut lower = vec![f[0], ln_lo, spacing.ln(), width_lo, ln_lo, ln_lo];
    let mut upper = vec![f[f.len() - 1], ln_hi, width_hi, width_hi, ln_hi, ln_hi];
    let fixed_widths = if options.free_widths {
        x0.extend([init.lorentz_fwhm_hz.ln(), init.gauss_sigma_hz.ln()]);
        lower.extend([width_lo, width_lo]);
        upper.extend([width_hi, width_hi]);
        None
    } else {
        Some((init.lorentz_fwhm_hz.ln(), init.gauss_sigma_hz.ln()))
    };
    let mut x0 = DVector::from_vec(x0);
    let bounds = Bounds { lower: DVector::from_vec(lower), upper: DVector::from_vec(upper) };
    for i in 0..x0.len() {
        x0[i] = x0[i].clamp(bounds.lower[i], bounds.upper[i]);
    }

    let problem = LogSpectrum { f: &f, ln_s: s.iter().map(|v| v.ln()).collect(), fixed_widths };
    let out = lm::minimize(&problem, x0, &bounds, MAX_ITERATIONS)?;
    let n = out.x.len();
    let value = |k: usize| if k == CENTER { out.x[k] } else { out.x[k].exp() };
    let dvalue: Vec<f64> = (0..n).map(|k| if k == CENTER { 1.0 } else { value(k) }).collect();
    let (cov, singular) = covariance(&out, f.len(), &dvalue);
    let derived = match fixed_widths {
        Some((a, b)) => vec![param(NAMES[LN_FWHM], a.exp()), param(NAMES[LN_ENVELOPE], b.exp())],
        None => vec![],
    };
    Ok(FitResult {
        params: (0..n).map(|k| param(NAMES[k], value(k))).collect(),
        derived,
        residual_rms: rms(out.cost, f.len()),
        initial_residual_rms: rms(out.initial_cost, f.len()),
        covariance: cov,
        converged: out.converged,
        iterations: out.iterations,
        unidentifiable: singular.iter().map(|&i| NAMES[i].to_string()).collect(),
        warnings,
    })
}

/// Centre frequency and shape parameters of a spectrum fit.
pub fn spectrum_params(fit: &FitResult) -> Result<(f64, ReferenceSpectrumParams)> {
    let get = |name: &str| fit.get(name).ok_or_else(|| Error::Fit(format!("missing parameter {name}")));
    let params = ReferenceSpectrumParams {
        center_amplitude: get("center_amplitude")?,
        lorentz_fwhm_hz: get("lorentz_fwhm_hz")?,
        gauss_sigma_hz: get("gauss_sigma_hz")?,
        side_offset_hz: get("side_offset_hz")?,
        side_sigma_hz: get("side_sigma_hz")?,
        side_amplitude: get("side_amplitude")?,
        white_level: get("white_level")?,
    };
    Ok((get("center_hz")?, params))
}
