//! Least-squares extraction of relaxation and spectrum parameters.
//!
//! Relaxation curves are fitted either with the single exponential
//! `R∞ + (R0 − R∞) e^{−γ̃t}` or with the full ratio solution of the rate
//! equations at fixed α. Spectra are fitted in log intensity.

mod lm;
mod spectrum;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use lm::{Bounds, LeastSquares, Outcome};

pub use spectrum::{fit_spectrum_model, spectrum_params, SpectrumFitOptions};

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Quantities computed from `params`, without covariance.
    pub derived: Vec<FitParam>,
    /// Root-mean-square of the (weighted) residuals.
    pub residual_rms: f64,
    /// Same at the initialization point.
    pub initial_residual_rms: f64,
    /// In the units of `params`, row-major. Infinite variance marks an
    /// unidentifiable parameter.
    pub covariance: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub unidentifiable: Vec<String>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().chain(&self.derived).find(|p| p.name == name).map(|p| p.value)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        let i = self.params.iter().position(|p| p.name == name)?;
        Some(self.covariance[i][i].sqrt())
    }
}

fn param(name: &str, value: f64) -> FitParam {
    FitParam { name: name.to_string(), value }
}

/// Checked samples with square-root weights.
struct Series {
    t: Vec<f64>,
    y: Vec<f64>,
    sw: Vec<f64>,
}

impl Series {
    fn new(samples: &[(f64, f64)], weights: Option<&[f64]>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::invalid("samples", "need at least 4 samples"));
        }
        if samples.iter().any(|(t, r)| !t.is_finite() || !r.is_finite()) {
            return Err(Error::invalid("samples", "values must be finite"));
        }
        let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
        times.sort_by(f64::total_cmp);
        if times.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("samples", "times must be distinct"));
        }
        let sw = match weights {
            None => vec![1.0; samples.len()],
            Some(w) => {
                if w.len() != samples.len() {
                    return Err(Error::invalid("weights", "length must match samples"));
                }
                if w.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::invalid("weights", "must be finite and nonnegative"));
                }
                if w.iter().filter(|w| **w > 0.0).count() < 4 {
                    return Err(Error::invalid("weights", "need at least 4 positive weights"));
                }
                w.iter().map(|w| w.sqrt()).collect()
            }
        };
        Ok(Series { t: samples.iter().map(|s| s.0).collect(), y: samples.iter().map(|s| s.1).collect(), sw })
    }

    fn len(&self) -> usize {
        self.t.len()
    }

    fn span(&self) -> f64 {
        let (lo, hi) = self.t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        hi - lo
    }

    /// R at the earliest and at the latest time.
    fn ends(&self) -> (f64, f64) {
        let first = (0..self.len()).min_by(|&i, &j| self.t[i].total_cmp(&self.t[j])).unwrap();
        let last = (0..self.len()).max_by(|&i, &j| self.t[i].total_cmp(&self.t[j])).unwrap();
        (self.y[first], self.y[last])
    }

    fn is_constant(&self) -> bool {
        let (lo, hi) = self.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
        hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300)
    }
}

fn rms(cost: f64, n: usize) -> f64 {
    (2.0 * cost / n as f64).sqrt()
}

/// s² (JᵀJ)⁻¹ mapped through the diagonal Jacobian `dvalue` of the reported
/// parameters. Singular directions get infinite variance.
fn covariance(outcome: &Outcome, n_residuals: usize, dvalue: &[f64]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let p = outcome.x.len();
    let dof = n_residuals.saturating_sub(p).max(1);
    let s2 = 2.0 * outcome.cost / dof as f64;
    let a = &outcome.normal;
    let scale: f64 = (0..p).map(|i| a[(i, i)]).fold(0.0, f64::max);
    let singular: Vec<usize> = (0..p).filter(|&i| !(a[(i, i)] > 1e-13 * scale)).collect();
    let mut reduced = a.clone();
    for &i in &singular {
        reduced.row_mut(i).fill(0.0);
        reduced.column_mut(i).fill(0.0);
        reduced[(i, i)] = 1.0;
    }
    let inv = reduced.clone().try_inverse().unwrap_or_else(|| reduced.pseudo_inverse(1e-14 * scale).unwrap_or_else(|_| DMatrix::zeros(p, p)));
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]) * s2 * dvalue[i] * dvalue[j];
            cov[i][j] = if singular.contains(&i) || singular.contains(&j) {
                if i == j { f64::INFINITY } else { 0.0 }
            } else {
                v
            };
        }
        if !singular.contains(&i) {
            cov[i][i] = cov[i][i].max(0.0);
        }
    }
    (cov, singular)
}

struct Relaxation<'a> {
    data: &'a Series,
}

impl LeastSquares for Relaxation<'_> {
    fn n_residuals(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let (r0, rinf, g) = (x[0], x[1], x[2]);
        for i in 0..self.data.len() {
            let e = (-g * self.data.t[i]).exp();
            out[i] = self.data.sw[i] * (rinf + (r0 - rinf) * e - self.data.y[i]);
        }
    }

    fn jacobian(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) {
        let (r0, rinf, g) = (x[0], x[1], x[2]);
        for i in 0..self.data.len() {
            let t = self.data.t[i];
            let e = (-g * t).exp();
            let w = self.data.sw[i];
            out[(i, 0)] = w * e;
            out[(i, 1)] = w * (1.0 - e);
            out[(i, 2)] = -w * (r0 - rinf) * t * e;
        }
    }
}

fn relaxation_bounds(span: f64) -> Bounds {
    Bounds {
        lower: DVector::from_vec(vec![0.0, 0.0, 1e-12 / span]),
        upper: DVector::from_vec(vec![1.0, 1.0, f64::INFINITY]),
    }
}

/// Fits `R(t) = R∞ + (R0 − R∞) e^{−γ̃t}`.
///
/// Parameters are `R0`, `R_inf` (both in [0, 1]) and `gamma_tilde` (> 0, in
/// inverse time units of the samples). Constant data leave γ̃ unidentifiable;
/// it is then reported at its initial value 1/span with infinite variance.
pub fn fit_relaxation(samples: &[(f64, f64)], weights: Option<&[f64]>) -> Result<FitResult> {
    let data = Series::new(samples, weights)?;
    let span = data.span();
    let (first, last) = data.ends();
    let names = ["R0", "R_inf", "gamma_tilde"];

    if data.is_constant() {
        let level = first.clamp(0.0, 1.0);
        let x = DVector::from_vec(vec![level, level, 1.0 / span]);
        let mut r = DVector::zeros(data.len());
        Relaxation { data: &data }.residuals(&x, &mut r);
        let cost = cost_of(&r);
        let mut cov = vec![vec![0.0; 3]; 3];
        cov[2][2] = f64::INFINITY;
        return Ok(FitResult {
            params: names.iter().zip(x.iter()).map(|(n, v)| param(n, *v)).collect(),
            derived: vec![],
            residual_rms: rms(cost, data.len()),
            initial_residual_rms: rms(cost, data.len()),
            covariance: cov,
            converged: true,
            iterations: 0,
            unidentifiable: vec!["gamma_tilde".into()],
            warnings: vec!["constant data: relaxation rate is unidentifiable".into()],
        });
    }

    let x0 = DVector::from_vec(vec![first.clamp(0.0, 1.0), last.clamp(0.0, 1.0), 1.0 / span]);
    let problem = Relaxation { data: &data };
    let out = lm::minimize(&problem, x0, &relaxation_bounds(span), MAX_ITERATIONS)?;
    let (cov, singular) = covariance(&out, data.len(), &[1.0, 1.0, 1.0]);
    let mut x = out.x.clone();
    let mut unidentifiable: Vec<String> = singular.iter().map(|&i| names[i].to_string()).collect();
    if (x[0] - x[1]).abs() <= 1e-12 {
        unidentifiable.push("gamma_tilde".into());
    }
    unidentifiable.sort();
    unidentifiable.dedup();
    if unidentifiable.iter().any(|n| n == "gamma_tilde") && (x[1] - first).abs() < (x[0] - first).abs() {
        // exchange-symmetric fit: keep R0 on the earliest sample's side
        x.swap_rows(0, 1);
    }
    Ok(FitResult {
        params: names.iter().zip(x.iter()).map(|(n, v)| param(n, *v)).collect(),
        derived: vec![],
        residual_rms: rms(out.cost, data.len()),
        initial_residual_rms: rms(out.initial_cost, data.len()),
        covariance: cov,
        converged: out.converged,
        iterations: out.iterations,
        unidentifiable,
        warnings: vec![],
    })
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

struct FullModel<'a> {
    data: &'a Series,
    alpha: f64,
}

impl FullModel<'_> {
    /// R(t) and its gradient in (R0, R∞, γ₂₁).
    fn eval(&self, x: &DVector<f64>, t: f64) -> (f64, [f64; 3]) {
        let (r0, u, g) = (x[0], x[1], x[2]);
        let a = self.alpha;
        let gap = 1.0 / u - a * u;
        let rate = gap * g;
        let e = (-rate * t).exp();
        let cn = r0 - u;
        let cd = 1.0 - a * u * r0;
        let p = u * cd + cn * e;
        let q = cd + a * u * cn * e;
        let de_du = -t * e * (-1.0 / (u * u) - a) * g;
        let de_dg = -t * e * gap;
        let dp = [-a * u * u + e, cd - a * u * r0 - e + cn * de_du, cn * de_dg];
        let dq = [-a * u + a * u * e, -a * r0 + a * cn * e - a * u * e + a * u * cn * de_du, a * u * cn * de_dg];
        let grad = [0, 1, 2].map(|k| (dp[k] * q - p * dq[k]) / (q * q));
        (p / q, grad)
    }
}

impl LeastSquares for FullModel<'_> {
    fn n_residuals(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for i in 0..self.data.len() {
            out[i] = self.data.sw[i] * (self.eval(x, self.data.t[i]).0 - self.data.y[i]);
        }
    }

    fn jacobian(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) {
        for i in 0..self.data.len() {
            let (_, grad) = self.eval(x, self.data.t[i]);
            for k in 0..3 {
                out[(i, k)] = self.data.sw[i] * grad[k];
            }
        }
    }
}

/// Fits the full ratio solution with α held fixed.
///
/// Parameters are `R0`, `R_inf` and `gamma_21`; `gamma_tilde` and `beta` are
/// reported as derived values. R∞ is confined to (0, min(1, 1/α)], the range
/// reachable with β ≥ 0. Starts from the single-exponential fit, to which the
/// model reduces at α = 0.
pub fn fit_full_model(samples: &[(f64, f64)], alpha_fixed: f64, weights: Option<&[f64]>) -> Result<FitResult> {
    if !(alpha_fixed >= 0.0) || !alpha_fixed.is_finite() {
        return Err(Error::invalid("alpha_fixed", "must be finite and nonnegative"));
    }
    let data = Series::new(samples, weights)?;
    let start = fit_relaxation(samples, weights)?;
    if !start.unidentifiable.is_empty() {
        return Err(Error::Fit(format!("relaxation is unidentifiable in {:?}", start.unidentifiable)));
    }
    let span = data.span();
    let a = alpha_fixed;
    let r_max = if a > 1.0 { 1.0 / a } else { 1.0 };
    let r_min = 1e-9;
    let u0 = start.get("R_inf").unwrap().clamp(r_min, r_max);
    let gap0 = 1.0 / u0 - a * u0;
    let g0 = if gap0 > 0.0 { start.get("gamma_tilde").unwrap() / gap0 } else { 1.0 / span };
    let x0 = DVector::from_vec(vec![start.get("R0").unwrap(), u0, g0]);
    let bounds = Bounds {
        lower: DVector::from_vec(vec![0.0, r_min, 1e-12 / span]),
        upper: DVector::from_vec(vec![1.0, r_max, f64::INFINITY]),
    };
    let problem = FullModel { data: &data, alpha: a };
    let out = lm::minimize(&problem, x0, &bounds, MAX_ITERATIONS)?;
    let (cov, singular) = covariance(&out, data.len(), &[1.0, 1.0, 1.0]);
    let names = ["R0", "R_inf", "gamma_21"];
    let (u, g) = (out.x[1], out.x[2]);
    let beta = (1.0 + a * u * u) / u - 1.0 - a;
    Ok(FitResult {
        params: names.iter().zip(out.x.iter()).map(|(n, v)| param(n, *v)).collect(),
        derived: vec![param("gamma_tilde", (1.0 / u - a * u) * g), param("beta", beta.max(0.0))],
        residual_rms: rms(out.cost, data.len()),
        initial_residual_rms: rms(out.initial_cost, data.len()),
        covariance: cov,
        converged: out.converged,
        iterations: out.iterations,
        unidentifiable: singular.iter().map(|&i| names[i].to_string()).collect(),
        warnings: vec![],
    })
}
