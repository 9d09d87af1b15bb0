use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{FitModel, RunKind, RunSpec, ScenarioConfig, SpectrumSpec};
use crate::atomic::TransitionChannel;
use crate::dynamics::{evolve_populations, run_protocol, scan_with, temperature_envelope, PopulationState, PopulationTrajectory, ProtocolSegment};
use crate::error::{Error, Result};
use crate::fitting::{fit_full_model, fit_relaxation, fit_spectrum_model, FitResult, SpectrumFitOptions};
use crate::noise::read_two_column_csv;
use crate::rates::{calibrate_rate_scale, gamma_mc_oracle, gamma_quadrature, rate_set, RateConfig, RateSet};

/// What a run wrote and with which seed.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: RunKind,
    pub seed: u64,
    /// CSV and JSON outputs, manifest last.
    pub files: Vec<PathBuf>,
    /// Key numbers of the run, also stored in the manifest.
    pub summary: Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'static str,
    version: &'static str,
    run: &'static str,
    seed: u64,
    seed_source: &'static str,
    wall_time_s: f64,
    outputs: Vec<String>,
    summary: &'a Value,
    config: &'a ScenarioConfig,
}

/// Runs `kind` with the scenario's parameters and writes `<kind>.csv` (plus
/// run-specific extras) and `manifest.json` into `out_dir`.
///
/// The seed is taken from `seed`, then from the scenario, and is generated
/// otherwise; only oracle runs consume it.
pub fn run_scenario(config: &ScenarioConfig, kind: RunKind, out_dir: &Path, seed: Option<u64>) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let run = config.run_for(kind)?;
    super::validate_run(&run)?;
    let (seed, seed_source) = match (seed, config.mc.seed) {
        (Some(s), _) => (s, "command_line"),
        (None, Some(s)) => (s, "scenario"),
        (None, None) => (rand::random(), "generated"),
    };
    std::fs::create_dir_all(out_dir)?;
    let mut out = Outputs { dir: out_dir, files: Vec::new() };
    let o = &mut out;
    let summary = match &run {
        RunSpec::Rates {} => rates(config, o)?,
        RunSpec::Rinf {} => rinf(config, o)?,
        RunSpec::Evolve { duration_ms, samples, gamma_tilde_per_s } => evolve(config, o, *duration_ms, *samples, *gamma_tilde_per_s)?,
        RunSpec::Protocol { segments, samples_per_segment, gamma_tilde_per_s } => {
            protocol(config, o, segments, *samples_per_segment, *gamma_tilde_per_s)?
        }
        RunSpec::Scan { delta_f_mhz, temperatures_uk } => scan(config, o, delta_f_mhz, temperatures_uk)?,
        RunSpec::Fit { input, model, alpha, free_widths } => {
            let input = input.as_ref().expect("validated");
            fit(config, o, input, *model, *alpha, *free_widths)?
        }
        RunSpec::Oracle {} => oracle(config, o, seed)?,
    };

    let mut echo = config.clone();
    echo.run = Some(run);
    echo.mc.seed = Some(seed);
    let manifest_path = out_dir.join("manifest.json");
    let manifest = Manifest {
        name: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        run: kind.as_str(),
        seed,
        seed_source,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: out.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        summary: &summary,
        config: &echo,
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    out.files.push(manifest_path);
    Ok(RunReport { kind, seed, files: out.files, summary })
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

/// MHz to Hz, rounded to the millihertz so decimal inputs stay tidy.
fn mhz_to_hz(mhz: f64) -> f64 {
    (mhz * 1e9).round() / 1e3
}

#[derive(Serialize)]
struct RatesRow {
    delta_f_hz: f64,
    #[serde(rename = "temperature_K")]
    temperature_k: f64,
    gamma21_per_s: f64,
    gamma12_per_s: f64,
    gamma10_per_s: f64,
    alpha: f64,
    beta: f64,
    gamma_tilde_per_s: f64,
    #[serde(rename = "R_inf")]
    r_inf: f64,
}

fn point_rates(config: &ScenarioConfig) -> Result<(RateConfig, RateSet)> {
    let base = config.base_spectrum()?;
    let rc = config.rate_config_with(&base, mhz_to_hz(config.delta_f_mhz), config.temperature_uk * 1e-6)?;
    let rates = rate_set(&rc)?;
    Ok((rc, rates))
}

fn rates(config: &ScenarioConfig, out: &mut Outputs<'_>) -> Result<Value> {
    let (rc, r) = point_rates(config)?;
    let row = RatesRow {
        delta_f_hz: mhz_to_hz(config.delta_f_mhz),
        temperature_k: rc.temperature,
        gamma21_per_s: r.gamma_21,
        gamma12_per_s: r.gamma_12,
        gamma10_per_s: r.gamma_10,
        alpha: r.alpha,
        beta: r.beta,
        gamma_tilde_per_s: r.gamma_tilde(),
        r_inf: r.r_infinity(),
    };
    out.csv("rates.csv", [&row])?;
    let summary = json!({ "alpha": r.alpha, "beta": r.beta, "gamma_tilde_per_s": row.gamma_tilde_per_s, "R_inf": row.r_inf });
    Ok(summary)
}

#[derive(Serialize)]
struct RinfRow {
    alpha: f64,
    beta: f64,
    #[serde(rename = "R_inf")]
    r_inf: f64,
}

fn rinf(config: &ScenarioConfig, out: &mut Outputs<'_>) -> Result<Value> {
    let (_, r) = point_rates(config)?;
    let row = RinfRow { alpha: r.alpha, beta: r.beta, r_inf: r.r_infinity() };
    out.csv("rinf.csv", [&row])?;
    Ok(json!({ "alpha": row.alpha, "beta": row.beta, "R_inf": row.r_inf }))
}

#[derive(Serialize)]
struct TrajectoryRow {
    t_s: f64,
    #[serde(rename = "N1")]
    n1: f64,
    #[serde(rename = "N2")]
    n2: f64,
    #[serde(rename = "R")]
    r: f64,
}

fn trajectory_rows(traj: &PopulationTrajectory) -> impl Iterator<Item = TrajectoryRow> + '_ {
    traj.samples.iter().map(|s| TrajectoryRow { t_s: s.t, n1: s.n1, n2: s.n2, r: s.ratio().unwrap_or(f64::NAN) })
}

fn initial_state(config: &ScenarioConfig) -> Result<PopulationState> {
    PopulationState::from_ratio(config.initial.r0, config.initial.n_total)
}

fn evolve(config: &ScenarioConfig, out: &mut Outputs<'_>, duration_ms: f64, samples: usize, gamma_tilde: Option<f64>) -> Result<Value> {
    let (mut rc, mut r) = point_rates(config)?;
    if let Some(target) = gamma_tilde {
        rc.rate_scale = calibrate_rate_scale(&rc, target)?;
        r = rate_set(&rc)?;
    }
    let duration = duration_ms * 1e-3;
    let grid: Vec<f64> = (0..samples).map(|k| duration * k as f64 / (samples - 1) as f64).collect();
    let traj = evolve_populations(initial_state(config)?, &r, &grid)?;
    out.csv("evolve.csv", trajectory_rows(&traj))?;
    let last = traj.last().expect("nonempty grid");
    let summary = json!({
        "rate_scale": rc.rate_scale,
        "gamma_tilde_per_s": r.gamma_tilde(),
        "R_inf": r.r_infinity(),
        "final_R": last.ratio(),
    });
    Ok(summary)
}

fn protocol(
    config: &ScenarioConfig,
    out: &mut Outputs<'_>,
    specs: &[super::SegmentSpec],
    samples_per_segment: usize,
    gamma_tilde: Option<f64>,
) -> Result<Value> {
    let base = config.base_spectrum()?;
    let mut segments = specs
        .iter()
        .map(|s| {
            let t = s.temperature_uk.unwrap_or(config.temperature_uk) * 1e-6;
            Ok(ProtocolSegment { duration: s.duration_ms * 1e-3, rate_config: config.rate_config_with(&base, mhz_to_hz(s.delta_f_mhz), t)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = match gamma_tilde {
        Some(target) => calibrate_rate_scale(&segments[0].rate_config, target)?,
        None => config.rate_scale,
    };
    for s in &mut segments {
        s.rate_config.rate_scale = scale;
    }
    let traj = run_protocol(initial_state(config)?, &segments, samples_per_segment)?;
    out.csv("protocol.csv", trajectory_rows(&traj))?;
    let per_segment: Vec<Value> = traj
        .rates_used
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let end = traj.samples[(i + 1) * samples_per_segment];
            let seg = &traj.samples[i * samples_per_segment..=(i + 1) * samples_per_segment];
            let (lo, hi) = seg
                .iter()
                .filter_map(|s| s.ratio())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            json!({
                "gamma_tilde_per_s": r.gamma_tilde(),
                "R_inf": r.r_infinity(),
                "min_R": lo,
                "max_R": hi,
                "final_R": end.ratio(),
            })
        })
        .collect();
    Ok(json!({ "rate_scale": scale, "segments": per_segment }))
}

#[derive(Serialize)]
struct ScanCsvRow {
    delta_f_hz: f64,
    #[serde(rename = "temperature_K")]
    temperature_k: f64,
    alpha: f64,
    beta: f64,
    gamma21_per_s: f64,
    #[serde(rename = "R_inf")]
    r_inf: f64,
}

#[derive(Serialize)]
struct EnvelopeCsvRow {
    delta_f_hz: f64,
    #[serde(rename = "R_inf_min")]
    r_inf_min: f64,
    #[serde(rename = "R_inf_max")]
    r_inf_max: f64,
    equilibrium_valid: bool,
}

fn scan(config: &ScenarioConfig, out: &mut Outputs<'_>, delta_f_mhz: &[f64], temperatures_uk: &[f64]) -> Result<Value> {
    let base = config.base_spectrum()?;
    let base_config = config.rate_config_with(&base, 0.0, config.temperature_uk * 1e-6)?;
    let dfs: Vec<f64> = delta_f_mhz.iter().map(|&d| mhz_to_hz(d)).collect();
    let temps: Vec<f64> = temperatures_uk.iter().map(|t| t * 1e-6).collect();
    let white = matches!(config.spectrum, SpectrumSpec::White { .. });
    let rows = scan_with(&dfs, &temps, &base_config, |df| Ok(if white || df == 0.0 { base.clone() } else { base.shifted(df) }))?;
    out.csv(
        "scan.csv",
        rows.iter().map(|r| ScanCsvRow {
            delta_f_hz: r.delta_f,
            temperature_k: r.temperature,
            alpha: r.alpha,
            beta: r.beta,
            gamma21_per_s: r.gamma_21,
            r_inf: r.r_inf,
        }),
    )?;
    let envelope = temperature_envelope(&rows);
    out.csv(
        "scan_envelope.csv",
        envelope.iter().map(|e| EnvelopeCsvRow {
            delta_f_hz: e.delta_f,
            r_inf_min: e.r_inf_min,
            r_inf_max: e.r_inf_max,
            equilibrium_valid: e.equilibrium_valid,
        }),
    )?;
    Ok(json!({ "points": rows.len(), "detunings": envelope.len() }))
}

#[derive(Serialize)]
struct FitRow<'a> {
    parameter: &'a str,
    value: f64,
    /// Empty for derived values.
    std_error: Option<f64>,
    unit: &'static str,
}

fn unit_of(name: &str) -> &'static str {
    match name {
        "gamma_tilde" | "gamma_21" => "1/s",
        "center_amplitude" | "side_amplitude" | "white_level" => "T^2/Hz",
        n if n.ends_with("_hz") => "Hz",
        _ => "1",
    }
}

fn fit(
    config: &ScenarioConfig,
    out: &mut Outputs<'_>,
    input: &Path,
    model: FitModel,
    alpha: Option<f64>,
    free_widths: bool,
) -> Result<Value> {
    let table = read_two_column_csv(input)?;
    let result: FitResult = match model {
        FitModel::Relaxation => fit_relaxation(&table, None)?,
        FitModel::FullModel => {
            let alpha = match alpha {
                Some(a) => a,
                None => point_rates(config)?.1.alpha,
            };
            fit_full_model(&table, alpha, None)?
        }
        FitModel::Spectrum => {
            let initial = match &config.spectrum {
                SpectrumSpec::Reference { params } => *params,
                _ => SpectrumFitOptions::default().initial,
            };
            fit_spectrum_model(&table, &SpectrumFitOptions { initial, free_widths })?
        }
    };
    let rows = result
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| FitRow { parameter: &p.name, value: p.value, std_error: Some(result.covariance[i][i].sqrt()), unit: unit_of(&p.name) })
        .chain(result.derived.iter().map(|p| FitRow { parameter: &p.name, value: p.value, std_error: None, unit: unit_of(&p.name) }));
    out.csv("fit.csv", rows)?;
    let json_path = out.dir.join("fit.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&result)? + "\n")?;
    out.files.push(json_path);
    let summary = json!({
        "converged": result.converged,
        "iterations": result.iterations,
        "residual_rms": result.residual_rms,
        "unidentifiable": result.unidentifiable,
        "warnings": result.warnings,
    });
    Ok(summary)
}

#[derive(Serialize)]
struct OracleRow {
    channel: String,
    quadrature_per_s: f64,
    mc_mean_per_s: f64,
    mc_stderr_per_s: f64,
    agreement_sigma: f64,
}

fn oracle(config: &ScenarioConfig, out: &mut Outputs<'_>, seed: u64) -> Result<Value> {
    let (rc, _) = point_rates(config)?;
    if rc.spectrum.has_monochromatic() {
        return Err(Error::MonochromaticComponent);
    }
    let tol = &config.tolerances;
    let mut rows = Vec::new();
    let mut all_agree = true;
    for channel in [TransitionChannel::TWO_TO_ONE, TransitionChannel::ONE_TO_TWO, TransitionChannel::ONE_TO_ZERO] {
        let q = gamma_quadrature(&rc, channel)?;
        let mc = gamma_mc_oracle(&rc, channel, config.mc.n_samples, seed)?;
        let diff = (q - mc.mean).abs();
        let sigma = if mc.std_error > 0.0 { diff / mc.std_error } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        all_agree &= diff <= (tol.oracle_relative * q.abs()).max(tol.oracle_sigma * mc.std_error);
        rows.push(OracleRow {
            channel: channel.label(),
            quadrature_per_s: q,
            mc_mean_per_s: mc.mean,
            mc_stderr_per_s: mc.std_error,
            agreement_sigma: sigma,
        });
    }
    out.csv("oracle.csv", &rows)?;
    Ok(json!({ "all_agree": all_agree, "n_samples": config.mc.n_samples }))
}
