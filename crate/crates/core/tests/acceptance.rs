//! Acceptance checks. Each test prints one PASS/FAIL line with the measured
//! values and wall time, then asserts.
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spinflip::atomic::{bias_field_for_splitting, zeeman_splitting};
use spinflip::constants::{BOLTZMANN, PLANCK};
use spinflip::dynamics::{analytic_ratio, detuning_scan, evolve_populations};
use spinflip::fitting::{fit_full_model, fit_relaxation};
use spinflip::rates::{beta_monochromatic, gamma_mc_oracle, gamma_quadrature, rate_set, reduced_integral, QUAD_REL_TOL};
use spinflip::scenario::{load_config, run_scenario, RunKind};
use spinflip::{AtomSpecies, NoiseSpectrum, PopulationState, RateConfig, RateSet, ReferenceSpectrumParams, TransitionChannel, TrapGeometry};

const CHANNELS: [TransitionChannel; 3] =
    [TransitionChannel::TWO_TO_ONE, TransitionChannel::ONE_TO_TWO, TransitionChannel::ONE_TO_ZERO];

fn check(id: u32, title: &str, limit_s: f64, body: impl FnOnce() -> (bool, String)) {
    let clock = Instant::now();
    let (ok, detail) = body();
    let secs = clock.elapsed().as_secs_f64();
    let pass = ok && secs < limit_s;
    let line = format!(
        "\n{} [{id:>2}] {title}: {detail} ({secs:.2} s, limit {limit_s} s)\n",
        if pass { "PASS" } else { "FAIL" }
    );
    // straight to the handle so the line shows up even when output is captured
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn c01_white_noise_limit() {
    check(1, "white-noise limit", 1.0, || {
        let cfg = RateConfig::reference(0.0, 1e-6).unwrap().with_spectrum(NoiseSpectrum::white(1e-20).unwrap());
        let r = rate_set(&cfg).unwrap();
        let rinf = r.r_infinity();
        let ok = (r.alpha - 1.5).abs() < 1e-9 && (r.beta - 1.0).abs() < 1e-9 && (rinf - 1.0 / 3.0).abs() < 1e-12;
        (ok, format!("alpha={:.12} beta={:.12} R_inf={:.15}", r.alpha, r.beta, rinf))
    });
}

#[test]
fn c02_breit_rabi_gap() {
    check(2, "Breit-Rabi gap", 1.0, || {
        let rb = AtomSpecies::rb87();
        let b = bias_field_for_splitting(&rb, 18.0e6 * PLANCK).unwrap();
        let e12 = zeeman_splitting(&rb, TransitionChannel::TWO_TO_ONE, b).unwrap();
        let e01 = zeeman_splitting(&rb, TransitionChannel::ONE_TO_ZERO, b).unwrap();
        let gap_khz = (e01 - e12).abs() / PLANCK * 1e-3;
        ((gap_khz - 95.0).abs() <= 2.0, format!("|E01-E12|/h = {gap_khz:.3} kHz, target 95 +/- 2"))
    });
}

#[test]
fn c03_monochromatic_plateaus() {
    check(3, "monochromatic plateaus", 1.0, || {
        let rb = AtomSpecies::rb87();
        let trap = TrapGeometry::reference();
        let plateau = |t: f64, trap: &TrapGeometry| 1.0 / (1.0 + beta_monochromatic(0.0, t, trap, &rb).unwrap().beta);
        let p1 = plateau(1e-6, &trap);
        let p2 = plateau(2e-6, &trap);
        let flat = TrapGeometry { gravity: 0.0, ..trap };
        let p0 = plateau(1e-6, &flat);
        let ok = (p1 - 0.92).abs() <= 0.01 && (p2 - 0.85).abs() <= 0.01 && (p0 - 0.739).abs() <= 0.001;
        (ok, format!("1uK {p1:.4} (0.92+/-0.01), 2uK {p2:.4} (0.85+/-0.01), no gravity {p0:.5} (0.739+/-0.001)"))
    });
}

#[test]
fn c04_oracle_equivalence() {
    check(4, "oracle equivalence", 60.0, || {
        let mut misses = Vec::new();
        let mut worst = 0.0f64;
        for df in [-0.2e6, 0.0, 0.4e6] {
            for t in [0.5e-6, 1.0e-6, 1.5e-6] {
                let cfg = RateConfig::reference(df, t).unwrap();
                for ch in CHANNELS {
                    let q = gamma_quadrature(&cfg, ch).unwrap();
                    let mc = gamma_mc_oracle(&cfg, ch, 1_000_000, 20241015).unwrap();
                    let d = (mc.mean - q).abs();
                    let allowed = (0.01 * q).max(3.0 * mc.std_error);
                    worst = worst.max(d / allowed);
                    if d > allowed {
                        misses.push(format!(
                            "df={:+.1}MHz T={:.1}uK {} off {:.2}% ({:.1} sigma)",
                            df * 1e-6,
                            t * 1e6,
                            ch.label(),
                            100.0 * d / q,
                            d / mc.std_error
                        ));
                    }
                }
            }
        }
        let detail = format!("{}/27 within max(1%, 3 sigma), worst/allowed {worst:.2}; misses: {misses:?}", 27 - misses.len());
        (misses.is_empty(), detail)
    });
}

#[test]
fn c05_normalization() {
    check(5, "normalization", 5.0, || {
        let mut worst = 0.0f64;
        for eta in [0.0, 0.5, 1.0, 2.0, 3.0] {
            for m_i in [2.0, 1.0] {
                let i = reduced_integral(m_i, eta, |_| 1.0, &[], QUAD_REL_TOL).unwrap();
                worst = worst.max((i - 1.0).abs());
            }
            // full path: gravity chosen to hit eta, flat spectrum
            let mut cfg = RateConfig::reference(0.0, 1e-6).unwrap().with_spectrum(NoiseSpectrum::white(1e-20).unwrap());
            let t = cfg.temperature;
            cfg.trap.gravity = eta * cfg.trap.omega1[2] * (2.0 * BOLTZMANN * t / cfg.species.mass).sqrt();
            for ch in CHANNELS {
                let flat = cfg.coupling_prefactor(ch).unwrap() * 1e-20;
                worst = worst.max((gamma_quadrature(&cfg, ch).unwrap() / flat - 1.0).abs());
            }
        }
        (worst <= 1e-9, format!("max |I - 1| = {worst:.2e} over eta in {{0,0.5,1,2,3}}, all channels"))
    });
}

#[test]
fn c06_detuning_asymmetry() {
    check(6, "detuning-scan asymmetry", 30.0, || {
        let red = rate_set(&RateConfig::reference(-0.2e6, 1e-6).unwrap()).unwrap().r_infinity();
        let blue = rate_set(&RateConfig::reference(0.4e6, 1e-6).unwrap()).unwrap().r_infinity();
        let detunings: Vec<f64> = (0..=110).map(|k| ((-1.0 + 0.02 * k as f64) * 1e6).round()).collect();
        let rows = detuning_scan(
            &detunings,
            &[0.5e-6, 1.0e-6, 1.5e-6],
            &RateConfig::reference(0.0, 1e-6).unwrap(),
            &ReferenceSpectrumParams::FIXTURE_V1,
        )
        .unwrap();
        let in_band = |lo: f64, hi: f64| rows.iter().filter(move |r| r.delta_f >= lo - 1.0 && r.delta_f <= hi + 1.0);
        let red_min = in_band(-0.3e6, -0.15e6).map(|r| r.r_inf).fold(f64::INFINITY, f64::min);
        let blue_max = in_band(0.2e6, 0.5e6).map(|r| r.r_inf).fold(0.0, f64::max);
        let ok = (0.6..=0.8).contains(&red) && blue <= 0.05 && red_min > 0.5 && blue_max <= 0.05;
        (
            ok,
            format!(
                "R_inf(-0.2)={red:.4} in [0.6,0.8], R_inf(+0.4)={blue:.5} <= 0.05; {} rows, red plateau [-0.3,-0.15] min {red_min:.4} > 0.5, blue plateau [0.2,0.5] max {blue_max:.4} <= 0.05",
                rows.len()
            ),
        )
    });
}

#[test]
fn c07_protocol() {
    check(7, "protocol reproduction", 10.0, || {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenarios/red_blue_jump.json");
        let config = load_config(path).unwrap();
        let out = tempfile::tempdir().unwrap();
        run_scenario(&config, RunKind::Protocol, out.path(), Some(1)).unwrap();
        let mut rdr = csv::Reader::from_path(out.path().join("protocol.csv")).unwrap();
        let rows: Vec<(f64, f64)> = rdr
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].parse().unwrap(), r[3].parse().unwrap())
            })
            .collect();
        let first_max = rows.iter().filter(|(t, _)| *t <= 0.2 + 1e-12).map(|r| r.1).fold(0.0, f64::max);
        let last = rows.last().unwrap().1;
        let ok = first_max >= 0.6 && last <= 0.05;
        (ok, format!("segment 1 max R {first_max:.4} >= 0.6, segment 2 final R {last:.5} <= 0.05"))
    });
}

fn rk4_ratio(r0: f64, rates: &RateSet, t_end: f64, samples: usize) -> Vec<f64> {
    let (a, b, c) = (rates.gamma_21, rates.gamma_12, rates.gamma_10);
    let f = |n: [f64; 2]| [-(b + c) * n[0] + a * n[1], b * n[0] - a * n[1]];
    let fastest = a + b + c;
    let substeps = ((t_end / (samples - 1) as f64) * fastest / 2e-3).ceil().max(1.0) as usize;
    let h = t_end / ((samples - 1) * substeps) as f64;
    let mut n = [r0, 1.0 - r0];
    let mut out = vec![r0];
    for _ in 1..samples {
        for _ in 0..substeps {
            let k1 = f(n);
            let k2 = f([n[0] + 0.5 * h * k1[0], n[1] + 0.5 * h * k1[1]]);
            let k3 = f([n[0] + 0.5 * h * k2[0], n[1] + 0.5 * h * k2[1]]);
            let k4 = f([n[0] + h * k3[0], n[1] + h * k3[1]]);
            for i in 0..2 {
                n[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(n[0] / (n[0] + n[1]));
    }
    out
}

#[test]
fn c08_analytic_vs_ode() {
    check(8, "analytic/ODE consistency", 20.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst_prop = 0.0f64;
        let mut worst_rk4 = 0.0f64;
        for _ in 0..100 {
            let g21 = 10f64.powf(rng.random_range(-1.0..3.0));
            let rates = RateSet::from_rates(g21, g21 * rng.random_range(0.0..3.0), g21 * rng.random_range(0.0..3.0)).unwrap();
            let r0 = rng.random_range(0.0..1.0);
            let t_end = 10.0 / rates.gamma_tilde();
            let grid: Vec<f64> = (0..=200).map(|k| t_end * k as f64 / 200.0).collect();
            let traj = evolve_populations(PopulationState::from_ratio(r0, 1.0).unwrap(), &rates, &grid).unwrap();
            let rk = rk4_ratio(r0, &rates, t_end, grid.len());
            for (k, s) in traj.samples.iter().enumerate() {
                let exact = analytic_ratio(s.t, r0, &rates).unwrap();
                worst_prop = worst_prop.max((exact - s.ratio().unwrap()).abs());
                worst_rk4 = worst_rk4.max((exact - rk[k]).abs());
            }
        }
        let mut worst_eq1 = 0.0f64;
        for k in 0..50 {
            let g21 = 1.0 + k as f64;
            let rates = RateSet::from_rates(g21, g21 * 0.05 * k as f64, 0.0).unwrap();
            let (rinf, gt, r0) = (rates.r_infinity(), rates.gamma_tilde(), 0.02 * k as f64);
            for j in 0..=100 {
                let t = j as f64 * 0.1 / gt;
                let eq1 = rinf - (rinf - r0) * (-gt * t).exp();
                worst_eq1 = worst_eq1.max((analytic_ratio(t, r0, &rates).unwrap() - eq1).abs());
            }
        }
        let ok = worst_prop <= 1e-8 && worst_rk4 <= 1e-8 && worst_eq1 <= 1e-12;
        (
            ok,
            format!("max|analytic-propagator| {worst_prop:.2e}, max|analytic-RK4| {worst_rk4:.2e}, alpha=0 vs single exponential {worst_eq1:.2e}"),
        )
    });
}

fn noisy_relaxation(seed: u64) -> Vec<(f64, f64)> {
    let (r0, rinf, g) = (0.09, 0.7, 30.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50)
        .map(|k| {
            let t = 5.0 / g * k as f64 / 49.0;
            let m = rinf - (rinf - r0) * (-g * t).exp();
            let z: f64 = StandardNormal.sample(&mut rng);
            (t, m * (1.0 + 0.01 * z))
        })
        .collect()
}

#[test]
fn c09_fit_recovery() {
    check(9, "fit recovery", 30.0, || {
        let mut hits = 0;
        let mut worst_match = 0.0f64;
        for seed in 1..=100u64 {
            let data = noisy_relaxation(seed);
            let fit = fit_relaxation(&data, None).unwrap();
            let (r0, rinf, g) = (fit.get("R0").unwrap(), fit.get("R_inf").unwrap(), fit.get("gamma_tilde").unwrap());
            if rel(r0, 0.09) <= 0.05 && rel(rinf, 0.7) <= 0.05 && rel(g, 30.0) <= 0.05 {
                hits += 1;
            }
            if seed <= 20 {
                let full = fit_full_model(&data, 0.0, None).unwrap();
                for (name, v) in [("R0", r0), ("R_inf", rinf), ("gamma_tilde", g)] {
                    worst_match = worst_match.max(rel(full.get(name).unwrap(), v));
                }
            }
        }
        let ok = hits >= 95 && worst_match <= 1e-10;
        (ok, format!("{hits}/100 within 5% (need 95), full model at alpha=0 vs relaxation max rel diff {worst_match:.2e}"))
    });
}

#[test]
fn c10_scale_invariance() {
    check(10, "scale invariance", 5.0, || {
        let mut worst_ratio = 0.0f64;
        let mut worst_gamma = 0.0f64;
        for (df, t) in [(-0.2e6, 1e-6), (0.0, 0.5e-6), (0.4e6, 1.5e-6)] {
            let base = RateConfig::reference(df, t).unwrap();
            let louder = base.clone().with_spectrum(base.spectrum.clone().scaled(1e3));
            let a = rate_set(&base).unwrap();
            let b = rate_set(&louder).unwrap();
            for (x, y) in [(a.alpha, b.alpha), (a.beta, b.beta), (a.r_infinity(), b.r_infinity())] {
                worst_ratio = worst_ratio.max(rel(y, x));
            }
            worst_gamma = worst_gamma.max(rel(b.gamma_tilde() / a.gamma_tilde(), 1e3));
        }
        let ok = worst_ratio < 1e-12 && worst_gamma <= 1e-9;
        (ok, format!("alpha/beta/R_inf max rel change {worst_ratio:.2e}, gamma_tilde ratio off 1e3 by {worst_gamma:.2e}"))
    });
}
