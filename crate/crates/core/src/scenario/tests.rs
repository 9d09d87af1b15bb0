use proptest::prelude::*;

use super::*;
use crate::noise::ReferenceSpectrumParams;

#[test]
fn empty_document_gives_reference_setup() {
    let c = parse_config("{}").unwrap();
    assert_eq!(c, ScenarioConfig::default());
    assert_eq!(c.splitting_mhz, 18.0);
    assert_eq!(c.temperature_uk, 1.0);
    assert_eq!(c.initial.r0, 0.09);
    let trap = c.trap();
    let reference = TrapGeometry::reference();
    for k in 0..3 {
        assert!((trap.omega1[k] - reference.omega1[k]).abs() < 1e-12 * reference.omega1[k]);
    }
    assert!((trap.bias_splitting - reference.bias_splitting).abs() < 1e-12 * reference.bias_splitting);
}

#[test]
fn negative_temperature_names_field() {
    match parse_config(r#"{"temperature_uK": -1}"#) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "temperature_uK"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let err = parse_config(r#"{"temprature_uK": 1}"#).unwrap_err();
    assert!(err.to_string().contains("temprature_uK"), "{err}");
    assert!(err.is_validation());
    assert!(parse_config(r#"{"trap": {"gravity": true, "omega": 3}}"#).is_err());
    assert!(parse_config(r#"{"run": {"type": "scan", "delta_f_Hz": [1]}}"#).is_err());
}

#[test]
fn malformed_json_reports_position() {
    let err = parse_config("{\n  \"temperature_uK\": ,\n}").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn scan_section_spans_requested_detunings() {
    let c = parse_config(r#"{"run": {"type": "scan", "delta_f_MHz": [-1.0, -0.2, 0.4, 1.2]}}"#).unwrap();
    match c.run_for(RunKind::Scan).unwrap() {
        RunSpec::Scan { delta_f_mhz, temperatures_uk } => {
            assert_eq!(delta_f_mhz, vec![-1.0, -0.2, 0.4, 1.2]);
            assert_eq!(temperatures_uk, vec![0.5, 1.0, 1.5]);
        }
        other => panic!("unexpected {other:?}"),
    }
    let d = default_scan_detunings();
    assert_eq!((d[0], d[d.len() - 1], d.len()), (-1.0, 1.2, 111));
}

#[test]
fn mismatched_run_section_is_rejected() {
    let c = parse_config(r#"{"run": {"type": "rates"}}"#).unwrap();
    assert!(c.run_for(RunKind::Rates).is_ok());
    match c.run_for(RunKind::Scan) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "run.type"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(ScenarioConfig::default().run_for(RunKind::Protocol).unwrap(), RunSpec::default_for(RunKind::Protocol));
}

#[test]
fn run_parameters_are_validated() {
    for (doc, field) in [
        (r#"{"run": {"type": "evolve", "samples": 1}}"#, "run.samples"),
        (r#"{"run": {"type": "protocol", "segments": []}}"#, "run.segments"),
        (r#"{"run": {"type": "protocol", "segments": [{"duration_ms": 0, "delta_f_MHz": 0}]}}"#, "run.segments.duration_ms"),
        (r#"{"run": {"type": "scan", "temperatures_uK": [1, -2]}}"#, "run.temperatures_uK"),
        (r#"{"run": {"type": "fit"}}"#, "run.input"),
        (r#"{"initial": {"R0": 1.5}}"#, "initial.R0"),
        (r#"{"mc": {"n_samples": 10}}"#, "mc.n_samples"),
        (r#"{"trap": {"frequencies_Hz": [1, 0, 1]}}"#, "trap.frequencies_Hz"),
        (r#"{"spectrum": {"type": "white", "level_T2_per_Hz": 0}}"#, "spectrum.level_T2_per_Hz"),
    ] {
        match parse_config(doc) {
            Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{doc}"),
            other => panic!("{doc}: unexpected {other:?}"),
        }
    }
}

#[test]
fn spectrum_kinds_build() {
    let carrier = 18.0e6;
    let reference = SpectrumSpec::default().build(carrier).unwrap();
    assert!(reference.spectral_density(carrier).unwrap() > 1e-17);
    let g = SpectrumSpec::Gaussian { sigma_khz: 10.0, amplitude: 2.0 }.build(carrier).unwrap();
    assert_eq!(g.spectral_density(carrier).unwrap(), 2.0);
    let m = SpectrumSpec::Monochromatic { integrated_power: 1.0 }.build(carrier).unwrap();
    assert!(m.has_monochromatic());
    let missing = SpectrumSpec::Tabulated { path: "/nonexistent/spectrum.csv".into() }.build(carrier);
    assert!(missing.unwrap_err().is_validation());
}

#[test]
fn detuning_shifts_spectrum() {
    let c = parse_config(r#"{"delta_f_MHz": -0.2}"#).unwrap();
    let rc = c.rate_config().unwrap();
    assert!((rc.spectrum.spectral_density(17.8e6).unwrap() / 1e-16 - 1.0).abs() < 1e-9);
    assert!(rc.spectrum.spectral_density(18.0e6).unwrap() < 1e-20);
}

#[test]
fn relative_paths_follow_the_scenario_file() {
    let mut c = parse_config(r#"{"spectrum": {"type": "tabulated", "path": "s.csv"}, "run": {"type": "fit", "input": "d.csv"}}"#).unwrap();
    c.resolve_paths(Path::new("/data/runs"));
    assert_eq!(c.spectrum, SpectrumSpec::Tabulated { path: "/data/runs/s.csv".into() });
    match c.run {
        Some(RunSpec::Fit { input, .. }) => assert_eq!(input, Some("/data/runs/d.csv".into())),
        other => panic!("unexpected {other:?}"),
    }
}

fn arb_spectrum() -> impl Strategy<Value = SpectrumSpec> {
    prop_oneof![
        (1e-18f64..1e-14, 100.0f64..2e3).prop_map(|(a, w)| SpectrumSpec::Reference {
            params: ReferenceSpectrumParams { center_amplitude: a, lorentz_fwhm_hz: w, ..ReferenceSpectrumParams::FIXTURE_V1 }
        }),
        (1e-30f64..1e-10).prop_map(|level| SpectrumSpec::White { level }),
        (1e-20f64..1.0).prop_map(|p| SpectrumSpec::Monochromatic { integrated_power: p }),
        (0.1f64..1e3, 1e-30f64..1e-10).prop_map(|(s, a)| SpectrumSpec::Gaussian { sigma_khz: s, amplitude: a }),
        Just(SpectrumSpec::Tabulated { path: "fixtures/spectrum.csv".into() }),
    ]
}

fn arb_run() -> impl Strategy<Value = Option<RunSpec>> {
    prop_oneof![
        Just(None),
        Just(Some(RunSpec::Rates {})),
        (1.0f64..1e4, 2usize..1000, proptest::option::of(0.1f64..1e3))
            .prop_map(|(d, n, g)| Some(RunSpec::Evolve { duration_ms: d, samples: n, gamma_tilde_per_s: g })),
        (proptest::collection::vec((1.0f64..1e3, -1.0f64..1.0, proptest::option::of(0.1f64..3.0)), 1..4), 1usize..50).prop_map(
            |(segs, n)| Some(RunSpec::Protocol {
                segments: segs
                    .into_iter()
                    .map(|(d, f, t)| SegmentSpec { duration_ms: d, delta_f_mhz: f, temperature_uk: t })
                    .collect(),
                samples_per_segment: n,
                gamma_tilde_per_s: None,
            })
        ),
        (proptest::collection::vec(-1.0f64..1.2, 1..5), proptest::collection::vec(0.1f64..3.0, 1..3))
            .prop_map(|(d, t)| Some(RunSpec::Scan { delta_f_mhz: d, temperatures_uk: t })),
        proptest::option::of(0.0f64..3.0).prop_map(|a| Some(RunSpec::Fit {
            input: Some("data.csv".into()),
            model: FitModel::FullModel,
            alpha: a,
            free_widths: true
        })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialization_round_trips(
        t in 0.01f64..10.0,
        split in 1.0f64..50.0,
        df in -2.0f64..2.0,
        freqs in proptest::array::uniform3(0.1f64..1e3),
        gravity in any::<bool>(),
        r0 in 0.0f64..=1.0,
        n in 1.0f64..1e7,
        mass in proptest::option::of(1e-27f64..1e-24),
        seed in proptest::option::of(any::<u64>()),
        spectrum in arb_spectrum(),
        run in arb_run(),
    ) {
        let c = ScenarioConfig {
            species: SpeciesOverrides { mass_kg: mass, ..Default::default() },
            trap: TrapConfig { frequencies_hz: freqs, gravity, gravity_m_s2: 9.81 },
            splitting_mhz: split,
            temperature_uk: t,
            delta_f_mhz: df,
            spectrum,
            initial: InitialConfig { r0, n_total: n },
            run,
            mc: McConfig { n_samples: 5000, seed },
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), c);
    }
}
