use caloric::heat_flow::HeatScheme;
use caloric::targets::ProfileFamily;
use caloric_lab::config::KEYS;
use caloric_lab::{normalize, parse_config, serialize, Experiment, ExperimentConfig, LabError};
use proptest::prelude::*;

#[test]
fn empty_text_gives_soliton_energy_defaults() {
    let c = parse_config("").unwrap();
    assert_eq!(c, ExperimentConfig::defaults(Experiment::SolitonEnergy));
    assert_eq!(c.family, ProfileFamily::P);
    assert!((c.lambda - 0.5f64.sqrt()).abs() < 1e-16);
}

#[test]
fn lambda_out_of_range_for_p_names_the_key() {
    let e = parse_config("lambda = 1.5").unwrap_err();
    assert!(matches!(&e, LabError::OutOfRange { key, .. } if key.contains("lambda")), "{e}");
    // The same value is fine for the sphere family.
    assert!(parse_config("profile.family = Q\nprofile.lambda = 1.5").is_ok());
}

#[test]
fn unknown_keys_and_experiments_are_rejected() {
    assert!(matches!(parse_config("grid.m = 3"), Err(LabError::UnknownKey { key }) if key == "grid.m"));
    assert!(matches!(parse_config("experiment = nope"), Err(LabError::UnknownExperiment { name }) if name == "nope"));
}

#[test]
fn malformed_lines_report_their_position() {
    let e = parse_config("# comment\n\ngrid.n 40").unwrap_err();
    assert!(matches!(e, LabError::Malformed { line: 3, .. }));
    assert!(matches!(parse_config("grid.n = forty"), Err(LabError::BadValue { key, .. }) if key == "grid.n"));
    assert!(matches!(parse_config("n = 10\ngrid.n = 20"), Err(LabError::DuplicateKey { .. })));
}

#[test]
fn numeric_ranges_are_enforced() {
    for (text, key) in [
        ("grid.r_max = -1", "grid.r_max"),
        ("grid.n = 3", "grid.n"),
        ("time.dt = 0", "time.dt"),
        ("heat.rho = 2.5", "heat.rho"),
        ("data.amplitude = 2", "data.amplitude"),
        ("experiment = strichartz-sweep\ngrid.d = 3", "grid.d"),
        ("experiment = heat-smoothing\ndata.amplitude = 0", "data.amplitude"),
    ] {
        match parse_config(text) {
            Err(LabError::OutOfRange { key: k, .. }) => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn experiment_defaults_apply_regardless_of_key_order() {
    let a = parse_config("grid.n = 64\nexperiment = laplacian-consistency").unwrap();
    let b = parse_config("experiment = laplacian-consistency\nn = 64").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n, 64);
    assert_eq!(a.r_max, ExperimentConfig::defaults(Experiment::LaplacianConsistency).r_max);
}

#[test]
fn normalize_expands_aliases_and_fills_defaults() {
    let text = normalize("  lambda=0.25  # comment\nT = 3").unwrap();
    assert!(text.contains("profile.lambda = 0.25\n"));
    assert!(text.contains("time.T = 3\n"));
    assert_eq!(text.lines().count(), KEYS.len() - 1);
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    (
        0..Experiment::ALL.len(),
        2usize..=8,
        0.5f64..100.0,
        8usize..5000,
        1e-4f64..1.0,
        0.1f64..100.0,
        any::<bool>(),
        0.0f64..0.999,
        0.0f64..0.05,
        any::<u64>(),
        (0.5f64..100.0, 1.0001f64..2.0, any::<bool>()),
    )
        .prop_map(|(e, d, r_max, n, dt, t_end, q, lambda, amplitude, seed, (s_max, rho, imex))| {
            let experiment = Experiment::ALL[e];
            let d = match experiment {
                Experiment::SolitonEnergy | Experiment::SolitonStability => 2,
                Experiment::DispersiveDecay => 3 + d % 2,
                Experiment::StrichartzSweep => 4,
                _ => d,
            };
            let amplitude = if experiment == Experiment::HeatSmoothing { amplitude + 0.01 } else { amplitude };
            ExperimentConfig {
                experiment,
                d,
                r_max,
                n,
                dt,
                t_end,
                family: if q { ProfileFamily::Q } else { ProfileFamily::P },
                lambda,
                amplitude,
                seed,
                s_max,
                rho,
                scheme: if imex { HeatScheme::Imex } else { HeatScheme::ExplicitRk4 },
                output: None,
            }
        })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(c in arb_config()) {
        let text = serialize(&c);
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(normalize(&text).unwrap(), text);
    }

    #[test]
    fn normalize_is_idempotent(lambda in 0.0f64..0.99, n in 8usize..1000, seed in any::<u64>()) {
        let raw = format!("seed={seed}\n\n lambda = {lambda}\nn={n}\n");
        let once = normalize(&raw).unwrap();
        prop_assert_eq!(normalize(&once).unwrap(), once.clone());
        prop_assert_eq!(serialize(&parse_config(&raw).unwrap()), once);
    }
}
