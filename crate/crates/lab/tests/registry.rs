use caloric_lab::report::{render, to_csv};
use caloric_lab::{convergence_study, parse_config, run_experiment, run_sweep, sweep_configs, Format, LabError, MetricValue};

fn cfg(text: &str) -> caloric_lab::ExperimentConfig {
    parse_config(text).unwrap()
}

#[test]
fn soliton_energy_matches_four_pi() {
    let out = run_experiment(&cfg("")).unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    let e = out.records[0].get("energy").unwrap();
    assert!((e - 4.0 * std::f64::consts::PI).abs() < 1e-3 * 4.0 * std::f64::consts::PI);
    assert_eq!(out.records[0].provenance["anchor"], "closed-form energies of the P and Q harmonic profiles");
}

#[test]
fn poincare_gap_in_four_dimensions() {
    let out = run_experiment(&cfg("experiment = poincare-gap\ngrid.d = 4")).unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    assert!(out.records[0].get("min_rayleigh").unwrap() >= 2.20);
}

#[test]
fn fixed_seed_runs_are_byte_identical() {
    for text in [
        "experiment = poincare-gap\nseed = 5",
        "experiment = lp-reconstruction\nn = 200\nr_max = 10",
        "experiment = heat-smoothing",
    ] {
        let c = cfg(text);
        let a = render(&run_experiment(&c).unwrap().records, Format::Csv).unwrap();
        let b = render(&run_experiment(&c).unwrap().records, Format::Csv).unwrap();
        assert_eq!(a, b, "{text}");
        let ja = render(&run_experiment(&c).unwrap().records, Format::Json).unwrap();
        assert_eq!(ja, render(&run_experiment(&c).unwrap().records, Format::Json).unwrap());
    }
}

#[test]
fn different_seeds_give_different_corpora() {
    let a = run_experiment(&cfg("experiment = poincare-gap\nseed = 1")).unwrap();
    let b = run_experiment(&cfg("experiment = poincare-gap\nseed = 2")).unwrap();
    assert_ne!(a.records[0].get("min_rayleigh"), b.records[0].get("min_rayleigh"));
}

#[test]
fn threshold_violations_name_the_metric() {
    let out = run_experiment(&cfg("grid.n = 30")).unwrap();
    assert_eq!(out.violations.len(), 1);
    assert_eq!(out.violations[0].metric, "relative_error");
    assert!(out.violations[0].to_string().contains("relative_error"));
}

#[test]
fn experiment_errors_carry_context() {
    // A ladder that stops too early for the reconstruction tail check.
    let e = run_experiment(&cfg("experiment = lp-reconstruction\nd = 2\nn = 100\nr_max = 10\ns_max = 1")).unwrap_err();
    assert!(matches!(&e, LabError::Experiment { experiment, .. } if experiment == "lp-reconstruction"), "{e}");
}

#[test]
fn laplacian_converges_at_second_order() {
    let out = convergence_study(&cfg("experiment = laplacian-consistency"), 3).unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    assert_eq!(out.records.len(), 4);
    let order = out.records[3].get("order").unwrap();
    assert!((order - 2.0).abs() <= 0.1, "order {order}");
}

#[test]
fn soliton_drift_converges_at_second_order() {
    let out = convergence_study(&cfg("experiment = soliton-stability\nn = 500\ndt = 0.01"), 3).unwrap();
    assert!(out.records[3].get("order").unwrap() >= 1.9);
    let res: Vec<f64> = out.records[..3].iter().map(|r| r.get("residual").unwrap()).collect();
    assert!(res[0] > res[1] && res[1] > res[2]);
}

#[test]
fn zero_residuals_are_reported_exact() {
    let out = convergence_study(&cfg("lambda = 0"), 3).unwrap();
    assert_eq!(out.records[3].metrics["order"], MetricValue::Text("exact".into()));
    assert!(to_csv(&out.records).unwrap().contains(",order,exact\n"));
}

#[test]
fn studies_need_a_refinable_residual_and_three_levels() {
    assert!(matches!(convergence_study(&cfg("experiment = poincare-gap"), 3), Err(LabError::NotRefinable { .. })));
    assert!(matches!(convergence_study(&cfg(""), 2), Err(LabError::TooFewLevels(2))));
}

#[test]
fn sweeps_keep_config_order_across_workers() {
    let base = cfg("experiment = poincare-gap");
    let vary = vec![("d".to_string(), vec!["2".into(), "3".into(), "4".into()]), ("seed".into(), vec!["1".into(), "2".into()])];
    let configs = sweep_configs(&base, &vary).unwrap();
    assert_eq!(configs.len(), 6);
    assert_eq!((configs[1].d, configs[1].seed), (2, 2));
    let serial = run_sweep(&configs, 1).unwrap();
    let parallel = run_sweep(&configs, 3).unwrap();
    assert_eq!(to_csv(&serial.records).unwrap(), to_csv(&parallel.records).unwrap());
    assert!(serial.violations.is_empty());
    let bad = vec![("lambda".to_string(), vec!["0.5".into(), "1.5".into()])];
    assert!(sweep_configs(&base, &bad).is_err());
}
