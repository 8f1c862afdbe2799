//! Experiment implementations and their acceptance thresholds.

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::report::{Bound, ReportRecord, RunOutcome, Threshold};
use caloric::caloric_gauge::pxh_residual;
use caloric::geometry::{broad_bump, laplacian_radial, random_bump_field, rayleigh_quotient, smooth_bump};
use caloric::heat_flow::{
    du_h1_norm, run_heat_resolution, smoothing_report, EquivariantProfile, ExtrinsicMapState, HeatLadder, MapSymmetry,
};
use caloric::linear_dispersion::{
    dispersive_fit, lp_reconstruction, solve_linear_wave, solve_linear_wave_kg, strichartz_sample, AdmissibleTriple,
    LinearWaveState,
};
use caloric::targets::{harmonic_profile, profile_energy, HarmonicProfile};
use caloric::wave_dynamics::{evolve, perturbation_probe, run_coupled_pipeline, PipelineConfig, WavePosition, WaveState};
use caloric::{CaloricError, Parity, RadialGrid, ScalarField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Largest `(2, 8, 1)` Strichartz ratio accepted on the default corpus. The
/// corpus maximum when this was frozen was 0.211.
pub const STRICHARTZ_ENVELOPE: f64 = 0.25;
/// Heat time at which the `W^{-gamma, q}` norm is realized.
pub const STRICHARTZ_S0: f64 = 0.1;
/// Size of the random corpora.
pub const STRICHARTZ_CORPUS: usize = 20;
pub const LP_CORPUS: usize = 10;
pub const GAP_CORPUS: usize = 50;
/// Radii of the broad-bump sequence; each uses its own grid with `h = 0.05`.
pub const BROAD_RADII: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];

/// Residuals of the gauge suite that must sit below `1e-2` of their scale.
pub const GAUGE_SUITE: [&str; 11] =
    ["AF_r", "AF_t", "paps_r", "paps_t", "Fdu_sr", "Fdu_st", "Fdu_tr", "abba", "Dsps_r", "Dsps_t", "wave_tension_s0"];

pub(crate) fn ctx(experiment: Experiment) -> impl Fn(CaloricError) -> LabError {
    move |source| LabError::Experiment { experiment: experiment.name().into(), source }
}

/// Record seeded with the config parameters and grid provenance.
pub(crate) fn base_record(cfg: &ExperimentConfig, anchor: &str) -> ReportRecord {
    let mut r = ReportRecord::new(cfg.experiment.name());
    for (k, v) in cfg.params() {
        r.param(k, v);
    }
    r.provenance("grid.h", cfg.r_max / cfg.n as f64).provenance("anchor", anchor);
    r
}

/// Runs the configured experiment and checks its thresholds.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::SolitonEnergy => soliton_energy(cfg),
        Experiment::SolitonStability => soliton_stability(cfg),
        Experiment::HeatSmoothing => heat_smoothing(cfg),
        Experiment::CaloricGaugeResiduals => gauge_residuals(cfg),
        Experiment::DispersiveDecay => dispersive_decay(cfg),
        Experiment::StrichartzSweep => strichartz_sweep(cfg),
        Experiment::LpReconstruction => lp_corpus(cfg),
        Experiment::PoincareGap => poincare_gap(cfg),
        Experiment::LaplacianConsistency => laplacian_consistency(cfg),
    }
}

fn single(record: ReportRecord, thresholds: &[Threshold]) -> RunOutcome {
    let mut out = RunOutcome::default();
    out.push(record, thresholds);
    out
}

/// `(energy, closed form)` of the configured profile.
pub(crate) fn profile_energy_pair(cfg: &ExperimentConfig) -> Result<(f64, f64, f64)> {
    let err = ctx(cfg.experiment);
    let grid = RadialGrid::new(2, cfg.r_max, cfg.n).map_err(&err)?;
    let p = HarmonicProfile::new(cfg.family, cfg.lambda).map_err(&err)?;
    let e = profile_energy(&grid, &p).map_err(&err)?;
    Ok((e.energy, p.closed_form_energy(), e.tail))
}

fn soliton_energy(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let (energy, exact, tail) = profile_energy_pair(cfg)?;
    let err = (energy - exact).abs();
    let mut r = base_record(cfg, "closed-form energies of the P and Q harmonic profiles");
    r.metric("energy", energy)?
        .metric("closed_form", exact)?
        .metric("relative_error", if exact > 0.0 { err / exact } else { err })?
        .metric("tail", tail)?;
    Ok(single(r, &[Threshold::new("relative_error", Bound::AtMost(1e-3))]))
}

/// Largest `|psi(t) - psi(0)|` of the configured soliton evolved from rest,
/// with the relative energy drift.
pub(crate) fn soliton_drift(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let err = ctx(cfg.experiment);
    let grid = Arc::new(RadialGrid::new(2, cfg.r_max, cfg.n).map_err(&err)?);
    let p = HarmonicProfile::new(cfg.family, cfg.lambda).map_err(&err)?;
    let psi: Vec<f64> = grid.nodes().iter().map(|&r| harmonic_profile(&p, r)).collect::<caloric::Result<_>>().map_err(&err)?;
    let profile = EquivariantProfile::new(grid, psi.clone(), p.target()).map_err(&err)?;
    let start = WaveState::at_rest(WavePosition::Equivariant(profile));
    let samples = ((cfg.t_end / 0.1).round() as usize).max(1);
    let traj = evolve(&start, cfg.t_end, cfg.dt, samples).map_err(&err)?;
    let drift = traj
        .states
        .iter()
        .map(|s| s.values().iter().zip(&psi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    Ok((drift, traj.energy_drift()))
}

fn soliton_stability(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let (drift, energy_drift) = soliton_drift(cfg)?;
    let h = cfg.r_max / cfg.n as f64;
    let mut r = base_record(cfg, "stationarity of the harmonic profiles under the equivariant wave map flow");
    r.metric("sup_drift", drift)?.metric("drift_over_h2", drift / (h * h))?.metric("energy_drift", energy_drift)?;
    let mut thresholds =
        vec![Threshold::new("drift_over_h2", Bound::AtMost(5.0)), Threshold::new("energy_drift", Bound::AtMost(1e-4))];
    if cfg.amplitude > 0.0 {
        let err = ctx(cfg.experiment);
        let grid = Arc::new(RadialGrid::new(2, cfg.r_max, cfg.n).map_err(&err)?);
        let samples = ((cfg.t_end / 0.1).round() as usize).max(1);
        let traj = perturbation_probe(grid, cfg.family, cfg.lambda, cfg.amplitude, cfg.t_end, samples).map_err(&err)?;
        let get = |i: usize, k: &str| traj.diagnostics[i].get(k).unwrap_or(f64::NAN);
        let last = traj.diagnostics.len() - 1;
        let b0 = get(0, "boundary_value");
        let boundary = (0..=last).map(|i| (get(i, "boundary_value") - b0).abs()).fold(0.0, f64::max);
        r.metric("local_excess_initial", get(0, "local_excess"))?
            .metric("local_excess_final", get(last, "local_excess"))?
            .metric("local_excess_ratio", get(last, "local_excess") / get(0, "local_excess"))?
            .metric("boundary_variation", boundary)?
            .metric("perturbed_energy_drift", traj.energy_drift())?;
        thresholds.push(Threshold::new("local_excess_ratio", Bound::AtMost(0.2)));
        thresholds.push(Threshold::new("boundary_variation", Bound::AtMost(1e-12)));
    }
    Ok(single(r, &thresholds))
}

fn bump_map(grid: &Arc<RadialGrid<f64>>, amplitude: f64) -> caloric::Result<ExtrinsicMapState<f64>> {
    ExtrinsicMapState::from_fn(grid.clone(), &[0.0, 0.0, 1.0], MapSymmetry::Radial, move |r: f64| {
        let x = amplitude * (-0.5 * r * r).exp();
        vec![x.sin(), 0.0, x.cos()]
    })
}

fn heat_smoothing(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let err = ctx(cfg.experiment);
    let grid = Arc::new(RadialGrid::new(cfg.d, cfg.r_max, cfg.n).map_err(&err)?);
    let h = grid.h();
    let ladder = HeatLadder { s_min: h * h / 4.0, s_max: cfg.s_max, rho: cfg.rho };
    let report = |a: f64| -> Result<_> {
        let u = bump_map(&grid, a).map_err(&err)?;
        let res = run_heat_resolution(&u, ladder, cfg.scheme).map_err(&err)?;
        Ok((smoothing_report(&res).map_err(&err)?, du_h1_norm(&u)))
    };
    let (full, du) = report(cfg.amplitude)?;
    let (half, _) = report(0.5 * cfg.amplitude)?;
    let mut r = base_record(cfg, "parabolic smoothing bounds of the harmonic map heat flow");
    r.provenance("ladder.s_min", ladder.s_min).provenance("ladder.levels", ladder.levels().len());
    r.metric("du_h1", du)?;
    let mut thresholds = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, value) in full.iter() {
        let lin = value / (2.0 * half.get(name).unwrap_or(f64::NAN));
        r.metric(name, value)?.metric(format!("linearity_{name}"), lin)?;
        worst = worst.max(value);
        thresholds.push(Threshold::new(format!("linearity_{name}"), Bound::Within(0.8, 1.2)));
    }
    r.metric("bound_over_du_h1", worst / du)?;
    thresholds.push(Threshold::new("bound_over_du_h1", Bound::AtMost(10.0)));
    Ok(single(r, &thresholds))
}

pub(crate) fn pipeline_config(cfg: &ExperimentConfig) -> PipelineConfig<f64> {
    PipelineConfig {
        dim: cfg.d,
        r_max: cfg.r_max,
        nodes: cfg.n,
        rho: cfg.rho,
        s_max: cfg.s_max,
        dt: cfg.dt,
        t_center: cfg.t_end,
        amplitude: cfg.amplitude,
        velocity_amplitude: cfg.amplitude,
        ..PipelineConfig::default()
    }
}

fn gauge_residuals(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let err = ctx(cfg.experiment);
    let out = run_coupled_pipeline(&pipeline_config(cfg)).map_err(&err)?;
    let mut r = base_record(cfg, "caloric gauge identities, heat-temporal condition and dynamic equations");
    r.provenance("ladder.levels", out.residuals.levels).provenance("time.slices", 3);
    for (name, e) in &out.residuals.entries {
        r.metric(format!("rel_{name}"), e.relative())?;
    }
    for (name, v) in out.norms.iter() {
        r.metric(name, v)?;
    }
    let pxh = out.residuals.get("pxh").map_or(f64::NAN, |e| e.relative());
    let shifted = |c: f64| -> Result<f64> { Ok(pxh_residual(&out.gauge, c).map_err(&err)?.relative()) };
    let d = cfg.d as f64;
    r.metric("pxh_low_over_true", shifted(d - 2.0)? / pxh)?.metric("pxh_high_over_true", shifted(d)? / pxh)?;
    let w0 = out.residuals.get("wave_tension_s0").map_or(f64::NAN, |e| e.l2);
    let floor = out.norms.get("floor").unwrap_or(f64::NAN);
    r.metric("w0_over_floor", if floor > 0.0 { w0 / floor } else { 0.0 })?;
    let mut thresholds: Vec<Threshold> =
        GAUGE_SUITE.iter().map(|n| Threshold::new(format!("rel_{n}"), Bound::AtMost(1e-2))).collect();
    thresholds.extend([
        Threshold::new("max_a_s", Bound::AtMost(1e-7)),
        Threshold::new("frame_drift", Bound::AtMost(1e-8)),
        Threshold::new("pxh_low_over_true", Bound::AtLeast(10.0)),
        Threshold::new("pxh_high_over_true", Bound::AtLeast(10.0)),
        Threshold::new("w0_over_floor", Bound::AtMost(10.0)),
    ]);
    Ok(single(r, &thresholds))
}

fn dispersive_decay(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let err = ctx(cfg.experiment);
    let grid = Arc::new(RadialGrid::new(cfg.d, cfg.r_max, cfg.n).map_err(&err)?);
    let q = if cfg.d == 3 { 4.0 } else { 8.0 };
    let a = cfg.amplitude;
    let v = ScalarField::from_fn(&grid, Parity::Even, |r| a * smooth_bump(r, 0.0, 1.0));
    let data = LinearWaveState::new(grid.clone(), v, ScalarField::zeros(grid.len(), Parity::Even)).map_err(&err)?;
    let samples = ((cfg.t_end / 0.2).round() as usize).max(2);
    let traj = solve_linear_wave(&data, cfg.t_end, cfg.dt, samples).map_err(&err)?;
    let mut r = base_record(cfg, "long-time L^q decay of linear waves on hyperbolic space");
    r.param("q", q).param("fit.t_min", 2.0);
    r.metric("exponent", dispersive_fit(&traj, q, 2.0).map_err(&err)?)?;
    let mut thresholds = vec![Threshold::new("exponent", Bound::AtMost(-1.3))];
    if cfg.d == 3 {
        let kg = solve_linear_wave_kg(&data, cfg.t_end, cfg.dt, samples).map_err(&err)?;
        r.metric("exponent_kg", dispersive_fit(&kg, q, 2.0).map_err(&err)?)?;
        thresholds.push(Threshold::new("exponent_kg", Bound::AtMost(-1.3)));
    }
    Ok(single(r, &thresholds))
}

fn strichartz_sweep(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let err = ctx(cfg.experiment);
    let grid = Arc::new(RadialGrid::new(cfg.d, cfg.r_max, cfg.n).map_err(&err)?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = |f: ScalarField<f64>| ScalarField::new(f.values.iter().map(|x| cfg.amplitude * x).collect(), f.parity);
    let corpus: Vec<(ScalarField<f64>, ScalarField<f64>)> = (0..STRICHARTZ_CORPUS)
        .map(|_| {
            let v = scale(random_bump_field(&grid, &mut rng, 4.0));
            (v, scale(random_bump_field(&grid, &mut rng, 4.0)))
        })
        .collect();
    let samples = ((cfg.t_end / 0.1).round() as usize).max(2);
    let energy = AdmissibleTriple::new(f64::INFINITY, 2.0, 0.0);
    let mid = AdmissibleTriple::new(2.0, 8.0, 1.0);
    let ratios: Vec<(f64, f64)> = corpus
        .into_par_iter()
        .map(|(v, v_t)| {
            let data = LinearWaveState::new(grid.clone(), v, v_t)?;
            let traj = solve_linear_wave(&data, cfg.t_end, cfg.dt, samples)?;
            Ok((strichartz_sample(&traj, energy, STRICHARTZ_S0)?, strichartz_sample(&traj, mid, STRICHARTZ_S0)?))
        })
        .collect::<caloric::Result<_>>()
        .map_err(&err)?;
    let dev = ratios.iter().map(|(e, _)| (e - 1.0).abs()).fold(0.0, f64::max);
    let top = ratios.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    let rejected = AdmissibleTriple::new(2.0, f64::INFINITY, 1.0).check(3).is_err();
    let mut r = base_record(cfg, "Strichartz estimates for admissible triples");
    r.param("corpus", STRICHARTZ_CORPUS).param("s0", STRICHARTZ_S0);
    r.metric("max_energy_deviation", dev)?
        .metric("max_ratio_2_8_1", top)?
        .metric("envelope_2_8_1", STRICHARTZ_ENVELOPE)?
        .metric("endpoint_rejected", if rejected { 1.0 } else { 0.0 })?;
    Ok(single(
        r,
        &[
            Threshold::new("max_energy_deviation", Bound::AtMost(1e-3)),
            Threshold::new("max_ratio_2_8_1", Bound::AtMost(STRICHARTZ_ENVELOPE)),
            Threshold::new("endpoint_rejected", Bound::AtLeast(1.0)),
        ],
    ))
}

fn lp_corpus(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let err = ctx(cfg.experiment);
    let grid = RadialGrid::new(cfg.d, cfg.r_max, cfg.n).map_err(&err)?;
    let ladder = HeatLadder { s_max: cfg.s_max, rho: cfg.rho, ..HeatLadder::for_grid(&grid) };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let support = 0.3 * cfg.r_max;
    let corpus: Vec<ScalarField<f64>> = (0..LP_CORPUS).map(|_| random_bump_field(&grid, &mut rng, support)).collect();
    let residuals: Vec<(f64, f64)> = corpus
        .par_iter()
        .map(|f| Ok((lp_reconstruction(&grid, f, ladder, 1)?, lp_reconstruction(&grid, f, ladder, 2)?)))
        .collect::<caloric::Result<_>>()
        .map_err(&err)?;
    let mut r = base_record(cfg, "heat-flow Littlewood-Paley reconstruction formula");
    r.param("corpus", LP_CORPUS).provenance("ladder.s_min", ladder.s_min).provenance("ladder.levels", ladder.levels().len());
    r.metric("max_residual_k1", residuals.iter().map(|x| x.0).fold(0.0, f64::max))?
        .metric("max_residual_k2", residuals.iter().map(|x| x.1).fold(0.0, f64::max))?;
    Ok(single(
        r,
        &[Threshold::new("max_residual_k1", Bound::AtMost(1e-3)), Threshold::new("max_residual_k2", Bound::AtMost(1e-2))],
    ))
}

fn poincare_gap(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let err = ctx(cfg.experiment);
    let d = cfg.d;
    let gap = ((d as f64 - 1.0) / 2.0).powi(2);
    let grid = RadialGrid::new(d, cfg.r_max, cfg.n).map_err(&err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let support = 0.6 * cfg.r_max;
    let mut min_q = f64::INFINITY;
    for _ in 0..GAP_CORPUS {
        let f = random_bump_field(&grid, &mut rng, support);
        min_q = min_q.min(rayleigh_quotient(&grid, &f).map_err(&err)?);
    }
    let mut r = base_record(cfg, "Poincare inequality with the spectral gap ((d-1)/2)^2");
    r.param("corpus", GAP_CORPUS);
    r.metric("gap", gap)?.metric("min_rayleigh", min_q)?;
    let mut ratios = Vec::new();
    for radius in BROAD_RADII {
        let g = RadialGrid::new(d, radius, (radius * 20.0) as usize).map_err(&err)?;
        let f = ScalarField::from_fn(&g, Parity::Even, |x| broad_bump(x, d, radius));
        let ratio = rayleigh_quotient(&g, &f).map_err(&err)? / gap;
        r.metric(format!("broad_ratio_R{radius}"), ratio)?;
        ratios.push(ratio);
    }
    let monotone = ratios.windows(2).all(|w| w[1] < w[0]);
    r.metric("broad_final_ratio", *ratios.last().expect("radii are listed"))?
        .metric("broad_monotone", if monotone { 1.0 } else { 0.0 })?;
    Ok(single(
        r,
        &[
            Threshold::new("min_rayleigh", Bound::AtLeast(gap - 0.05)),
            Threshold::new("broad_final_ratio", Bound::AtMost(1.05)),
            Threshold::new("broad_monotone", Bound::AtLeast(1.0)),
        ],
    ))
}

/// Largest `|Delta_h cosh - d cosh| / (d cosh)` over the grid.
pub(crate) fn laplacian_residual(cfg: &ExperimentConfig) -> Result<f64> {
    let err = ctx(cfg.experiment);
    let grid = RadialGrid::new(cfg.d, cfg.r_max, cfg.n).map_err(&err)?;
    let f = ScalarField::from_fn(&grid, Parity::Even, f64::cosh);
    let lap = laplacian_radial(&grid, &f).map_err(&err)?;
    let d = cfg.d as f64;
    Ok(lap.values.iter().zip(&f.values).map(|(l, c)| (l - d * c).abs() / (d * c)).fold(0.0, f64::max))
}

fn laplacian_consistency(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let res = laplacian_residual(cfg)?;
    let h = cfg.r_max / cfg.n as f64;
    let mut r = base_record(cfg, "radial Laplace-Beltrami operator, exact on cosh r");
    r.metric("residual", res)?.metric("residual_over_h2", res / (h * h))?;
    Ok(single(r, &[Threshold::new("residual_over_h2", Bound::AtMost(10.0))]))
}
