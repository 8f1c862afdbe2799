use caloric::geometry::{build_radial_grid, smooth_bump};
use caloric::heat_flow::{EquivariantProfile, ExtrinsicMapState};
use caloric::targets::{harmonic_profile, HarmonicProfile, PolarTarget, ProfileFamily};
use caloric::wave_dynamics::*;
use caloric::{CaloricError, RadialGrid};
use std::f64::consts::PI;
use std::sync::Arc;

const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

fn grid(d: usize, r_max: f64, n: usize) -> Arc<RadialGrid<f64>> {
    Arc::new(build_radial_grid(d, r_max, n).unwrap())
}

fn soliton(g: &Arc<RadialGrid<f64>>, family: ProfileFamily, lambda: f64) -> (HarmonicProfile<f64>, WaveState<f64>) {
    let p = HarmonicProfile::new(family, lambda).unwrap();
    let prof = EquivariantProfile::from_fn(g.clone(), p.target(), |r| harmonic_profile(&p, r).unwrap()).unwrap();
    (p, WaveState::equivariant(prof, vec![0.0; g.len()]).unwrap())
}

fn psi(s: &WaveState<f64>) -> &[f64] {
    s.values()
}

#[test]
fn equivariant_rhs_vanishes_on_solitons() {
    for (family, lambda) in [(ProfileFamily::P, 0.5), (ProfileFamily::Q, 1.0)] {
        let err = |n: usize| {
            let g = grid(2, 10.0, n);
            let (_, s) = soliton(&g, family, lambda);
            let WavePosition::Equivariant(p) = &s.position else { unreachable!() };
            let rhs = wave_rhs_equivariant(p).unwrap();
            g.nodes().iter().zip(&rhs.values).filter(|(&r, _)| (0.5..=9.0).contains(&r)).map(|(_, x)| x.abs()).fold(0.0, f64::max)
        };
        let (a, b) = (err(500), err(1000));
        assert!(a < 1e-3 && a / b > 3.5, "{family:?}: {a} {b}");
    }
    let g = grid(2, 5.0, 50);
    let zero = EquivariantProfile::new(g.clone(), vec![0.0; 50], PolarTarget::sphere()).unwrap();
    assert!(wave_rhs_equivariant(&zero).unwrap().values.iter().all(|&x| x == 0.0));
    let g3 = grid(3, 5.0, 50);
    let p3 = EquivariantProfile::new(g3, vec![0.0; 50], PolarTarget::sphere()).unwrap();
    assert_eq!(wave_rhs_equivariant(&p3), Err(CaloricError::UnsupportedDimension(3)));
}

#[test]
fn extrinsic_rhs_examples() {
    let g = grid(4, 5.0, 50);
    let n = g.len();
    let u = ExtrinsicMapState::constant(g.clone(), &NORTH).unwrap();
    assert!(wave_rhs_extrinsic(&u, &vec![0.0; 3 * n]).unwrap().iter().all(|&x| x == 0.0));

    // Velocity-only data: <rhs, u> = -|u_t|^2.
    let mut v = vec![0.0; 3 * n];
    for k in 0..n - 1 {
        v[k] = 0.3 * smooth_bump(g.nodes()[k], 0.0, 3.0);
        v[n + k] = -0.2 * smooth_bump(g.nodes()[k], 1.0, 1.5);
    }
    let rhs = wave_rhs_extrinsic(&u, &v).unwrap();
    for k in 0..n {
        let vv = v[k] * v[k] + v[n + k] * v[n + k];
        assert!((rhs[2 * n + k] + vv).abs() <= 1e-8);
    }
    let mut bad = vec![0.0; 3 * n];
    bad[2 * n] = 0.1;
    assert!(matches!(wave_rhs_extrinsic(&u, &bad), Err(CaloricError::TangencyViolation { .. })));
    assert!(WaveState::extrinsic(u.clone(), bad).is_err());
    let mut held = vec![0.0; 3 * n];
    held[n - 1] = 0.1;
    assert!(WaveState::extrinsic(u, held).is_err());
}

#[test]
fn static_equatorial_map_is_nearly_at_rest() {
    let p = HarmonicProfile::new(ProfileFamily::Q, 1.0).unwrap();
    let err = |n: usize| {
        let g = grid(2, 10.0, n);
        let psi: Vec<f64> = g.nodes().iter().map(|&r| harmonic_profile(&p, r).unwrap()).collect();
        let u = ExtrinsicMapState::from_polar_angle(g.clone(), &psi).unwrap();
        let rhs = wave_rhs_extrinsic(&u, &vec![0.0; 3 * n]).unwrap();
        (0..n)
            .filter(|&k| (0.5..=9.0).contains(&g.nodes()[k]))
            .map(|k| (0..3).map(|c| rhs[c * n + k].abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };
    let (a, b) = (err(500), err(1000));
    assert!(a < 1e-3 && a / b > 3.5, "{a} {b}");
}

#[test]
fn step_limits_and_constant_data() {
    let g = grid(4, 5.0, 50);
    let u = ExtrinsicMapState::constant(g.clone(), &NORTH).unwrap();
    let s = WaveState::at_rest(WavePosition::Extrinsic(u));
    assert!(matches!(step_wave(&s, 0.6 * g.h()), Err(CaloricError::StabilityRefused { .. })));
    let next = step_wave(&s, 0.5 * g.h()).unwrap();
    assert_eq!(next.values(), s.values());
    assert!(next.velocity.iter().all(|&x| x == 0.0));
    assert!((next.time - 0.5 * g.h()).abs() < 1e-15);
    assert_eq!(conserved_energy(&s).unwrap(), 0.0);
}

#[test]
fn leapfrog_is_reversible() {
    let g = grid(2, 10.0, 500);
    let (_, s0) = soliton(&g, ProfileFamily::P, 0.5);
    let WavePosition::Equivariant(mut p) = s0.position.clone() else { unreachable!() };
    for (k, &r) in g.nodes().iter().enumerate().take(g.len() - 1) {
        p.psi.values[k] += 0.05 * r * smooth_bump(r, 0.0, 2.0);
    }
    let start = WaveState::equivariant(p, vec![0.0; g.len()]).unwrap();
    let dt = 0.5 * g.h();
    let mut s = start.clone();
    for _ in 0..400 {
        s = step_wave(&s, dt).unwrap();
    }
    let mut back = s.reverse();
    for _ in 0..400 {
        back = step_wave(&back, dt).unwrap();
    }
    let dpos = psi(&back).iter().zip(psi(&start)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dvel = back.velocity.iter().zip(&start.velocity).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    assert!(dpos <= 1e-10 && dvel <= 1e-10, "{dpos} {dvel}");
}

#[test]
fn soliton_energies() {
    let g = grid(2, 30.0, 3000);
    for lambda in [0.3, 0.5, 1.0 / 2f64.sqrt()] {
        let (_, s) = soliton(&g, ProfileFamily::P, lambda);
        let exact = 4.0 * PI * lambda * lambda / (1.0 - lambda * lambda);
        assert!((conserved_energy(&s).unwrap() - exact).abs() <= 1e-3 * exact);
    }
    let (_, s) = soliton(&g, ProfileFamily::Q, 1.0);
    assert!((conserved_energy(&s).unwrap() - 2.0 * PI).abs() <= 1e-3 * 2.0 * PI);
    let zero = EquivariantProfile::new(g.clone(), vec![0.0; g.len()], PolarTarget::hyperbolic()).unwrap();
    assert_eq!(conserved_energy(&WaveState::at_rest(WavePosition::Equivariant(zero))).unwrap(), 0.0);
}

#[test]
fn sphere_soliton_is_stationary() {
    let g = grid(2, 10.0, 1000);
    let (_, s) = soliton(&g, ProfileFamily::Q, 1.0);
    let traj = evolve(&s, 10.0, 0.5 * g.h(), 10).unwrap();
    let drift = psi(traj.last()).iter().zip(psi(&s)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 5.0 * g.h() * g.h(), "{drift}");
    let t = traj.times();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!((t[10] - 10.0).abs() < 1e-12);
}

/// Extrinsic small-data run used by the drift regression.
fn extrinsic_drift(n: usize) -> f64 {
    let cfg =
        PipelineConfig::<f64> { nodes: n, r_max: 6.0, amplitude: 0.05, velocity_amplitude: 0.05, ..PipelineConfig::default() };
    let s = pipeline_initial_data(&cfg).unwrap();
    let dt = 0.5 * s.grid().h();
    evolve(&s, 5.0, dt, 50).unwrap().energy_drift()
}

#[test]
fn energy_drift_is_second_order_in_dt() {
    // dt = h/2 throughout; drift / (dt^2 T) measured at 0.089 on this data
    // and frozen at 0.1.
    let (a, b) = (extrinsic_drift(60), extrinsic_drift(120));
    let dt = 0.5 * 6.0 / 60.0;
    assert!(a <= 0.1 * dt * dt * 5.0, "{a}");
    assert!((a / b).log2() >= 1.8, "{a} -> {b}");
}

#[test]
fn perturbation_probe_behaviour() {
    let g = grid(2, 20.0, 1000);
    let calm = perturbation_probe(g.clone(), ProfileFamily::P, 0.5, 0.0, 5.0, 5).unwrap();
    // Constant up to the O(h^2) non-stationarity of the discrete soliton.
    let first = &calm.diagnostics[0];
    let (e0, l0) = (first.get("energy").unwrap(), first.get("local_energy").unwrap());
    assert_eq!(first.get("local_excess"), Some(0.0));
    for d in &calm.diagnostics {
        assert!((d.get("energy").unwrap() - e0).abs() <= 1e-12 * e0);
        assert!((d.get("local_energy").unwrap() - l0).abs() <= 1e-5 * l0);
        assert!(d.get("local_excess").unwrap() <= 1e-10);
        assert_eq!(d.get("boundary_value"), first.get("boundary_value"));
    }
    let kicked = perturbation_probe(g.clone(), ProfileFamily::P, 0.5, 0.01, 30.0, 30).unwrap();
    let first = kicked.diagnostics[0].get("local_excess").unwrap();
    let last = kicked.diagnostics.last().unwrap().get("local_excess").unwrap();
    assert!(first > 0.0 && last <= 0.2 * first, "{first} -> {last}");
    let b0 = kicked.diagnostics[0].get("boundary_value").unwrap();
    assert!(kicked.diagnostics.iter().all(|d| (d.get("boundary_value").unwrap() - b0).abs() <= 1e-12));
    assert!(perturbation_probe(grid(3, 5.0, 50), ProfileFamily::P, 0.5, 0.0, 1.0, 1).is_err());
    assert!(perturbation_probe(g, ProfileFamily::P, 1.5, 0.0, 1.0, 1).is_err());
}

/// Outermost radius where `|psi|` or `|psi_t|` exceeds `tol` after time
/// `t`, for data supported in `[2, 3]`.
fn front(n: usize, t: f64, tol: f64) -> (f64, f64) {
    let g = grid(2, 12.0, n);
    let prof = EquivariantProfile::from_fn(g.clone(), PolarTarget::sphere(), |r| 0.1 * smooth_bump(r, 2.5, 0.5)).unwrap();
    let s = WaveState::at_rest(WavePosition::Equivariant(prof));
    let end = evolve(&s, t, 0.5 * g.h(), 1).unwrap();
    let last = end.last();
    let r =
        (0..n).filter(|&k| psi(last)[k].abs() > tol || last.velocity[k].abs() > tol).map(|k| g.nodes()[k]).fold(0.0, f64::max);
    (r, g.h())
}

#[test]
fn finite_propagation_speed() {
    let (r0, t) = (3.0, 2.0);
    // The three-point stencil at dt = h/2 cannot reach past r0 + 2t.
    let (r, h) = front(600, t, 0.0);
    assert!(r <= r0 + 2.0 * t + h, "{r}");
    // Above 1e-12 the front sits just outside the light cone; the excess is
    // a numerical precursor that shrinks under refinement.
    let (a, _) = front(600, t, 1e-12);
    let (b, _) = front(1200, t, 1e-12);
    assert!(a - (r0 + t) <= 0.4, "{a}");
    assert!(b - (r0 + t) < a - (r0 + t), "{a} -> {b}");
}

#[test]
fn pipeline_with_constant_data_is_trivial() {
    let cfg = PipelineConfig::<f64> { amplitude: 0.0, velocity_amplitude: 0.0, nodes: 60, ..PipelineConfig::default() };
    let out = run_coupled_pipeline(&cfg).unwrap();
    assert!(out.residuals.entries.values().all(|e| e.linf == 0.0 && e.l2 == 0.0));
    assert!(out.norms.iter().all(|(_, v)| v == 0.0));
}

#[test]
fn pipeline_wave_tension_sits_at_the_static_floor() {
    let out = run_coupled_pipeline(&PipelineConfig::<f64>::default()).unwrap();
    let w0 = out.residuals.get("wave_tension_s0").unwrap().per_level[0].1;
    let floor = out.norms.get("floor").unwrap();
    assert!(floor > 0.0 && w0 <= 10.0 * floor, "{w0} vs {floor}");
    assert!(out.norms.get("energy_drift").unwrap() <= 1e-4);
    assert!(out.norms.get("S_I").unwrap().is_finite());
}

#[test]
fn pipeline_configuration_errors() {
    let bad = PipelineConfig::<f64> { slices: 2, ..PipelineConfig::default() };
    assert!(matches!(run_coupled_pipeline(&bad), Err(CaloricError::InvalidParameter { .. })));
    let bad = PipelineConfig::<f64> { t_center: 0.0, ..PipelineConfig::default() };
    assert!(run_coupled_pipeline(&bad).is_err());
    let r = PipelineConfig::<f64>::default().refined();
    assert_eq!(r.nodes, 2 * PipelineConfig::<f64>::default().nodes);
}
