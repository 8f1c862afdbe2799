use caloric::geometry::{build_radial_grid, smooth_bump};
use caloric::heat_flow::*;
use caloric::targets::{harmonic_profile, HarmonicProfile, PolarTarget, ProfileFamily};
use caloric::{CaloricError, RadialGrid};
use proptest::prelude::*;
use std::sync::Arc;

const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

fn grid(d: usize, r_max: f64, n: usize) -> Arc<RadialGrid<f64>> {
    Arc::new(build_radial_grid(d, r_max, n).unwrap())
}

/// Radial map tilting the north pole by `a bump(r)` toward `e1`.
fn bump_map(g: &Arc<RadialGrid<f64>>, a: f64) -> ExtrinsicMapState<f64> {
    ExtrinsicMapState::from_fn(g.clone(), &NORTH, MapSymmetry::Radial, |r| {
        let t = a * smooth_bump(r, 0.0, 2.0);
        vec![t.sin(), 0.0, t.cos()]
    })
    .unwrap()
}

#[test]
fn constant_maps_are_at_rest() {
    let g = grid(4, 5.0, 50);
    let u = ExtrinsicMapState::constant(g.clone(), &NORTH).unwrap();
    assert!(heat_rhs_extrinsic(&u).iter().all(|&x| x == 0.0));
    let next = step_heat(&u, 0.5 * g.h() * g.h(), HeatScheme::ExplicitRk4).unwrap();
    assert_eq!(next.values(), u.values());
    let res = run_heat_resolution(&u, HeatLadder { s_min: g.h() * g.h() / 4.0, s_max: 5.0, rho: 2.0 }, HeatScheme::ExplicitRk4)
        .unwrap();
    assert!(res.states().iter().all(|s| s.values() == u.values()));
    assert!(res.tension().iter().all(|t| t.iter().all(|&x| x == 0.0)));
    let report = smoothing_report(&res).unwrap();
    assert!(report.iter().all(|(_, v)| v == 0.0));
    let zero = EquivariantProfile::new(g.clone(), vec![0.0; g.len()], PolarTarget::sphere()).unwrap();
    assert!(heat_rhs_equivariant(&zero).values.iter().all(|&x| x == 0.0));
}

#[test]
fn equatorial_harmonic_map_has_small_tangential_tension() {
    let p = HarmonicProfile::new(ProfileFamily::Q, 1.0).unwrap();
    let err = |n: usize| {
        let g = grid(2, 10.0, n);
        let psi: Vec<f64> = g.nodes().iter().map(|&r| harmonic_profile(&p, r).unwrap()).collect();
        let u = ExtrinsicMapState::from_polar_angle(g.clone(), &psi).unwrap();
        let rhs = heat_rhs_extrinsic(&u);
        let mut away = 0.0f64;
        for (k, &r) in g.nodes().iter().enumerate() {
            // Tangential part along d/dpsi = (cos psi, 0, -sin psi).
            let t = rhs[k] * psi[k].cos() - rhs[2 * n + k] * psi[k].sin();
            if (0.5..=9.0).contains(&r) {
                away = away.max(t.abs());
            }
        }
        away
    };
    let (a, b) = (err(500), err(1000));
    assert!(a < 1e-3 && a / b > 3.5, "{a} {b}");
}

#[test]
fn tension_is_tangent() {
    let g = grid(4, 6.0, 120);
    let u = bump_map(&g, 0.3);
    let rhs = heat_rhs_extrinsic(&u);
    let n = g.len();
    let grad2 = 2.0 * u.dirichlet_energy();
    for k in 0..n {
        let node = u.node(k);
        let normal: f64 = (0..3).map(|c| rhs[c * n + k] * node[c]).sum();
        assert!(normal.abs() <= 1e-6 * grad2.max(1.0), "k={k}: {normal}");
    }
}

#[test]
fn equivariant_profile_is_discretely_harmonic() {
    let p = HarmonicProfile::new(ProfileFamily::P, 0.5).unwrap();
    let err = |n: usize| {
        let g = grid(2, 10.0, n);
        let prof =
            EquivariantProfile::from_fn(g.clone(), PolarTarget::hyperbolic(), |r| harmonic_profile(&p, r).unwrap()).unwrap();
        let rhs = heat_rhs_equivariant(&prof);
        g.nodes().iter().zip(&rhs.values).filter(|(&r, _)| (0.5..=9.0).contains(&r)).map(|(_, x)| x.abs()).fold(0.0, f64::max)
    };
    let (a, b) = (err(500), err(1000));
    assert!(a < 1e-3 && a / b > 3.5, "{a} {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn equivariant_and_extrinsic_tensions_agree(a in -1.0f64..1.0, c in 0.0f64..2.0, w in 0.8f64..2.0) {
        // psi vanishes at the origin (odd), with a smooth bump on top.
        let err = |n: usize| {
            let g = grid(2, 8.0, n);
            let psi: Vec<f64> = g.nodes().iter().map(|&r| a * r.tanh() * smooth_bump(r, c, w + 1.0)).collect();
            let prof = EquivariantProfile::new(g.clone(), psi.clone(), PolarTarget::sphere()).unwrap();
            let intrinsic = heat_rhs_equivariant(&prof).values;
            let u = ExtrinsicMapState::from_polar_angle(g.clone(), &psi).unwrap();
            let rhs = heat_rhs_extrinsic(&u);
            (0..n - 1)
                .filter(|&k| g.nodes()[k] >= 0.5)
                .map(|k| (rhs[k] * psi[k].cos() - rhs[2 * n + k] * psi[k].sin() - intrinsic[k]).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(200), err(400));
        prop_assert!(e1 <= 0.5 * (8.0f64 / 200.0).powi(2) * a.abs().max(1e-3) * 10.0 || e1 < 1e-12, "e1 {}", e1);
        prop_assert!(e2 <= e1 / 3.0 || e2 < 1e-10, "{} -> {}", e1, e2);
    }
}

#[test]
fn harmonic_profile_is_a_fixed_point() {
    let g = grid(2, 10.0, 2000);
    let p = HarmonicProfile::new(ProfileFamily::P, 0.5).unwrap();
    let start = EquivariantProfile::from_fn(g.clone(), PolarTarget::hyperbolic(), |r| harmonic_profile(&p, r).unwrap()).unwrap();
    let ds = 0.5 * g.h() * g.h();
    let mut s = start.clone();
    for _ in 0..100 {
        s = step_heat(&s, ds, HeatScheme::ExplicitRk4).unwrap();
    }
    let drift = s.psi.values.iter().zip(&start.psi.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-6, "{drift}");
}

#[test]
fn stability_limit_is_enforced() {
    let g = grid(4, 6.0, 60);
    let u = bump_map(&g, 0.2);
    let h2 = g.h() * g.h();
    assert!(matches!(step_heat(&u, h2, HeatScheme::ExplicitRk4), Err(CaloricError::StabilityRefused { .. })));
    assert!(step_heat(&u, -1.0, HeatScheme::Imex).is_err());
    let v = step_heat(&u, 10.0 * h2, HeatScheme::Imex).unwrap();
    assert!(constraint_violation(&v) <= 1e-14);
    assert!(v.dirichlet_energy() < u.dirichlet_energy());
}

#[test]
fn constraint_is_maintained() {
    let g = grid(4, 6.0, 60);
    let u = bump_map(&g, 0.5);
    assert!(constraint_violation(&u) <= 1e-15);
    let v = step_heat(&u, 0.5 * g.h() * g.h(), HeatScheme::ExplicitRk4).unwrap();
    assert!(constraint_violation(&v) <= 1e-14);
    assert!(ExtrinsicMapState::from_fn(g.clone(), &NORTH, MapSymmetry::Radial, |_| vec![0.0; 3]).is_err());
    assert!(ExtrinsicMapState::from_fn(g, &[0.0, 1.0], MapSymmetry::Equivariant, |_| vec![0.0, 1.0]).is_err());
}

#[test]
fn small_data_decays_and_dissipates() {
    let g = grid(4, 8.0, 80);
    let u = bump_map(&g, 0.2);
    let ladder = HeatLadder { s_min: g.h() * g.h() / 4.0, s_max: 50.0, rho: 2f64.powf(0.25) };
    let res = run_heat_resolution(&u, ladder, HeatScheme::ExplicitRk4).unwrap();
    assert_eq!(res.s_levels()[0], 0.0);
    assert!(*res.s_levels().last().unwrap() >= 50.0);
    let energies: Vec<f64> = res.states().iter().map(|s| s.dirichlet_energy()).collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{energies:?}");
    let last = res.states().last().unwrap();
    let n = g.len();
    let dev = (0..n).map(|k| last.node(k).iter().zip(&NORTH).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
    assert!(dev <= 1e-3, "{dev}");
    assert!(res.states().iter().all(|s| constraint_violation(s) <= 1e-12));
}

#[test]
fn ladder_validation() {
    let g = grid(4, 8.0, 80);
    let u = bump_map(&g, 0.2);
    let h2 = g.h() * g.h();
    let bad = [
        HeatLadder { s_min: 2.0 * h2, s_max: 10.0, rho: 2.0 },
        HeatLadder { s_min: h2, s_max: 10.0, rho: 1.0 },
        HeatLadder { s_min: h2, s_max: 10.0, rho: 2.5 },
        HeatLadder { s_min: h2, s_max: h2 / 2.0, rho: 2.0 },
    ];
    for l in bad {
        assert!(matches!(run_heat_resolution(&u, l, HeatScheme::ExplicitRk4), Err(CaloricError::InvalidConfig(_))), "{l:?}");
    }
    let l = HeatLadder::for_grid(&*g);
    assert_eq!(l.s_min, h2 / 4.0);
    let levels = l.levels();
    assert!(levels.windows(2).all(|w| (w[1] / w[0] - l.rho).abs() < 1e-12));
    assert!(*levels.last().unwrap() >= l.s_max && levels[levels.len() - 2] < l.s_max);
}

#[test]
fn smoothing_report_is_linear_and_bounded() {
    let g = grid(4, 8.0, 80);
    let ladder = HeatLadder { s_min: g.h() * g.h() / 4.0, s_max: 50.0, rho: 2f64.powf(0.25) };
    let run = |a: f64| {
        let u = bump_map(&g, a);
        let res = run_heat_resolution(&u, ladder, HeatScheme::ExplicitRk4).unwrap();
        (smoothing_report(&res).unwrap(), du_h1_norm(&u))
    };
    let (big, h1) = run(0.05);
    let (small, _) = run(0.025);
    assert_eq!(big.len(), 6);
    for (name, v) in big.iter() {
        assert!(v.is_finite() && v > 0.0, "{name}");
        assert!(v <= 10.0 * h1, "{name}: {v} vs {h1}");
        let ratio = v / small.get(name).unwrap() / 2.0;
        assert!((0.8..=1.2).contains(&ratio), "{name}: {ratio}");
    }
}

#[test]
fn smoothing_report_needs_a_ladder() {
    let g = grid(4, 8.0, 80);
    let u = bump_map(&g, 0.1);
    let h2 = g.h() * g.h();
    let res = run_heat_resolution(&u, HeatLadder { s_min: h2, s_max: 1.5 * h2, rho: 2.0 }, HeatScheme::ExplicitRk4).unwrap();
    assert!(matches!(smoothing_report(&res), Err(CaloricError::InsufficientLadder(_))));
}

#[test]
fn equivariant_and_extrinsic_flows_agree() {
    let err = |n: usize| {
        let g = grid(2, 8.0, n);
        let psi: Vec<f64> = g.nodes().iter().map(|&r| 0.5 * r.tanh() * smooth_bump(r, 0.0, 3.0)).collect();
        let mut p = EquivariantProfile::new(g.clone(), psi.clone(), PolarTarget::sphere()).unwrap();
        let mut u = ExtrinsicMapState::from_polar_angle(g.clone(), &psi).unwrap();
        let ds = 0.5 * g.h() * g.h();
        let steps = (1.0 / ds).round() as usize;
        for _ in 0..steps {
            p = step_heat(&p, ds, HeatScheme::ExplicitRk4).unwrap();
            u = step_heat(&u, ds, HeatScheme::ExplicitRk4).unwrap();
        }
        (0..n)
            .map(|k| {
                let node = u.node(k);
                (node[0].atan2(node[2]) - p.psi.values[k]).abs()
            })
            .fold(0.0, f64::max)
    };
    let (a, b) = (err(80), err(160));
    assert!(a < 1e-2, "{a}");
    assert!(a / b > 3.0, "{a} -> {b}");
}

#[test]
fn single_precision_heat_step() {
    let g = Arc::new(caloric::RadialGrid32::new(4, 6.0, 60).unwrap());
    let u = caloric::ExtrinsicMap32::from_fn(g.clone(), &[0.0, 0.0, 1.0], MapSymmetry::Radial, |r: f32| {
        let t = 0.2 * smooth_bump(r, 0.0, 2.0);
        vec![t.sin(), 0.0, t.cos()]
    })
    .unwrap();
    let v = step_heat(&u, 0.5 * g.h() * g.h(), HeatScheme::ExplicitRk4).unwrap();
    assert!(constraint_violation(&v) < 1e-6);
    assert!(v.dirichlet_energy() <= u.dirichlet_energy());
}
