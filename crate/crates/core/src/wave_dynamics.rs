//! Wave-map evolution: the 1-equivariant equation on H^2 and radial
//! extrinsic sphere-valued maps on H^d, plus the coupled pipeline that
//! heat-resolves a window of time slices and checks the caloric-gauge
//! identities on them.

use crate::caloric_gauge::{
    caloric_frames, compute_gauge_data, dynamic_residuals, rotate_frame, verify_reconstruction, verify_structure, FrameField,
    GaugeData, MapResolution, ResidualReport, SliceRef, TimeStencil,
};
use crate::error::{CaloricError, Result};
use crate::geometry::{check_len, lp_norm_values, smooth_bump, NormReport, OuterBoundary, Parity, RadialGrid, ScalarField};
use crate::heat_flow::{
    du_h1_norm, extrinsic_tension, normalize_nodes, run_heat_resolution, EquivariantProfile, ExtrinsicMapState, HeatFlowState,
    HeatLadder, HeatScheme, MapSymmetry,
};
use crate::linalg::SmallMat;
use crate::linear_dispersion::{heat_semigroup_values, schedule};
use crate::scalar::Real;
use crate::targets::{equivariant_energy, equivariant_tension, harmonic_profile, HarmonicProfile, ProfileFamily};
use rayon::prelude::*;
use std::sync::Arc;

/// Tolerance on `|<v, u>|` for extrinsic velocities.
pub const TANGENCY_TOLERANCE: f64 = 1e-8;

/// Position part of a wave-map state.
#[derive(Debug, Clone, PartialEq)]
pub enum WavePosition<T> {
    Extrinsic(ExtrinsicMapState<T>),
    Equivariant(EquivariantProfile<T>),
}

/// Wave-map data `(u, d_t u)` at one time. Extrinsic velocities are stored
/// component-major like the position; equivariant velocities are `psi_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState<T> {
    pub position: WavePosition<T>,
    pub velocity: Vec<T>,
    pub time: T,
}

impl<T: Real> WaveState<T> {
    /// Equivariant data `(psi, psi_t)`; `psi_t` must vanish at `r_max`.
    pub fn equivariant(profile: EquivariantProfile<T>, psi_t: Vec<T>) -> Result<Self> {
        check_len(profile.grid(), psi_t.len())?;
        check_held(&psi_t, profile.grid().len(), 1)?;
        Ok(Self { position: WavePosition::Equivariant(profile), velocity: psi_t, time: T::zero() })
    }

    /// Extrinsic data; the velocity must be tangent to the sphere at every
    /// node and vanish at `r_max`.
    pub fn extrinsic(state: ExtrinsicMapState<T>, velocity: Vec<T>) -> Result<Self> {
        let (n, m) = (state.grid().len(), state.ambient_dim());
        if velocity.len() != n * m {
            return Err(CaloricError::ShapeMismatch { expected: n * m, found: velocity.len() });
        }
        check_held(&velocity, n, m)?;
        check_tangency(state.values(), &velocity, m, n)?;
        Ok(Self { position: WavePosition::Extrinsic(state), velocity, time: T::zero() })
    }

    /// Data at rest.
    pub fn at_rest(position: WavePosition<T>) -> Self {
        let len = match &position {
            WavePosition::Extrinsic(s) => s.values().len(),
            WavePosition::Equivariant(p) => p.psi.len(),
        };
        Self { position, velocity: vec![T::zero(); len], time: T::zero() }
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        match &self.position {
            WavePosition::Extrinsic(s) => s.grid(),
            WavePosition::Equivariant(p) => p.grid(),
        }
    }

    /// Position values (`psi`, or component-major `u`).
    pub fn values(&self) -> &[T] {
        match &self.position {
            WavePosition::Extrinsic(s) => s.values(),
            WavePosition::Equivariant(p) => &p.psi.values,
        }
    }

    /// The same position with the velocity negated.
    pub fn reverse(&self) -> Self {
        let mut out = self.clone();
        out.velocity.iter_mut().for_each(|v| *v = -*v);
        out
    }
}

fn check_held<T: Real>(velocity: &[T], n: usize, m: usize) -> Result<()> {
    if (0..m).any(|c| velocity[c * n + n - 1] != T::zero()) {
        return Err(CaloricError::InvalidParameter {
            name: "velocity".into(),
            reason: "must vanish at r_max where the map is held".into(),
        });
    }
    Ok(())
}

fn check_tangency<T: Real>(u: &[T], v: &[T], m: usize, n: usize) -> Result<()> {
    let worst = (0..n).map(|k| (0..m).map(|c| u[c * n + k] * v[c * n + k]).sum::<T>().abs()).fold(T::zero(), T::max);
    if worst > T::lit(TANGENCY_TOLERANCE) {
        return Err(CaloricError::TangencyViolation { residual: worst.to_f64_lossy(), tolerance: TANGENCY_TOLERANCE });
    }
    Ok(())
}

/// `psi_tt = Delta psi - g(psi) g'(psi) / sinh^2 r` on H^2, held at `r_max`.
pub fn wave_rhs_equivariant<T: Real>(p: &EquivariantProfile<T>) -> Result<ScalarField<T>> {
    let grid = p.grid();
    if grid.dim() != 2 {
        return Err(CaloricError::UnsupportedDimension(grid.dim()));
    }
    let mut out = vec![T::zero(); grid.len()];
    equivariant_tension(grid, &p.psi.values, p.target, OuterBoundary::Held, &mut out);
    Ok(ScalarField::new(out, Parity::Odd))
}

/// `u_tt = Delta u + u (|grad u|^2 - |u_t|^2)` with the discrete
/// `|grad u|^2 := -<Delta_h u, u>`, so the first two terms are the tangential
/// projection of `Delta_h u`.
pub fn wave_rhs_extrinsic<T: Real>(state: &ExtrinsicMapState<T>, velocity: &[T]) -> Result<Vec<T>> {
    let (n, m) = (state.grid().len(), state.ambient_dim());
    if velocity.len() != n * m {
        return Err(CaloricError::ShapeMismatch { expected: n * m, found: velocity.len() });
    }
    check_tangency(state.values(), velocity, m, n)?;
    Ok(extrinsic_rhs(state, state.values(), velocity))
}

fn extrinsic_rhs<T: Real>(state: &ExtrinsicMapState<T>, u: &[T], v: &[T]) -> Vec<T> {
    let (n, m) = (state.grid().len(), state.ambient_dim());
    let mut out = extrinsic_tension(state.grid(), state.symmetry(), m, u);
    for k in 0..n - 1 {
        let speed2: T = (0..m).map(|c| v[c * n + k] * v[c * n + k]).sum();
        for c in 0..m {
            out[c * n + k] = out[c * n + k] - speed2 * u[c * n + k];
        }
    }
    out
}

fn project_tangent<T: Real>(u: &[T], v: &mut [T], m: usize, n: usize) {
    for k in 0..n {
        let dot: T = (0..m).map(|c| u[c * n + k] * v[c * n + k]).sum();
        for c in 0..m {
            v[c * n + k] = v[c * n + k] - dot * u[c * n + k];
        }
    }
}

fn check_step<T: Real>(grid: &RadialGrid<T>, dt: T) -> Result<()> {
    let limit = T::lit(0.5) * grid.h();
    if !(dt > T::zero()) {
        return Err(CaloricError::InvalidParameter { name: "dt".into(), reason: "must be positive".into() });
    }
    if dt > limit * T::lit(1.0 + 1e-12) {
        return Err(CaloricError::StabilityRefused { step: dt.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    Ok(())
}

/// One leapfrog step. Equivariant states use kick-drift-kick; extrinsic
/// states project the drifted position to the sphere and the kicked
/// velocity to its tangent space.
pub fn step_wave<T: Real>(state: &WaveState<T>, dt: T) -> Result<WaveState<T>> {
    check_step(state.grid(), dt)?;
    let half = T::lit(0.5) * dt;
    let mut out = state.clone();
    match &mut out.position {
        WavePosition::Equivariant(p) => {
            let a = wave_rhs_equivariant(p)?.values;
            let v = &mut out.velocity;
            for k in 0..v.len() {
                v[k] = v[k] + half * a[k];
                p.psi.values[k] = p.psi.values[k] + dt * v[k];
            }
            let a = wave_rhs_equivariant(p)?.values;
            for k in 0..v.len() {
                v[k] = v[k] + half * a[k];
            }
        }
        WavePosition::Extrinsic(s) => {
            let (n, m) = (s.grid().len(), s.ambient_dim());
            let a = extrinsic_rhs(s, s.values(), &out.velocity);
            let v = &mut out.velocity;
            for i in 0..v.len() {
                v[i] = v[i] + half * a[i];
            }
            {
                let u = s.values_mut();
                for i in 0..u.len() {
                    u[i] = u[i] + dt * v[i];
                }
                normalize_nodes(u, m, n)?;
            }
            let a = extrinsic_tension(s.grid(), s.symmetry(), m, s.values());
            for i in 0..v.len() {
                v[i] = v[i] + half * a[i];
            }
            project_tangent(s.values(), v, m, n);
        }
    }
    if out.values().iter().chain(&out.velocity).any(|x| !x.is_finite()) {
        return Err(CaloricError::WaveDivergence { t: (state.time + dt).to_f64_lossy(), step: 1 });
    }
    out.time = state.time + dt;
    Ok(out)
}

/// Kinetic plus Dirichlet energy, with the equivariant potential term for
/// equivariant states.
pub fn conserved_energy<T: Real>(state: &WaveState<T>) -> Result<T> {
    match &state.position {
        WavePosition::Equivariant(p) => equivariant_energy(p.grid(), &p.psi.values, Some(&state.velocity), p.target),
        WavePosition::Extrinsic(s) => {
            let grid = s.grid();
            let n = grid.len();
            let kinetic: T = (0..s.ambient_dim())
                .map(|c| grid.inner(&state.velocity[c * n..(c + 1) * n], &state.velocity[c * n..(c + 1) * n]))
                .sum();
            Ok(s.dirichlet_energy() + T::lit(0.5) * kinetic)
        }
    }
}

/// Half the kinetic plus gradient density integrated over `r <= radius`,
/// with the nodal derivative.
pub fn local_energy<T: Real>(state: &WaveState<T>, radius: T) -> T {
    let grid = state.grid();
    let n = grid.len();
    let stop = grid.index_at_or_below(radius).map_or(0, |k| k + 1);
    let comps = state.velocity.len() / n;
    let mut e = T::zero();
    for c in 0..comps {
        let parity = match &state.position {
            WavePosition::Extrinsic(s) => s.parity(c),
            WavePosition::Equivariant(_) => Parity::Odd,
        };
        let f = &state.values()[c * n..(c + 1) * n];
        let df = grid.derivative(f, parity);
        let v = &state.velocity[c * n..(c + 1) * n];
        e = e + (0..stop).map(|k| grid.weights()[k] * (v[k] * v[k] + df[k] * df[k])).sum::<T>();
    }
    T::lit(0.5) * e
}

/// Evolved wave states with per-sample diagnostics (`energy`,
/// `sup_position`, `sup_velocity`, `local_energy`).
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub states: Vec<WaveState<T>>,
    pub diagnostics: Vec<NormReport<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &WaveState<T> {
        self.states.last().expect("trajectories hold at least the initial state")
    }

    /// Largest `|E(t) - E(0)| / E(0)` over the samples.
    pub fn energy_drift(&self) -> T {
        let get = |i: usize| self.diagnostics[i].get("energy").unwrap_or(T::zero());
        let e0 = get(0);
        if !(e0 > T::zero()) {
            return T::zero();
        }
        (0..self.diagnostics.len()).map(|i| (get(i) - e0).abs() / e0).fold(T::zero(), T::max)
    }
}

/// Local-energy window used by [`Trajectory`] diagnostics.
pub const LOCAL_ENERGY_RADIUS: f64 = 1.0;

fn diagnostics<T: Real>(state: &WaveState<T>) -> Result<NormReport<T>> {
    let sup = |v: &[T]| v.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    let mut r = NormReport::new();
    r.insert("energy", conserved_energy(state)?)?;
    let pos = match &state.position {
        WavePosition::Extrinsic(s) => {
            let n = s.grid().len();
            let u = s.values();
            (0..n)
                .map(|k| (0..s.ambient_dim()).map(|c| (u[c * n + k] - s.u_infty()[c]).powi(2)).sum::<T>().sqrt())
                .fold(T::zero(), T::max)
        }
        WavePosition::Equivariant(p) => sup(&p.psi.values),
    };
    r.insert("sup_position", pos)?;
    r.insert("sup_velocity", sup(&state.velocity))?;
    r.insert("local_energy", local_energy(state, T::lit(LOCAL_ENERGY_RADIUS)))?;
    Ok(r)
}

/// Leapfrog evolution over `[t0, t0 + t_end]`. The step is shortened so
/// `samples` intervals of whole steps cover the window.
pub fn evolve<T: Real>(initial: &WaveState<T>, t_end: T, dt: T, samples: usize) -> Result<Trajectory<T>> {
    evolve_with(initial, t_end, dt, samples, diagnostics)
}

fn evolve_with<T: Real>(
    initial: &WaveState<T>,
    t_end: T,
    dt: T,
    samples: usize,
    diag: impl Fn(&WaveState<T>) -> Result<NormReport<T>>,
) -> Result<Trajectory<T>> {
    check_step(initial.grid(), dt)?;
    let (per, dt) = schedule(t_end, dt, samples)?;
    let t0 = initial.time;
    let mut state = initial.clone();
    let mut states = vec![state.clone()];
    let mut reports = vec![diag(&state)?];
    for i in 1..=samples {
        for j in 0..per {
            state = step_wave(&state, dt).map_err(|e| match e {
                CaloricError::WaveDivergence { t, .. } => CaloricError::WaveDivergence { t, step: (i - 1) * per + j + 1 },
                other => other,
            })?;
        }
        state.time = t0 + t_end * T::of(i) / T::of(samples);
        reports.push(diag(&state)?);
        states.push(state.clone());
    }
    Ok(Trajectory { states, diagnostics: reports })
}

/// Evolves `P_lambda + amplitude * r * bump(r)` (or the `Q` analogue) from
/// rest on H^2 and records the local excess
/// `int_{r <= 1} (psi_t^2 + ((psi - P)_r)^2) sinh r dr` as `local_excess`.
pub fn perturbation_probe<T: Real>(
    grid: Arc<RadialGrid<T>>,
    family: ProfileFamily,
    lambda: T,
    amplitude: T,
    t_end: T,
    samples: usize,
) -> Result<Trajectory<T>> {
    if grid.dim() != 2 {
        return Err(CaloricError::UnsupportedDimension(grid.dim()));
    }
    let profile = HarmonicProfile::new(family, lambda)?;
    let base: Vec<T> = grid.nodes().iter().map(|&r| harmonic_profile(&profile, r)).collect::<Result<_>>()?;
    let last = grid.len() - 1;
    let psi: Vec<T> = grid
        .nodes()
        .iter()
        .zip(&base)
        .enumerate()
        .map(|(k, (&r, &p))| if k == last { p } else { p + amplitude * r * smooth_bump(r, T::zero(), T::one()) })
        .collect();
    let initial =
        WaveState::equivariant(EquivariantProfile::new(grid.clone(), psi, profile.target())?, vec![T::zero(); grid.len()])?;
    let stop = grid.index_at_or_below(T::lit(LOCAL_ENERGY_RADIUS)).map_or(0, |k| k + 1);
    let g = grid.clone();
    evolve_with(&initial, t_end, T::lit(0.5) * grid.h(), samples, move |s| {
        let mut r = diagnostics(s)?;
        let diff: Vec<T> = s.values().iter().zip(&base).map(|(&a, &b)| a - b).collect();
        let dd = g.derivative(&diff, Parity::Odd);
        let excess: T = (0..stop).map(|k| (s.velocity[k].powi(2) + dd[k].powi(2)) * g.nodes()[k].sinh() * g.h()).sum();
        r.insert("local_excess", excess)?;
        r.insert("boundary_value", s.values()[g.len() - 1])?;
        Ok(r)
    })
}

/// Settings of the coupled wave / heat / gauge pipeline on radial
/// `S^2`-valued maps over H^d. Initial data:
/// `u_0 = N(a exp(-r^2/2), 0, 1)`, `u_1 = (0, b r^2 exp(-r^2/2), 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig<T> {
    pub dim: usize,
    pub r_max: T,
    pub nodes: usize,
    pub rho: T,
    pub s_max: T,
    /// Spacing of the time slices.
    pub dt: T,
    /// Number of slices (3 to 5).
    pub slices: usize,
    /// Time of the central slice.
    pub t_center: T,
    pub amplitude: T,
    pub velocity_amplitude: T,
    /// Rotation angle applied to the limiting frame.
    pub gauge_angle: T,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            dim: 4,
            r_max: T::lit(6.0),
            nodes: 120,
            rho: T::lit(2f64.powf(0.125)),
            s_max: T::lit(20.0),
            dt: T::lit(0.01),
            slices: 3,
            t_center: T::lit(0.5),
            amplitude: T::lit(0.004),
            velocity_amplitude: T::lit(0.004),
            gauge_angle: T::zero(),
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    /// Halves `h`, `log rho` and `dt`.
    pub fn refined(&self) -> Self {
        Self { nodes: self.nodes * 2, rho: self.rho.sqrt(), dt: self.dt * T::lit(0.5), ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.slices) {
            return Err(CaloricError::InvalidParameter {
                name: "slices".into(),
                reason: "the window holds 3 to 5 slices".into(),
            });
        }
        if !(self.dt > T::zero()) {
            return Err(CaloricError::InvalidParameter { name: "dt".into(), reason: "must be positive".into() });
        }
        let half = T::of(self.slices / 2) * self.dt;
        if self.t_center < half {
            return Err(CaloricError::InvalidParameter {
                name: "t_center".into(),
                reason: "the window must start at t >= 0".into(),
            });
        }
        Ok(())
    }
}

/// Output of [`run_coupled_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutput<T> {
    /// Reconstruction, structure and dynamic residuals on the central slice.
    pub residuals: ResidualReport<T>,
    /// Diagnostics: `S_I`, `floor`, `energy_drift`, `du_h1`, `max_a_s`,
    /// `frame_drift`, `orthonormality_defect`, `antisymmetry_defect`,
    /// `psi_s_consistency`.
    pub norms: NormReport<T>,
    pub gauge: GaugeData<T>,
}

/// Initial data of the pipeline.
pub fn pipeline_initial_data<T: Real>(cfg: &PipelineConfig<T>) -> Result<WaveState<T>> {
    let grid = Arc::new(RadialGrid::new(cfg.dim, cfg.r_max, cfg.nodes)?);
    let a = cfg.amplitude;
    let half = T::lit(0.5);
    let u0 = ExtrinsicMapState::from_fn(grid.clone(), &[T::zero(), T::zero(), T::one()], MapSymmetry::Radial, move |r| {
        vec![a * (-half * r * r).exp(), T::zero(), T::one()]
    })?;
    let n = grid.len();
    let mut v = vec![T::zero(); 3 * n];
    for (k, &r) in grid.nodes().iter().enumerate().take(n - 1) {
        v[n + k] = cfg.velocity_amplitude * r * r * (-half * r * r).exp();
    }
    project_tangent(u0.values(), &mut v, 3, n);
    WaveState::extrinsic(u0, v)
}

fn rotated_limit_frame<T: Real>(angle: T) -> Vec<Vec<T>> {
    let base = vec![vec![T::one(), T::zero(), T::zero()], vec![T::zero(), T::one(), T::zero()]];
    if angle == T::zero() {
        return base;
    }
    let (s, c) = angle.sin_cos();
    rotate_frame(&base, &SmallMat::from_rows(2, &[c, -s, s, c]))
}

/// Evolves the pipeline data to the slice window, heat-resolves every slice
/// (in parallel), builds caloric gauges with a shared limiting frame, and
/// reports the gauge residuals of the central slice with the `S(I)` sample.
pub fn run_coupled_pipeline<T: Real>(cfg: &PipelineConfig<T>) -> Result<PipelineOutput<T>> {
    cfg.validate()?;
    let initial = pipeline_initial_data(cfg)?;
    let grid = initial.grid().clone();
    let h = grid.h();
    let sub = (cfg.dt / (T::lit(0.5) * h)).ceil().to_usize().unwrap_or(1).max(1);
    let dt_w = cfg.dt / T::of(sub);
    let t_start = cfg.t_center - T::of(cfg.slices / 2) * cfg.dt;
    let mut state = initial.clone();
    if t_start > T::zero() {
        let lead = (t_start / dt_w).ceil().to_usize().unwrap_or(1).max(1);
        let step = t_start / T::of(lead);
        for _ in 0..lead {
            state = step_wave(&state, step)?;
        }
    }
    let mut window = vec![state.clone()];
    for _ in 1..cfg.slices {
        for _ in 0..sub {
            state = step_wave(&state, dt_w)?;
        }
        window.push(state.clone());
    }
    let e0 = conserved_energy(&initial)?;
    let e1 = conserved_energy(&state)?;
    let energy_drift = if e0 > T::zero() { (e1 - e0).abs() / e0 } else { T::zero() };

    let ladder = HeatLadder { s_min: h * h / T::lit(4.0), s_max: cfg.s_max, rho: cfg.rho };
    let e_infty = rotated_limit_frame(cfg.gauge_angle);
    let slices: Vec<(MapResolution<T>, FrameField<T>)> = window
        .par_iter()
        .map(|w| {
            let WavePosition::Extrinsic(u) = &w.position else { unreachable!("pipeline states are extrinsic") };
            let res = run_heat_resolution(u, ladder, HeatScheme::ExplicitRk4)?;
            let frames = caloric_frames(&res, &e_infty)?;
            Ok((res, frames))
        })
        .collect::<Result<_>>()?;
    let sref = |i: usize| SliceRef { res: &slices[i].0, frames: &slices[i].1 };
    let c = cfg.slices / 2;
    let gd = compute_gauge_data(sref(c), Some(TimeStencil { prev: sref(c - 1), next: sref(c + 1), dt: cfg.dt }))?;
    let mut residuals = verify_reconstruction(&gd)?;
    residuals.merge(verify_structure(&gd)?);
    residuals.merge(dynamic_residuals(&gd)?);

    let spatial: Vec<GaugeData<T>> =
        (0..cfg.slices).into_par_iter().map(|i| compute_gauge_data(sref(i), None)).collect::<Result<_>>()?;
    let s_norm = s_norm_sample(&spatial, cfg.dt)?;

    // Pure-space floor: the s = 0 heat-tension residual of the centre slice,
    // measured without any time information.
    let floor = verify_structure(&spatial[c])?
        .get("heat_tension")
        .and_then(|e| e.per_level.first().map(|&(_, l2, _)| l2))
        .unwrap_or(T::zero());
    let mut norms = NormReport::new();
    norms.insert("S_I", s_norm)?;
    norms.insert("floor", floor)?;
    norms.insert("energy_drift", energy_drift)?;
    norms.insert("du_h1", du_h1_norm(&slices[c].0.states()[0]))?;
    norms.insert("max_a_s", gd.max_a_s())?;
    norms.insert("frame_drift", slices.iter().map(|s| s.1.max_drift()).fold(T::zero(), T::max))?;
    norms.insert("orthonormality_defect", slices.iter().map(|s| s.1.orthonormality_defect()).fold(T::zero(), T::max))?;
    norms.insert("antisymmetry_defect", gd.antisymmetry_defect())?;
    norms.insert("psi_s_consistency", gd.psi_s_consistency())?;
    Ok(PipelineOutput { residuals, norms, gauge: gd })
}

/// Pointwise Euclidean norm of a node-major frame vector field.
fn magnitude<T: Real>(v: &[T], n: usize) -> Vec<T> {
    v.chunks(n).map(|c| c.iter().map(|x| *x * *x).sum::<T>().sqrt()).collect()
}

fn component<T: Real>(v: &[T], n: usize, a: usize) -> Vec<T> {
    v.iter().skip(a).step_by(n).copied().collect()
}

/// Discrete `S(I)` norm of `psi_s` over the slices: at each ladder level
/// `S_s = ||s^{1/2} psi_s||_{L^2_t L^8} + ||s e^{s Delta} d_t psi_s||_{L^2_t L^8}
/// + ||s^{1/2} grad_{t,x} psi_s||_{L^inf_t L^2}`, then the `L^inf + L^2(ds/s)`
/// norm over the ladder. Time derivatives are centered differences at the
/// interior slices; `L^2_t` uses the rectangle rule.
pub fn s_norm_sample<T: Real>(slices: &[GaugeData<T>], dt: T) -> Result<T> {
    if slices.len() < 3 {
        return Err(CaloricError::InvalidConfig("the S(I) sample needs at least three slices".into()));
    }
    let grid = slices[0].grid();
    let n = slices[0].frame_dim();
    let levels = slices[0].s_levels();
    let eight = T::lit(8.0);
    let two_dt = T::lit(2.0) * dt;
    let per_level: Vec<(T, T)> = (1..levels.len())
        .into_par_iter()
        .map(|l| {
            let s = levels[l];
            let psi = |i: usize| &slices[i].levels()[l].psi_s;
            let mut first = T::zero();
            for i in 0..slices.len() {
                let q = lp_norm_values(grid, &magnitude(psi(i), n), eight)?;
                first = first + dt * s * q * q;
            }
            let (mut second, mut third) = (T::zero(), T::zero());
            for i in 1..slices.len() - 1 {
                let dtp: Vec<T> = psi(i + 1).iter().zip(psi(i - 1)).map(|(&a, &b)| (a - b) / two_dt).collect();
                let mut smooth = vec![T::zero(); dtp.len()];
                let mut grad2 = T::zero();
                for a in 0..n {
                    let comp = component(&dtp, n, a);
                    let sm = heat_semigroup_values(grid, &comp, Parity::Even, s);
                    for (k, x) in sm.into_iter().enumerate() {
                        smooth[k * n + a] = x;
                    }
                    let dr = grid.derivative(&component(psi(i), n, a), Parity::Even);
                    grad2 = grad2 + grid.inner(&dr, &dr) + grid.inner(&comp, &comp);
                }
                let q = lp_norm_values(grid, &magnitude(&smooth, n), eight)?;
                second = second + dt * s * s * q * q;
                third = third.max(s * grad2);
            }
            Ok((s, first.sqrt() + second.sqrt() + third.sqrt()))
        })
        .collect::<Result<_>>()?;
    let dsig = slices[0].rho().ln();
    let sup = per_level.iter().fold(T::zero(), |m, &(_, v)| m.max(v));
    let l2 = per_level.iter().map(|&(_, v)| dsig * v * v).sum::<T>().sqrt();
    Ok(sup + l2)
}
