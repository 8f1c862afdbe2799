//! Linear waves and linear heat flow on radial H^d: dispersive decay,
//! Strichartz sampling, heat-semigroup bounds and the heat-flow
//! Littlewood-Paley reconstruction.

use crate::error::{CaloricError, Result};
use crate::geometry::{check_len, lp_norm_values, NormReport, OuterBoundary, Parity, RadialGrid, ScalarField};
use crate::heat_flow::HeatLadder;
use crate::linalg::solve_tridiagonal;
use crate::scalar::Real;
use std::sync::Arc;

/// Radial solution of `v_tt = Delta v` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWaveState<T> {
    grid: Arc<RadialGrid<T>>,
    pub v: ScalarField<T>,
    pub v_t: ScalarField<T>,
    pub time: T,
}

impl<T: Real> LinearWaveState<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, v: ScalarField<T>, v_t: ScalarField<T>) -> Result<Self> {
        check_len(&grid, v.len())?;
        check_len(&grid, v_t.len())?;
        if v.parity != v_t.parity {
            return Err(CaloricError::InvalidConfig("position and velocity parities differ".into()));
        }
        Ok(Self { grid, v, v_t, time: T::zero() })
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    /// `1/2 (||v_t||^2 + ||grad v||^2)` with the discrete Dirichlet form.
    pub fn energy(&self) -> T {
        linear_energy(&self.grid, &self.v.values, &self.v_t.values, self.v.parity)
    }
}

fn linear_energy<T: Real>(grid: &RadialGrid<T>, v: &[T], v_t: &[T], parity: Parity) -> T {
    T::lit(0.5) * (grid.inner(v_t, v_t) + grid.dirichlet_form(v, parity))
}

/// Samples of a linear wave at uniformly spaced times.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTrajectory<T> {
    grid: Arc<RadialGrid<T>>,
    parity: Parity,
    times: Vec<T>,
    v: Vec<Vec<T>>,
    v_t: Vec<Vec<T>>,
}

impl<T: Real> LinearTrajectory<T> {
    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }
    pub fn parity(&self) -> Parity {
        self.parity
    }
    pub fn times(&self) -> &[T] {
        &self.times
    }
    pub fn positions(&self) -> &[Vec<T>] {
        &self.v
    }
    pub fn velocities(&self) -> &[Vec<T>] {
        &self.v_t
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn energy(&self, i: usize) -> T {
        linear_energy(&self.grid, &self.v[i], &self.v_t[i], self.parity)
    }
}

/// Splits `[0, t_end]` into `samples` equal intervals of whole steps no
/// longer than `dt`.
pub(crate) fn schedule<T: Real>(t_end: T, dt: T, samples: usize) -> Result<(usize, T)> {
    if !(t_end > T::zero()) || !(dt > T::zero()) || samples == 0 {
        return Err(CaloricError::InvalidConfig("evolution needs t_end > 0, dt > 0 and at least one sample".into()));
    }
    let per = (t_end / (dt * T::of(samples))).ceil().to_usize().unwrap_or(1).max(1);
    Ok((per, t_end / T::of(per * samples)))
}

fn check_cfl<T: Real>(grid: &RadialGrid<T>, dt: T) -> Result<()> {
    let limit = T::lit(0.5) * grid.h();
    if dt > limit * T::lit(1.0 + 1e-12) {
        return Err(CaloricError::StabilityRefused { step: dt.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    Ok(())
}

/// Kick-drift-kick leapfrog for `x_tt = accel(x)`, sampling every `per` steps.
fn leapfrog<T: Real>(
    x0: &[T],
    v0: &[T],
    dt: T,
    per: usize,
    samples: usize,
    accel: impl Fn(&[T]) -> Vec<T>,
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    let half = T::lit(0.5) * dt;
    let (mut x, mut v) = (x0.to_vec(), v0.to_vec());
    let mut a = accel(&x);
    let (mut xs, mut vs) = (vec![x.clone()], vec![v.clone()]);
    for step in 1..=per * samples {
        for i in 0..x.len() {
            v[i] = v[i] + half * a[i];
            x[i] = x[i] + dt * v[i];
        }
        a = accel(&x);
        for i in 0..x.len() {
            v[i] = v[i] + half * a[i];
        }
        if step % per == 0 {
            if x.iter().any(|z| !z.is_finite()) {
                return Err(CaloricError::WaveDivergence { t: (dt * T::of(step)).to_f64_lossy(), step });
            }
            xs.push(x.clone());
            vs.push(v.clone());
        }
    }
    Ok((xs, vs))
}

/// Leapfrog solution of `v_tt = Delta v` with `v` held at `r_max`. The time
/// step is shortened so `samples` intervals of whole steps cover `t_end`.
pub fn solve_linear_wave<T: Real>(data: &LinearWaveState<T>, t_end: T, dt: T, samples: usize) -> Result<LinearTrajectory<T>> {
    check_cfl(&data.grid, dt)?;
    let (per, dt) = schedule(t_end, dt, samples)?;
    let grid = data.grid.clone();
    let parity = data.v.parity;
    let n = grid.len();
    let (v, v_t) = leapfrog(&data.v.values, &data.v_t.values, dt, per, samples, |x| {
        let mut out = vec![T::zero(); n];
        grid.laplacian_into(x, parity, OuterBoundary::Held, &mut out);
        out
    })?;
    let times = (0..=samples).map(|i| data.time + t_end * T::of(i) / T::of(samples)).collect();
    Ok(LinearTrajectory { grid, parity, times, v, v_t })
}

/// Solution on H^3 through `w = sinh(r) v`, which solves the flat
/// Klein-Gordon equation `w_tt = w_rr - w` on the half line with `w(0) = 0`.
pub fn solve_linear_wave_kg<T: Real>(data: &LinearWaveState<T>, t_end: T, dt: T, samples: usize) -> Result<LinearTrajectory<T>> {
    if data.grid.dim() != 3 {
        return Err(CaloricError::UnsupportedDimension(data.grid.dim()));
    }
    if data.v.parity != Parity::Even {
        return Err(CaloricError::InvalidConfig("the Klein-Gordon reduction applies to radial (even) data".into()));
    }
    check_cfl(&data.grid, dt)?;
    let (per, dt) = schedule(t_end, dt, samples)?;
    let grid = data.grid.clone();
    let n = grid.len();
    let sinh: Vec<T> = grid.nodes().iter().map(|r| r.sinh()).collect();
    let w0: Vec<T> = data.v.values.iter().zip(&sinh).map(|(&v, &s)| v * s).collect();
    let w1: Vec<T> = data.v_t.values.iter().zip(&sinh).map(|(&v, &s)| v * s).collect();
    let h2 = grid.h() * grid.h();
    let two = T::lit(2.0);
    let (ws, wts) = leapfrog(&w0, &w1, dt, per, samples, |w| {
        let mut out = vec![T::zero(); n];
        for k in 0..n - 1 {
            let prev = if k == 0 { T::zero() } else { w[k - 1] };
            out[k] = (w[k + 1] - two * w[k] + prev) / h2 - w[k];
        }
        out
    })?;
    let back = |w: Vec<T>| -> Vec<T> { w.iter().zip(&sinh).map(|(&x, &s)| x / s).collect() };
    let times = (0..=samples).map(|i| data.time + t_end * T::of(i) / T::of(samples)).collect();
    Ok(LinearTrajectory {
        grid,
        parity: Parity::Even,
        times,
        v: ws.into_iter().map(back).collect(),
        v_t: wts.into_iter().map(back).collect(),
    })
}

/// Least-squares slope of `log ||v(t)||_{L^q}` against `log t` over the
/// samples with `t >= t_min`.
pub fn dispersive_fit<T: Real>(traj: &LinearTrajectory<T>, q: T, t_min: T) -> Result<T> {
    if !(q > T::lit(2.0)) || q.is_infinite() {
        return Err(CaloricError::InvalidParameter {
            name: "q".into(),
            reason: "the decay exponent is fitted for 2 < q < inf".into(),
        });
    }
    let t_end = *traj.times.last().ok_or_else(|| CaloricError::TooShort("empty trajectory".into()))?;
    if t_end < T::lit(30.0) {
        return Err(CaloricError::TooShort(format!("trajectory ends at t = {t_end}, the fit needs t >= 30")));
    }
    let mut pts = Vec::new();
    for (i, &t) in traj.times.iter().enumerate() {
        if t >= t_min {
            let norm = lp_norm_values(&traj.grid, &traj.v[i], q)?;
            if !(norm > T::zero()) {
                return Err(CaloricError::DegenerateDivision("zero solution has no decay exponent".into()));
            }
            pts.push((t.ln(), norm.ln()));
        }
    }
    least_squares_slope(&pts).ok_or_else(|| CaloricError::TooShort("fewer than two samples in the fit window".into()))
}

pub(crate) fn least_squares_slope<T: Real>(pts: &[(T, T)]) -> Option<T> {
    if pts.len() < 2 {
        return None;
    }
    let n = T::of(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > T::zero() {
        Some(sxy / sxx)
    } else {
        None
    }
}

/// Strichartz exponents `(p, q, gamma)`; `p` or `q` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleTriple {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
}

impl AdmissibleTriple {
    pub fn new(p: f64, q: f64, gamma: f64) -> Self {
        Self { p, q, gamma }
    }

    /// Checks the scaling relation, the admissibility inequality, the ranges
    /// `p, q >= 2` and the `d = 3` endpoint exclusion.
    pub fn check(&self, d: usize) -> Result<()> {
        let fail = |relation: String| Err(CaloricError::Admissibility { relation });
        if self.p.is_nan() || self.q.is_nan() || !self.gamma.is_finite() {
            return fail("exponents must be numbers".into());
        }
        if self.p < 2.0 {
            return fail(format!("p = {} must be at least 2", self.p));
        }
        if self.q < 2.0 {
            return fail(format!("q = {} must be at least 2", self.q));
        }
        let df = d as f64;
        let (ip, iq) = (1.0 / self.p, 1.0 / self.q);
        let scaling = ip + df * iq - (df / 2.0 - self.gamma);
        if scaling.abs() > 1e-12 {
            return fail(format!("scaling 1/p + d/q = d/2 - gamma fails by {scaling:e}"));
        }
        if ip + (df - 1.0) * iq / 2.0 > (df - 1.0) / 4.0 + 1e-12 {
            return fail("1/p + (d-1)/(2q) <= (d-1)/4 fails".into());
        }
        if d == 3 && self.p == 2.0 && self.q.is_infinite() && self.gamma == 1.0 {
            return fail("(2, inf, 1) is excluded in d = 3".into());
        }
        Ok(())
    }
}

/// `||grad_{t,x} v||_{L^p_t W^{-gamma,q}} / ||(v_0, v_1)||`, with `W^{-gamma,q}`
/// realized as the `L^q` norm after heat smoothing to time `gamma * s0`, and
/// the data measured in the energy norm `(||grad v_0||^2 + ||v_1||^2)^{1/2}`.
/// For `q = 2` the spatial gradient uses the discrete Dirichlet form, so the
/// `(inf, 2, 0)` ratio is exactly the energy ratio.
pub fn strichartz_sample<T: Real>(traj: &LinearTrajectory<T>, triple: AdmissibleTriple, s0: T) -> Result<T> {
    let grid = &*traj.grid;
    triple.check(grid.dim())?;
    if traj.len() < 2 {
        return Err(CaloricError::TooShort("Strichartz sampling needs at least two samples".into()));
    }
    let data = (T::lit(2.0) * traj.energy(0)).sqrt();
    if !(data > T::zero()) {
        return Err(CaloricError::DegenerateDivision("zero data has no Strichartz ratio".into()));
    }
    let s = T::lit(triple.gamma) * s0;
    let q = T::lit(triple.q);
    let mut norms = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let (v, v_t) = if s > T::zero() {
            (heat_semigroup_values(grid, &traj.v[i], traj.parity, s), heat_semigroup_values(grid, &traj.v_t[i], traj.parity, s))
        } else {
            (traj.v[i].clone(), traj.v_t[i].clone())
        };
        let norm = if triple.q == 2.0 {
            (grid.inner(&v_t, &v_t) + grid.dirichlet_form(&v, traj.parity)).sqrt()
        } else {
            let dv = grid.derivative(&v, traj.parity);
            let mag: Vec<T> = dv.iter().zip(&v_t).map(|(&a, &b)| (a * a + b * b).sqrt()).collect();
            lp_norm_values(grid, &mag, q)?
        };
        norms.push(norm);
    }
    let time_norm = if triple.p.is_infinite() {
        norms.iter().fold(T::zero(), |m, &x| m.max(x))
    } else {
        let p = T::lit(triple.p);
        let dt = traj.times[1] - traj.times[0];
        let last = norms.len() - 1;
        let sum: T =
            norms.iter().enumerate().map(|(i, &x)| if i == 0 || i == last { T::lit(0.5) * x.powf(p) } else { x.powf(p) }).sum();
        (sum * dt).powf(p.recip())
    };
    Ok(time_norm / data)
}

const HEAT_STEP: f64 = 0.002;
const HEAT_MAX_STEPS: usize = 20_000;
const RANNACHER_HALF_STEPS: usize = 4;

/// `(I - theta ds L) x = (I + (1 - theta) ds L) b` on a held-boundary grid.
fn theta_step<T: Real>(grid: &RadialGrid<T>, f: &mut [T], parity: Parity, ds: T, theta: T) {
    let n = grid.len();
    let explicit = T::one() - theta;
    let mut rhs = f.to_vec();
    if explicit > T::zero() {
        let mut lf = vec![T::zero(); n];
        grid.laplacian_into(f, parity, OuterBoundary::Held, &mut lf);
        for k in 0..n {
            rhs[k] = rhs[k] + explicit * ds * lf[k];
        }
    }
    let (mut a, mut b, mut c) = (vec![T::zero(); n], vec![T::one(); n], vec![T::zero(); n]);
    for k in 0..n - 1 {
        let (lo, di, up) = grid.laplacian_row(k, parity);
        a[k] = -theta * ds * lo;
        b[k] = T::one() - theta * ds * di;
        c[k] = -theta * ds * up;
    }
    solve_tridiagonal(&a, &b, &c, &mut rhs);
    f.copy_from_slice(&rhs);
}

/// Advances `f` by heat time `s` with Crank-Nicolson, started by backward
/// Euler half steps to damp the stiff modes.
pub(crate) fn heat_advance<T: Real>(grid: &RadialGrid<T>, f: &mut [T], parity: Parity, s: T) {
    heat_continue(grid, f, parity, s, true);
}

/// As [`heat_advance`]; `start = false` skips the damping start when `f` is
/// already the output of an earlier advance.
fn heat_continue<T: Real>(grid: &RadialGrid<T>, f: &mut [T], parity: Parity, s: T, start: bool) {
    if !(s > T::zero()) {
        return;
    }
    let half = T::lit(0.5);
    if !start {
        let steps = (s / T::lit(HEAT_STEP)).ceil().to_usize().unwrap_or(HEAT_MAX_STEPS).clamp(1, HEAT_MAX_STEPS);
        let ds = s / T::of(steps);
        for _ in 0..steps {
            theta_step(grid, f, parity, ds, half);
        }
        return;
    }
    let steps = (s / T::lit(HEAT_STEP)).ceil().to_usize().unwrap_or(HEAT_MAX_STEPS).clamp(8, HEAT_MAX_STEPS);
    let ds = s / T::of(steps);
    for _ in 0..RANNACHER_HALF_STEPS {
        theta_step(grid, f, parity, half * ds, T::one());
    }
    for _ in RANNACHER_HALF_STEPS / 2..steps {
        theta_step(grid, f, parity, ds, half);
    }
}

pub(crate) fn heat_semigroup_values<T: Real>(grid: &RadialGrid<T>, f: &[T], parity: Parity, s: T) -> Vec<T> {
    let mut out = f.to_vec();
    heat_advance(grid, &mut out, parity, s);
    out
}

/// `e^{s Delta} f` with the value at `r_max` held fixed.
pub fn heat_semigroup<T: Real>(grid: &RadialGrid<T>, f: &ScalarField<T>, s: T) -> Result<ScalarField<T>> {
    check_len(grid, f.len())?;
    if s < T::zero() || !s.is_finite() {
        return Err(CaloricError::InvalidParameter {
            name: "s".into(),
            reason: "heat time must be finite and nonnegative".into(),
        });
    }
    Ok(ScalarField::new(heat_semigroup_values(grid, &f.values, f.parity, s), f.parity))
}

fn exponent_label<T: Real>(p: T) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if p == p.round() {
        format!("{}", p.to_f64_lossy() as i64)
    } else {
        format!("{}", p.to_f64_lossy())
    }
}

/// Sup over `s` of `||s^{1/2} grad e^{s Delta} f||_p / ||f||_p` (`grad_L{p}`)
/// and `||s Delta e^{s Delta} f||_p / ||f||_p` (`lap_L{p}`).
pub fn semigroup_bound_sweep<T: Real>(grid: &RadialGrid<T>, f: &ScalarField<T>, ps: &[T], s_grid: &[T]) -> Result<NormReport<T>> {
    check_len(grid, f.len())?;
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || s_grid.first().is_some_and(|&s| !(s > T::zero())) {
        return Err(CaloricError::InvalidConfig("s grid must be positive and strictly increasing".into()));
    }
    let base: Vec<T> = ps.iter().map(|&p| lp_norm_values(grid, &f.values, p)).collect::<Result<_>>()?;
    let mut grad_sup = vec![T::zero(); ps.len()];
    let mut lap_sup = vec![T::zero(); ps.len()];
    let mut g = f.values.clone();
    let mut s_prev = T::zero();
    let mut lap = vec![T::zero(); grid.len()];
    for (j, &s) in s_grid.iter().enumerate() {
        heat_continue(grid, &mut g, f.parity, s - s_prev, j == 0);
        s_prev = s;
        let dg: Vec<T> = grid.derivative(&g, f.parity).into_iter().map(|x| x * s.sqrt()).collect();
        grid.laplacian_into(&g, f.parity, OuterBoundary::Held, &mut lap);
        let sl: Vec<T> = lap.iter().map(|&x| x * s).collect();
        for (i, &p) in ps.iter().enumerate() {
            if base[i] > T::zero() {
                grad_sup[i] = grad_sup[i].max(lp_norm_values(grid, &dg, p)? / base[i]);
                lap_sup[i] = lap_sup[i].max(lp_norm_values(grid, &sl, p)? / base[i]);
            }
        }
    }
    let mut report = NormReport::new();
    for (i, &p) in ps.iter().enumerate() {
        report.insert(format!("grad_L{}", exponent_label(p)), grad_sup[i])?;
        report.insert(format!("lap_L{}", exponent_label(p)), lap_sup[i])?;
    }
    Ok(report)
}

/// Relative L^2 residual of the heat-flow Littlewood-Paley reconstruction
/// `f = int_0^inf ((-1)^k / (k-1)!) s^k Delta^k e^{s Delta} f ds/s` for
/// `k = 1, 2`. The ladder integral uses the trapezoid rule in `log s`; the
/// piece below `s_min` is integrated in closed form.
pub fn lp_reconstruction<T: Real>(grid: &RadialGrid<T>, f: &ScalarField<T>, ladder: HeatLadder<T>, k: usize) -> Result<T> {
    check_len(grid, f.len())?;
    if !(1..=2).contains(&k) {
        return Err(CaloricError::UnsupportedOrder(k));
    }
    let norm = grid.inner(&f.values, &f.values).sqrt();
    if !(norm > T::zero()) {
        return Ok(T::zero());
    }
    let levels = ladder.levels();
    if levels.len() < 2 || !(ladder.rho > T::one()) {
        return Err(CaloricError::InsufficientLadder("the ladder needs at least two levels and rho > 1".into()));
    }
    let n = grid.len();
    let parity = f.parity;
    let lap_k = |g: &[T]| -> Vec<T> {
        let mut out = g.to_vec();
        for _ in 0..k {
            out = lap_k_once(grid, &out, parity);
        }
        out
    };
    let sign = if k == 1 { -T::one() } else { T::one() };
    let dsig = ladder.rho.ln();
    let last = levels.len() - 1;
    let mut g = f.values.clone();
    let mut recon = vec![T::zero(); n];
    let mut s_prev = T::zero();
    for (j, &s) in levels.iter().enumerate() {
        heat_continue(grid, &mut g, parity, s - s_prev, j == 0);
        s_prev = s;
        if j == 0 {
            // Closed form of the integral over [0, s_min]:
            // k = 1 gives f - g, k = 2 gives f - g + s_min Delta g.
            let lg = lap_k_once(grid, &g, parity);
            for i in 0..n {
                recon[i] = f.values[i] - g[i];
                if k == 2 {
                    recon[i] = recon[i] + s * lg[i];
                }
            }
        }
        let weight = if j == 0 || j == last { T::lit(0.5) } else { T::one() };
        let c = sign * weight * dsig * s.powi(k as i32);
        for (r, x) in recon.iter_mut().zip(lap_k(&g)) {
            *r = *r + c * x;
        }
    }
    let tail = grid.inner(&g, &g).sqrt() / norm;
    if tail > T::lit(1e-6) {
        return Err(CaloricError::InsufficientLadder(format!(
            "e^(s_max Delta) f still carries {} of the norm",
            tail.to_f64_lossy()
        )));
    }
    let diff: Vec<T> = f.values.iter().zip(&recon).map(|(&a, &b)| a - b).collect();
    Ok(grid.inner(&diff, &diff).sqrt() / norm)
}

fn lap_k_once<T: Real>(grid: &RadialGrid<T>, g: &[T], parity: Parity) -> Vec<T> {
    let mut out = vec![T::zero(); g.len()];
    grid.laplacian_into(g, parity, OuterBoundary::Held, &mut out);
    out
}
