//! Harmonic map heat flow, extrinsic (sphere target) and equivariant.
//!
//! The extrinsic flow is `d_s u = P_u(Delta u) = Delta u + |grad u|^2 u`
//! with `|grad u|^2 := -<Delta_h u, u>` evaluated from the discrete
//! Laplacian, which makes the discrete tension exactly tangent and the
//! semi-discrete flow exactly dissipative for the discrete Dirichlet energy.

use crate::error::{CaloricError, Result};
use crate::geometry::{check_len, NormReport, OuterBoundary, Parity, RadialGrid, ScalarField};
use crate::linalg::solve_tridiagonal;
use crate::scalar::Real;
use crate::targets::{equivariant_tension, project_to_sphere, PolarTarget};
use num_traits::{Float, One, ToPrimitive, Zero};
use std::sync::Arc;

/// Symmetry class of an extrinsic sphere-valued map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapSymmetry {
    /// `u(x) = u(r)`: every ambient component is even.
    Radial,
    /// 1-equivariant `u(r, theta) = R_theta u(r)` into `S^2`, with `R_theta`
    /// the rotation about the third axis. The stored values are the
    /// `theta = 0` slice; the first two components are odd, the third even.
    Equivariant,
}

/// Sphere-valued map sampled on a radial grid, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrinsicMapState<T> {
    grid: Arc<RadialGrid<T>>,
    symmetry: MapSymmetry,
    ambient: usize,
    values: Vec<T>,
    u_infty: Vec<T>,
}

impl<T: Real> ExtrinsicMapState<T> {
    /// Builds a state from per-node ambient vectors. Each vector is projected
    /// to the sphere and the last node is pinned to `u_infty`.
    pub fn new(grid: Arc<RadialGrid<T>>, nodes: &[Vec<T>], u_infty: &[T], symmetry: MapSymmetry) -> Result<Self> {
        check_len(&grid, nodes.len())?;
        let m = u_infty.len();
        if m < 2 {
            return Err(CaloricError::InvalidParameter {
                name: "u_infty".into(),
                reason: "ambient dimension must be at least 2".into(),
            });
        }
        if symmetry == MapSymmetry::Equivariant && m != 3 {
            return Err(CaloricError::InvalidParameter {
                name: "symmetry".into(),
                reason: "equivariant maps take values in S^2".into(),
            });
        }
        let u_infty = project_to_sphere(u_infty)?;
        let n = grid.len();
        let mut values = vec![T::zero(); m * n];
        for (k, v) in nodes.iter().enumerate() {
            if v.len() != m {
                return Err(CaloricError::ShapeMismatch { expected: m, found: v.len() });
            }
            let p = if k == n - 1 { u_infty.clone() } else { project_to_sphere(v)? };
            for c in 0..m {
                values[c * n + k] = p[c];
            }
        }
        Ok(Self { grid, symmetry, ambient: m, values, u_infty })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: Arc<RadialGrid<T>>, u_infty: &[T], symmetry: MapSymmetry, f: impl Fn(T) -> Vec<T>) -> Result<Self> {
        let nodes: Vec<Vec<T>> = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, &nodes, u_infty, symmetry)
    }

    pub fn constant(grid: Arc<RadialGrid<T>>, u_infty: &[T]) -> Result<Self> {
        let u = u_infty.to_vec();
        Self::from_fn(grid, u_infty, MapSymmetry::Radial, move |_| u.clone())
    }

    /// Equivariant map with polar angle `psi` measured from the third axis:
    /// `u = (sin psi, 0, cos psi)` on the `theta = 0` slice.
    pub fn from_polar_angle(grid: Arc<RadialGrid<T>>, psi: &[T]) -> Result<Self> {
        check_len(&grid, psi.len())?;
        let nodes: Vec<Vec<T>> = psi.iter().map(|&p| vec![p.sin(), T::zero(), p.cos()]).collect();
        let last = psi[psi.len() - 1];
        Self::new(grid, &nodes, &[last.sin(), T::zero(), last.cos()], MapSymmetry::Equivariant)
    }

    pub(crate) fn from_raw(grid: Arc<RadialGrid<T>>, symmetry: MapSymmetry, values: Vec<T>, u_infty: Vec<T>) -> Self {
        let ambient = u_infty.len();
        Self { grid, symmetry, ambient, values, u_infty }
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }
    pub fn symmetry(&self) -> MapSymmetry {
        self.symmetry
    }
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }
    pub fn u_infty(&self) -> &[T] {
        &self.u_infty
    }
    /// Component-major values: component `c` occupies `c*N..(c+1)*N`.
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn component(&self, c: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }
    /// Ambient vector at node `k`.
    pub fn node(&self, k: usize) -> Vec<T> {
        let n = self.grid.len();
        (0..self.ambient).map(|c| self.values[c * n + k]).collect()
    }

    pub fn parity(&self, c: usize) -> Parity {
        component_parity(self.symmetry, c)
    }

    /// Discrete Dirichlet energy `1/2 int |grad u|^2`.
    pub fn dirichlet_energy(&self) -> T {
        HeatFlowState::dirichlet_energy(self)
    }
}

fn component_parity(symmetry: MapSymmetry, c: usize) -> Parity {
    match (symmetry, c) {
        (MapSymmetry::Equivariant, 0 | 1) => Parity::Odd,
        _ => Parity::Even,
    }
}

/// Applies the (vector) Laplacian with the angular term of the symmetry.
pub(crate) fn vector_laplacian<T: Real>(
    grid: &RadialGrid<T>,
    symmetry: MapSymmetry,
    m: usize,
    values: &[T],
    boundary: OuterBoundary,
) -> Vec<T> {
    let n = grid.len();
    let mut out = vec![T::zero(); m * n];
    for c in 0..m {
        let parity = component_parity(symmetry, c);
        grid.laplacian_into(&values[c * n..(c + 1) * n], parity, boundary, &mut out[c * n..(c + 1) * n]);
        if symmetry == MapSymmetry::Equivariant && c < 2 {
            let stop = if boundary == OuterBoundary::Held { n - 1 } else { n };
            for k in 0..stop {
                out[c * n + k] = out[c * n + k] - values[c * n + k] * grid.inv_sinh2()[k];
            }
        }
    }
    out
}

/// Tangential projection `P_u(L u) = L u - <L u, u> u`, node by node.
pub(crate) fn extrinsic_tension<T: Real>(grid: &RadialGrid<T>, symmetry: MapSymmetry, m: usize, values: &[T]) -> Vec<T> {
    let n = grid.len();
    let mut lap = vector_laplacian(grid, symmetry, m, values, OuterBoundary::Held);
    for k in 0..n {
        let proj: T = (0..m).map(|c| lap[c * n + k] * values[c * n + k]).sum();
        for c in 0..m {
            lap[c * n + k] = lap[c * n + k] - proj * values[c * n + k];
        }
    }
    lap
}

/// Polar angle profile of a 1-equivariant map into a polar target.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantProfile<T> {
    grid: Arc<RadialGrid<T>>,
    pub psi: ScalarField<T>,
    pub target: PolarTarget,
}

impl<T: Real> EquivariantProfile<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, psi: Vec<T>, target: PolarTarget) -> Result<Self> {
        check_len(&grid, psi.len())?;
        Ok(Self { grid, psi: ScalarField::new(psi, Parity::Odd), target })
    }

    pub fn from_fn(grid: Arc<RadialGrid<T>>, target: PolarTarget, f: impl Fn(T) -> T) -> Result<Self> {
        let psi = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, psi, target)
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }
    /// Far-field angle, held fixed at `r_max`.
    pub fn psi_infty(&self) -> T {
        self.psi.values[self.psi.len() - 1]
    }
}

/// State that can be evolved by the heat-flow integrators.
pub trait HeatFlowState: Clone + Send + Sync {
    type Scalar: Real;

    fn grid(&self) -> &RadialGrid<Self::Scalar>;
    fn components(&self) -> usize;
    fn component_parity(&self, c: usize) -> Parity;
    /// Whether the linear part of component `c` carries `-1/sinh^2 r`.
    fn angular_potential(&self, c: usize) -> bool;
    fn values(&self) -> &[Self::Scalar];
    fn values_mut(&mut self) -> &mut [Self::Scalar];
    /// Heat tension for the given values (zero on the held node).
    fn rate_of(&self, values: &[Self::Scalar]) -> Vec<Self::Scalar>;
    /// Re-imposes the constraint after a step.
    fn constrain(&mut self) -> Result<()>;

    fn rate(&self) -> Vec<Self::Scalar> {
        self.rate_of(self.values())
    }

    /// Linear part of the operator applied to `values`.
    fn linear_of(&self, values: &[Self::Scalar]) -> Vec<Self::Scalar> {
        let grid = self.grid();
        let n = grid.len();
        let mut out = vec![Self::Scalar::zero(); values.len()];
        for c in 0..self.components() {
            let seg = c * n..(c + 1) * n;
            grid.laplacian_into(&values[seg.clone()], self.component_parity(c), OuterBoundary::Held, &mut out[seg]);
            if self.angular_potential(c) {
                for k in 0..n - 1 {
                    out[c * n + k] = out[c * n + k] - values[c * n + k] * grid.inv_sinh2()[k];
                }
            }
        }
        out
    }

    /// Discrete Dirichlet energy, consistent with the linear operator.
    fn dirichlet_energy(&self) -> Self::Scalar {
        let grid = self.grid();
        let n = grid.len();
        let v = self.values();
        let mut e = Self::Scalar::zero();
        for c in 0..self.components() {
            let f = &v[c * n..(c + 1) * n];
            e = e + grid.dirichlet_form(f, self.component_parity(c));
            if self.angular_potential(c) {
                e = e + (0..n).map(|k| grid.weights()[k] * f[k] * f[k] * grid.inv_sinh2()[k]).sum::<Self::Scalar>();
            }
        }
        e * Self::Scalar::lit(0.5) + self.extra_energy()
    }

    /// Energy not captured by the linear part (equivariant nonlinearity).
    fn extra_energy(&self) -> Self::Scalar {
        Self::Scalar::zero()
    }
}

impl<T: Real> HeatFlowState for ExtrinsicMapState<T> {
    type Scalar = T;

    fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }
    fn components(&self) -> usize {
        self.ambient
    }
    fn component_parity(&self, c: usize) -> Parity {
        component_parity(self.symmetry, c)
    }
    fn angular_potential(&self, c: usize) -> bool {
        self.symmetry == MapSymmetry::Equivariant && c < 2
    }
    fn values(&self) -> &[T] {
        &self.values
    }
    fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    fn rate_of(&self, values: &[T]) -> Vec<T> {
        extrinsic_tension(&self.grid, self.symmetry, self.ambient, values)
    }
    fn constrain(&mut self) -> Result<()> {
        normalize_nodes(&mut self.values, self.ambient, self.grid.len())
    }
}

pub(crate) fn normalize_nodes<T: Real>(values: &mut [T], m: usize, n: usize) -> Result<()> {
    for k in 0..n {
        let len = (0..m).map(|c| values[c * n + k].powi(2)).sum::<T>().sqrt();
        if !(len > T::zero()) || !len.is_finite() {
            return Err(CaloricError::DegenerateProjection);
        }
        for c in 0..m {
            values[c * n + k] = values[c * n + k] / len;
        }
    }
    Ok(())
}

impl<T: Real> HeatFlowState for EquivariantProfile<T> {
    type Scalar = T;

    fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }
    fn components(&self) -> usize {
        1
    }
    fn component_parity(&self, _: usize) -> Parity {
        Parity::Odd
    }
    fn angular_potential(&self, _: usize) -> bool {
        true
    }
    fn values(&self) -> &[T] {
        &self.psi.values
    }
    fn values_mut(&mut self) -> &mut [T] {
        &mut self.psi.values
    }
    fn rate_of(&self, values: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); values.len()];
        equivariant_tension(&self.grid, values, self.target, OuterBoundary::Held, &mut out);
        out
    }
    fn constrain(&mut self) -> Result<()> {
        Ok(())
    }
    fn extra_energy(&self) -> T {
        // Replace the quadratic angular energy psi^2 by g(psi)^2.
        let g = &self.grid;
        let half = T::lit(0.5);
        self.psi
            .values
            .iter()
            .enumerate()
            .map(|(k, &p)| half * g.weights()[k] * (self.target.g(p).powi(2) - p * p) * g.inv_sinh2()[k])
            .sum()
    }
}

/// Heat tension `Delta u + |grad u|^2 u` of an extrinsic state.
pub fn heat_rhs_extrinsic<T: Real>(state: &ExtrinsicMapState<T>) -> Vec<T> {
    state.rate()
}

/// Heat tension `Delta psi - g g'(psi) / sinh^2 r` of an equivariant profile.
pub fn heat_rhs_equivariant<T: Real>(p: &EquivariantProfile<T>) -> ScalarField<T> {
    ScalarField::new(p.rate(), Parity::Odd)
}

/// Time integrator for the heat flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeatScheme {
    /// Classical RK4, stable for `ds <= 0.5 h^2`.
    ExplicitRk4,
    /// Backward Euler on the linear part, explicit nonlinearity. No step limit.
    Imex,
}

impl HeatScheme {
    /// Largest step accepted for grid spacing `h`.
    pub fn step_limit<T: Real>(self, h: T) -> T {
        match self {
            HeatScheme::ExplicitRk4 => T::lit(0.5) * h * h,
            HeatScheme::Imex => T::infinity(),
        }
    }

    /// Substep used when filling a heat ladder.
    pub fn default_substep<T: Real>(self, h: T) -> T {
        match self {
            HeatScheme::ExplicitRk4 => T::lit(0.5) * h * h,
            HeatScheme::Imex => T::lit(0.5) * h * h,
        }
    }
}

/// One classical RK4 step for `y' = rate(y)`.
pub(crate) fn rk4_values<T: Real>(y: &[T], ds: T, rate: impl Fn(&[T]) -> Vec<T>) -> Vec<T> {
    let half = T::lit(0.5);
    let axpy = |k: &[T], a: T| -> Vec<T> { y.iter().zip(k).map(|(&yi, &ki)| yi + a * ki).collect() };
    let k1 = rate(y);
    let k2 = rate(&axpy(&k1, half * ds));
    let k3 = rate(&axpy(&k2, half * ds));
    let k4 = rate(&axpy(&k3, ds));
    let sixth = ds / T::lit(6.0);
    let two = T::lit(2.0);
    (0..y.len()).map(|i| y[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect()
}

fn imex_values<S: HeatFlowState>(state: &S, ds: S::Scalar) -> Vec<S::Scalar> {
    let grid = state.grid();
    let n = grid.len();
    let v = state.values();
    let rate = state.rate();
    let lin = state.linear_of(v);
    let mut out = vec![S::Scalar::zero(); v.len()];
    let (mut a, mut b, mut c) = (vec![S::Scalar::zero(); n], vec![S::Scalar::zero(); n], vec![S::Scalar::zero(); n]);
    for comp in 0..state.components() {
        let parity = state.component_parity(comp);
        for k in 0..n - 1 {
            let (l, d, u) = grid.laplacian_row(k, parity);
            let pot = if state.angular_potential(comp) { grid.inv_sinh2()[k] } else { S::Scalar::zero() };
            a[k] = -ds * l;
            b[k] = S::Scalar::one() - ds * (d - pot);
            c[k] = -ds * u;
        }
        a[n - 1] = S::Scalar::zero();
        b[n - 1] = S::Scalar::one();
        c[n - 1] = S::Scalar::zero();
        let seg = comp * n..(comp + 1) * n;
        let rhs = &mut out[seg.clone()];
        for k in 0..n {
            let i = comp * n + k;
            // nonlinear part = rate - linear
            rhs[k] = v[i] + ds * (rate[i] - lin[i]);
        }
        solve_tridiagonal(&a, &b, &c, rhs);
    }
    out
}

/// One heat step followed by the constraint projection.
pub fn step_heat<S: HeatFlowState>(state: &S, ds: S::Scalar, scheme: HeatScheme) -> Result<S> {
    let h = state.grid().h();
    let limit = scheme.step_limit(h);
    if !(ds > S::Scalar::zero()) || ds > limit {
        return Err(CaloricError::StabilityRefused { step: ds.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    let mut next = state.clone();
    advance(&mut next, ds, scheme)?;
    if next.values().iter().any(|x| !x.is_finite()) {
        return Err(CaloricError::Divergence { s: ds.to_f64_lossy(), last_good_level: 0 });
    }
    Ok(next)
}

fn advance<S: HeatFlowState>(state: &mut S, ds: S::Scalar, scheme: HeatScheme) -> Result<()> {
    let new = match scheme {
        HeatScheme::ExplicitRk4 => rk4_values(state.values(), ds, |y| state.rate_of(y)),
        HeatScheme::Imex => imex_values(state, ds),
    };
    state.values_mut().copy_from_slice(&new);
    state.constrain()
}

/// Geometric heat-time ladder parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatLadder<T> {
    pub s_min: T,
    pub s_max: T,
    pub rho: T,
}

impl<T: Real> HeatLadder<T> {
    /// `s_min = h^2/4`, `rho = 2^{1/4}`, `s_max = 100`.
    pub fn for_grid(grid: &RadialGrid<T>) -> Self {
        Self { s_min: grid.h() * grid.h() / T::lit(4.0), s_max: T::lit(100.0), rho: T::lit(2f64.powf(0.25)) }
    }

    /// Ladder levels `s_min rho^k`, `k = 0..=K`, with `s_K >= s_max`.
    pub fn levels(&self) -> Vec<T> {
        let k_max = ((self.s_max / self.s_min).ln() / self.rho.ln()).ceil().to_usize().unwrap_or(0);
        (0..=k_max).map(|k| self.s_min * self.rho.powi(k as i32)).collect()
    }
}

/// Heat flow sampled on `[0, s_min, s_min rho, ...]`. Level 0 is the
/// initial map itself (`s = 0`); levels `1..` form the geometric ladder.
#[derive(Debug, Clone)]
pub struct HeatResolution<S: HeatFlowState> {
    s_levels: Vec<S::Scalar>,
    states: Vec<S>,
    tension: Vec<Vec<S::Scalar>>,
    substeps: Vec<usize>,
    scheme: HeatScheme,
    rho: S::Scalar,
}

impl<S: HeatFlowState> HeatResolution<S> {
    pub fn s_levels(&self) -> &[S::Scalar] {
        &self.s_levels
    }
    pub fn states(&self) -> &[S] {
        &self.states
    }
    /// Stored `d_s u` per level (component-major like the states).
    pub fn tension(&self) -> &[Vec<S::Scalar>] {
        &self.tension
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn scheme(&self) -> HeatScheme {
        self.scheme
    }
    pub fn rho(&self) -> S::Scalar {
        self.rho
    }
    pub fn grid(&self) -> &RadialGrid<S::Scalar> {
        self.states[0].grid()
    }
    /// Number of equal substeps taken from level `k-1` to level `k`.
    pub fn substeps(&self, k: usize) -> usize {
        self.substeps[k]
    }
    /// Substep size used between level `k-1` and level `k`.
    pub fn substep_size(&self, k: usize) -> S::Scalar {
        (self.s_levels[k] - self.s_levels[k - 1]) / S::Scalar::of(self.substeps[k])
    }
    /// Index of the first level of the geometric ladder (`s = s_min`).
    pub fn ladder_start(&self) -> usize {
        1
    }
}

/// Runs the heat flow from `initial` across the geometric ladder.
pub fn run_heat_resolution<S: HeatFlowState>(
    initial: &S,
    ladder: HeatLadder<S::Scalar>,
    scheme: HeatScheme,
) -> Result<HeatResolution<S>> {
    let h = initial.grid().h();
    let HeatLadder { s_min, s_max, rho } = ladder;
    if !(s_min > S::Scalar::zero()) || s_min > h * h * S::Scalar::lit(1.0 + 1e-12) {
        return Err(CaloricError::InvalidConfig(format!("s_min = {s_min} must lie in (0, h^2]")));
    }
    if !(rho > S::Scalar::one()) || rho > S::Scalar::lit(2.0) {
        return Err(CaloricError::InvalidConfig(format!("rho = {rho} must lie in (1, 2]")));
    }
    if !(s_max > s_min) {
        return Err(CaloricError::InvalidConfig(format!("s_max = {s_max} must exceed s_min")));
    }
    let ds_max = scheme.default_substep(h);
    let mut s_levels = vec![S::Scalar::zero()];
    s_levels.extend(ladder.levels());
    let mut states = vec![initial.clone()];
    let mut tension = vec![initial.rate()];
    let mut substeps = vec![0];
    let mut current = initial.clone();
    for k in 1..s_levels.len() {
        let span = s_levels[k] - s_levels[k - 1];
        let m = (span / ds_max).ceil().to_usize().unwrap_or(1).max(1);
        let ds = span / S::Scalar::of(m);
        for _ in 0..m {
            advance(&mut current, ds, scheme)?;
        }
        if current.values().iter().any(|x| !x.is_finite()) {
            return Err(CaloricError::Divergence { s: s_levels[k].to_f64_lossy(), last_good_level: k - 1 });
        }
        tension.push(current.rate());
        states.push(current.clone());
        substeps.push(m);
    }
    Ok(HeatResolution { s_levels, states, tension, substeps, scheme, rho })
}

/// `max_k | |u_k| - 1 |`.
pub fn constraint_violation<T: Real>(state: &ExtrinsicMapState<T>) -> T {
    let n = state.grid.len();
    let m = state.ambient;
    (0..n).map(|k| ((0..m).map(|c| state.values[c * n + k].powi(2)).sum::<T>().sqrt() - T::one()).abs()).fold(T::zero(), T::max)
}

fn component_norms<S: HeatFlowState>(state: &S, f: &[S::Scalar]) -> (S::Scalar, S::Scalar) {
    // (||grad f||, ||L f||) summed over components.
    let grid = state.grid();
    let n = grid.len();
    let mut grad2 = S::Scalar::zero();
    for c in 0..state.components() {
        let seg = &f[c * n..(c + 1) * n];
        grad2 = grad2 + grid.dirichlet_form(seg, state.component_parity(c));
        if state.angular_potential(c) {
            grad2 = grad2 + (0..n).map(|k| grid.weights()[k] * seg[k] * seg[k] * grid.inv_sinh2()[k]).sum::<S::Scalar>();
        }
    }
    let lap = state.linear_of(f);
    (grad2.sqrt(), grid.inner(&lap, &lap).sqrt())
}

/// Parabolic smoothing diagnostics over the ladder: suprema of
/// `s^{1/2} ||grad d_s u||`, `s ||Delta d_s u||`, `||Delta u||`, and their
/// `L^2(ds/s)` ladder sums.
pub fn smoothing_report<S: HeatFlowState>(res: &HeatResolution<S>) -> Result<NormReport<S::Scalar>> {
    if res.len() < 4 {
        return Err(CaloricError::InsufficientLadder("smoothing report needs at least 3 ladder levels".into()));
    }
    let zero = S::Scalar::zero();
    let (mut sup_g, mut sup_l, mut sup_u) = (zero, zero, zero);
    let (mut sum_g, mut sum_l, mut sum_u) = (zero, zero, zero);
    let dsigma = res.rho.ln();
    for k in res.ladder_start()..res.len() {
        let s = res.s_levels[k];
        let state = &res.states[k];
        let (g, l) = component_norms(state, &res.tension[k]);
        let lap_u = state.linear_of(state.values());
        let lu = state.grid().inner(&lap_u, &lap_u).sqrt();
        let (qg, ql) = (s.sqrt() * g, s * l);
        sup_g = sup_g.max(qg);
        sup_l = sup_l.max(ql);
        sup_u = sup_u.max(lu);
        sum_g = sum_g + dsigma * qg * qg;
        sum_l = sum_l + dsigma * ql * ql;
        sum_u = sum_u + dsigma * lu * lu;
    }
    let mut r = NormReport::new();
    r.insert("sup_s_half_grad_ds_u", sup_g)?;
    r.insert("sup_s_lap_ds_u", sup_l)?;
    r.insert("sup_lap_u", sup_u)?;
    r.insert("l2_ds_over_s_s_half_grad_ds_u", sum_g.sqrt())?;
    r.insert("l2_ds_over_s_s_lap_ds_u", sum_l.sqrt())?;
    r.insert("l2_ds_over_s_lap_u", sum_u.sqrt())?;
    Ok(r)
}

/// `||du||_{H^1} = (||du||^2 + ||grad du||^2)^{1/2}`, using the Bochner
/// identity `||grad du||^2 = ||Delta u||^2 + (d-1) ||du||^2` on H^d.
pub fn du_h1_norm<S: HeatFlowState>(state: &S) -> S::Scalar {
    let (grad, lap) = component_norms(state, state.values());
    let d = S::Scalar::of(state.grid().dim());
    (d * grad * grad + lap * lap).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid<f64>> {
        Arc::new(RadialGrid::new(4, 4.0, 80).unwrap())
    }

    #[test]
    fn constant_map_has_zero_tension_and_is_fixed() {
        let s = ExtrinsicMapState::constant(grid(), &[0.0, 0.0, 1.0]).unwrap();
        assert!(heat_rhs_extrinsic(&s).iter().all(|&x| x == 0.0));
        let t = step_heat(&s, 1e-3, HeatScheme::ExplicitRk4).unwrap();
        assert_eq!(t, s);
        let t = step_heat(&s, 1.0, HeatScheme::Imex).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn explicit_step_limit_is_enforced() {
        let s = ExtrinsicMapState::constant(grid(), &[0.0, 0.0, 1.0]).unwrap();
        let h = s.grid().h();
        assert!(matches!(step_heat(&s, h * h, HeatScheme::ExplicitRk4), Err(CaloricError::StabilityRefused { .. })));
    }

    #[test]
    fn ladder_levels_are_geometric() {
        let l = HeatLadder { s_min: 0.01, s_max: 1.0, rho: 2.0 };
        let v = l.levels();
        assert_eq!(v.len(), 8);
        assert!((v[7] - 1.28_f64).abs() < 1e-12);
    }
}
