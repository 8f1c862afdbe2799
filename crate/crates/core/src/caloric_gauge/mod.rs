//! Caloric gauge: orthonormal frames of `u^* T S^n` that are parallel in heat
//! time and equal a fixed frame `e_infty` at the top of the ladder, plus the
//! gauge variables they induce and numerical checks of the structural
//! identities those variables satisfy.
//!
//! Conventions. Frames are transported by `d_s e_j = -<e_j, d_s u> u`, the
//! tangential parallel transport on the sphere. The connection matrix is
//! `A_ij = <d e_j, e_i>`, so covariant derivatives of frame coefficients are
//! `D phi = d phi + A phi`, and the curvature of the target acts on
//! coefficients as `R(a, b) = a b^T - b a^T`.

mod data;
mod verify;

pub use data::{compute_gauge_data, GaugeData, GaugeLevel, SliceRef, TimeStencil};
pub use verify::{
    dynamic_residuals, pxh_residual, verify_reconstruction, verify_structure, wave_tension, ResidualEntry, ResidualReport,
};

use crate::error::{CaloricError, Result};
use crate::heat_flow::{rk4_values, ExtrinsicMapState, HeatFlowState, HeatResolution, HeatScheme, MapSymmetry};
use crate::linalg::SmallMat;
use crate::scalar::Real;
use rayon::prelude::*;

/// Heat resolution of a sphere-valued map.
pub type MapResolution<T> = HeatResolution<ExtrinsicMapState<T>>;

const SEED_TOL: f64 = 1e-6;
const REORTHO_TOL: f64 = 1e-8;
const INSTABILITY_TOL: f64 = 1e-4;

/// Orthonormal tangent frames per ladder level and node.
///
/// Level data is laid out as `[(j * m + c) * N + k]` for frame vector `j`,
/// ambient component `c` and node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField<T> {
    n: usize,
    m: usize,
    nodes: usize,
    s_levels: Vec<T>,
    frames: Vec<Vec<T>>,
    ds_frames: Vec<Vec<T>>,
    reorthonormalizations: usize,
    max_drift: T,
}

impl<T: Real> FrameField<T> {
    /// Frame dimension `n` (dimension of the target sphere).
    pub fn frame_dim(&self) -> usize {
        self.n
    }
    pub fn ambient_dim(&self) -> usize {
        self.m
    }
    pub fn nodes(&self) -> usize {
        self.nodes
    }
    pub fn levels(&self) -> usize {
        self.frames.len()
    }
    pub fn s_levels(&self) -> &[T] {
        &self.s_levels
    }
    pub fn level(&self, l: usize) -> &[T] {
        &self.frames[l]
    }
    /// `d_s e` per level (all zeros for a single-level frame).
    pub fn ds_level(&self, l: usize) -> &[T] {
        &self.ds_frames[l]
    }
    /// Number of re-orthonormalizations performed during transport.
    pub fn reorthonormalizations(&self) -> usize {
        self.reorthonormalizations
    }
    /// Largest orthonormality drift seen during transport.
    pub fn max_drift(&self) -> T {
        self.max_drift
    }

    /// Frame vector `j` at level `l`, node `k`.
    pub fn vector(&self, l: usize, j: usize, k: usize) -> Vec<T> {
        (0..self.m).map(|c| self.frames[l][(j * self.m + c) * self.nodes + k]).collect()
    }

    /// `max |<e_i, e_j> - delta_ij|` over all levels and nodes.
    pub fn orthonormality_defect(&self) -> T {
        (0..self.levels()).map(|l| frame_defect(&self.frames[l], self.n, self.m, self.nodes)).fold(T::zero(), T::max)
    }

    /// `max |<e_j, u>|` against the states of a resolution.
    pub fn tangency_defect(&self, res: &MapResolution<T>) -> T {
        let mut worst = T::zero();
        for (l, st) in res.states().iter().enumerate().take(self.levels()) {
            worst = worst.max(tangency(&self.frames[l], st.values(), self.n, self.m, self.nodes));
        }
        worst
    }
}

fn frame_defect<T: Real>(f: &[T], n: usize, m: usize, nodes: usize) -> T {
    let mut worst = T::zero();
    for k in 0..nodes {
        for i in 0..n {
            for j in 0..=i {
                let dot: T = (0..m).map(|c| f[(i * m + c) * nodes + k] * f[(j * m + c) * nodes + k]).sum();
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
    }
    worst
}

fn tangency<T: Real>(f: &[T], u: &[T], n: usize, m: usize, nodes: usize) -> T {
    let mut worst = T::zero();
    for k in 0..nodes {
        for j in 0..n {
            let dot: T = (0..m).map(|c| f[(j * m + c) * nodes + k] * u[c * nodes + k]).sum();
            worst = worst.max(dot.abs());
        }
    }
    worst
}

/// Gram-Schmidt of the seed axes against `u`, skipping seeds whose projection
/// is shorter than `1e-6`, and oriented so `det[u, e_1..e_n] > 0`.
fn frame_at<T: Real>(u: &[T], seeds: &[Vec<T>], n: usize) -> Option<Vec<Vec<T>>> {
    let m = u.len();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    for seed in seeds {
        if basis.len() == n {
            break;
        }
        let mut v = seed.clone();
        for _ in 0..2 {
            let a: T = (0..m).map(|c| v[c] * u[c]).sum();
            for c in 0..m {
                v[c] = v[c] - a * u[c];
            }
            for b in &basis {
                let a: T = (0..m).map(|c| v[c] * b[c]).sum();
                for c in 0..m {
                    v[c] = v[c] - a * b[c];
                }
            }
        }
        let len = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if len < T::lit(SEED_TOL) {
            continue;
        }
        basis.push(v.into_iter().map(|x| x / len).collect());
    }
    if basis.len() < n {
        return None;
    }
    let mut mat = SmallMat::zeros(m);
    for c in 0..m {
        mat[(c, 0)] = u[c];
        for (j, b) in basis.iter().enumerate() {
            mat[(c, j + 1)] = b[c];
        }
    }
    if mat.det() < T::zero() {
        for x in basis[n - 1].iter_mut() {
            *x = -*x;
        }
    }
    Some(basis)
}

fn ambient_axes<T: Real>(m: usize) -> Vec<Vec<T>> {
    (0..m).map(|i| (0..m).map(|c| if c == i { T::one() } else { T::zero() }).collect()).collect()
}

/// Orthonormal tangent frame at a single point, from the ambient axes.
pub fn frame_at_point<T: Real>(u: &[T]) -> Result<Vec<Vec<T>>> {
    frame_at(u, &ambient_axes(u.len()), u.len() - 1).ok_or(CaloricError::DegenerateFrame { node: 0 })
}

/// Initial frame from the ambient axes `e_1, e_2, ...` in order.
pub fn initial_frame<T: Real>(state: &ExtrinsicMapState<T>) -> Result<FrameField<T>> {
    initial_frame_with_seeds(state, &ambient_axes(state.ambient_dim()))
}

/// Initial frame from a custom seed order (used to test gauge uniqueness).
pub fn initial_frame_with_seeds<T: Real>(state: &ExtrinsicMapState<T>, seeds: &[Vec<T>]) -> Result<FrameField<T>> {
    let m = state.ambient_dim();
    let n = m - 1;
    let nodes = state.grid().len();
    let mut level = vec![T::zero(); n * m * nodes];
    for k in 0..nodes {
        let frame = frame_at(&state.node(k), seeds, n).ok_or(CaloricError::DegenerateFrame { node: k })?;
        for (j, v) in frame.iter().enumerate() {
            for c in 0..m {
                level[(j * m + c) * nodes + k] = v[c];
            }
        }
    }
    Ok(FrameField {
        n,
        m,
        nodes,
        s_levels: vec![T::zero()],
        ds_frames: vec![vec![T::zero(); level.len()]],
        frames: vec![level],
        reorthonormalizations: 0,
        max_drift: T::zero(),
    })
}

/// `d_s e_j = -<e_j, tension> u` for every frame vector and node.
fn frame_rate<T: Real>(u: &[T], tension: &[T], e: &[T], n: usize, m: usize, nodes: usize) -> Vec<T> {
    let mut out = vec![T::zero(); e.len()];
    for j in 0..n {
        for k in 0..nodes {
            let a: T = (0..m).map(|c| e[(j * m + c) * nodes + k] * tension[c * nodes + k]).sum();
            for c in 0..m {
                out[(j * m + c) * nodes + k] = -a * u[c * nodes + k];
            }
        }
    }
    out
}

fn reorthonormalize<T: Real>(e: &mut [T], u: &[T], n: usize, m: usize, nodes: usize) {
    for k in 0..nodes {
        let uk: Vec<T> = (0..m).map(|c| u[c * nodes + k]).collect();
        let mut basis: Vec<Vec<T>> = Vec::new();
        for j in 0..n {
            let mut v: Vec<T> = (0..m).map(|c| e[(j * m + c) * nodes + k]).collect();
            let a: T = (0..m).map(|c| v[c] * uk[c]).sum();
            for c in 0..m {
                v[c] = v[c] - a * uk[c];
            }
            for b in &basis {
                let a: T = (0..m).map(|c| v[c] * b[c]).sum();
                for c in 0..m {
                    v[c] = v[c] - a * b[c];
                }
            }
            let len = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            let v: Vec<T> = v.into_iter().map(|x| x / len).collect();
            for c in 0..m {
                e[(j * m + c) * nodes + k] = v[c];
            }
            basis.push(v);
        }
    }
}

/// Transports `frame0` (a single-level frame at `s = 0`) across every level
/// of the resolution. Each ladder interval is replayed with the substeps the
/// resolution used, integrating the map and the frames together; for the
/// explicit scheme the replayed map is bit-identical to the stored one.
pub fn transport_frame<T: Real>(res: &MapResolution<T>, frame0: &FrameField<T>) -> Result<FrameField<T>> {
    let grid = res.grid();
    let nodes = grid.len();
    let (n, m) = (frame0.n, frame0.m);
    if frame0.nodes != nodes || m != res.states()[0].ambient_dim() {
        return Err(CaloricError::ShapeMismatch { expected: nodes, found: frame0.nodes });
    }
    let mut frames = Vec::with_capacity(res.len());
    let mut ds_frames = Vec::with_capacity(res.len());
    let mut e = frame0.frames[0].clone();
    let mut events = 0;
    let mut max_drift = T::zero();
    let st0 = &res.states()[0];
    ds_frames.push(frame_rate(st0.values(), &res.tension()[0], &e, n, m, nodes));
    frames.push(e.clone());
    let ulen = m * nodes;
    for k in 1..res.len() {
        let start = &res.states()[k - 1];
        let ds = res.substep_size(k);
        let mut u = start.values().to_vec();
        for _ in 0..res.substeps(k) {
            match res.scheme() {
                HeatScheme::ExplicitRk4 => {
                    let mut y = u.clone();
                    y.extend_from_slice(&e);
                    let rate = |y: &[T]| {
                        let (uu, ee) = y.split_at(ulen);
                        let t = start.rate_of(uu);
                        let mut r = t.clone();
                        r.extend(frame_rate(uu, &t, ee, n, m, nodes));
                        r
                    };
                    let y = rk4_values(&y, ds, rate);
                    u.copy_from_slice(&y[..ulen]);
                    e.copy_from_slice(&y[ulen..]);
                    crate::heat_flow::normalize_nodes(&mut u, m, nodes)?;
                }
                HeatScheme::Imex => {
                    // Frames by RK4 with the map interpolated linearly across
                    // the (first-order) implicit substep.
                    let next = crate::heat_flow::step_heat(
                        &ExtrinsicMapState::from_raw(
                            start.grid_arc().clone(),
                            start.symmetry(),
                            u.clone(),
                            start.u_infty().to_vec(),
                        ),
                        ds,
                        HeatScheme::Imex,
                    )?;
                    let (u0, u1) = (u.clone(), next.values().to_vec());
                    let (t0, t1) = (start.rate_of(&u0), start.rate_of(&u1));
                    let half = T::lit(0.5);
                    let um: Vec<T> = u0.iter().zip(&u1).map(|(&a, &b)| half * (a + b)).collect();
                    let tm: Vec<T> = t0.iter().zip(&t1).map(|(&a, &b)| half * (a + b)).collect();
                    let k1 = frame_rate(&u0, &t0, &e, n, m, nodes);
                    let e2: Vec<T> = e.iter().zip(&k1).map(|(&x, &r)| x + half * ds * r).collect();
                    let k2 = frame_rate(&um, &tm, &e2, n, m, nodes);
                    let e3: Vec<T> = e.iter().zip(&k2).map(|(&x, &r)| x + half * ds * r).collect();
                    let k3 = frame_rate(&um, &tm, &e3, n, m, nodes);
                    let e4: Vec<T> = e.iter().zip(&k3).map(|(&x, &r)| x + ds * r).collect();
                    let k4 = frame_rate(&u1, &t1, &e4, n, m, nodes);
                    let sixth = ds / T::lit(6.0);
                    let two = T::lit(2.0);
                    for i in 0..e.len() {
                        e[i] = e[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
                    }
                    u = u1;
                }
            }
        }
        let stored = res.states()[k].values();
        if res.scheme() == HeatScheme::ExplicitRk4 {
            debug_assert!(u == stored, "replayed heat flow must match the stored resolution");
        }
        let drift = frame_defect(&e, n, m, nodes).max(tangency(&e, stored, n, m, nodes));
        max_drift = max_drift.max(drift);
        if drift > T::lit(INSTABILITY_TOL) {
            return Err(CaloricError::TransportInstability { drift: drift.to_f64_lossy() });
        }
        if drift > T::lit(REORTHO_TOL) {
            reorthonormalize(&mut e, stored, n, m, nodes);
            events += 1;
        }
        ds_frames.push(frame_rate(stored, &res.tension()[k], &e, n, m, nodes));
        frames.push(e.clone());
    }
    Ok(FrameField { n, m, nodes, s_levels: res.s_levels().to_vec(), frames, ds_frames, reorthonormalizations: events, max_drift })
}

/// Parallel transport of a tangent vector `v` at `p` to `q` along the great
/// circle joining them.
pub fn great_circle_transport<T: Real>(p: &[T], q: &[T], v: &[T]) -> Vec<T> {
    let pq: T = p.iter().zip(q).map(|(&a, &b)| a * b).sum();
    let vq: T = v.iter().zip(q).map(|(&a, &b)| a * b).sum();
    let f = vq / (T::one() + pq);
    (0..v.len()).map(|c| v[c] - f * (p[c] + q[c])).collect()
}

/// Rotates every level by the per-node rotation `B` that aligns the top
/// level with `e_infty` (transported from `u_infty` to `u(s_max, r)`).
/// `e_infty` is given as `n` orthonormal tangent vectors at `u_infty`.
pub fn apply_limiting_gauge<T: Real>(
    frames: &FrameField<T>,
    res: &MapResolution<T>,
    e_infty: &[Vec<T>],
) -> Result<FrameField<T>> {
    let (n, m, nodes) = (frames.n, frames.m, frames.nodes);
    let top = frames.levels() - 1;
    let state = &res.states()[top];
    let u_inf = state.u_infty();
    let mut rotations = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let q = state.node(k);
        let target: Vec<Vec<T>> = e_infty.iter().map(|v| great_circle_transport(u_inf, &q, v)).collect();
        let mut mm = SmallMat::zeros(n);
        for i in 0..n {
            let ei = frames.vector(top, i, k);
            for j in 0..n {
                mm[(i, j)] = (0..m).map(|c| ei[c] * target[j][c]).sum();
            }
        }
        let b = mm.polar_orthogonal().ok_or(CaloricError::DegenerateFrame { node: k })?;
        if b.det() < T::zero() {
            return Err(CaloricError::OrientationMismatch { node: k });
        }
        rotations.push(b);
    }
    let rotate = |level: &Vec<T>| -> Vec<T> {
        let mut out = vec![T::zero(); level.len()];
        for (k, b) in rotations.iter().enumerate() {
            for j in 0..n {
                for c in 0..m {
                    let v: T = (0..n).map(|i| level[(i * m + c) * nodes + k] * b[(i, j)]).sum();
                    out[(j * m + c) * nodes + k] = v;
                }
            }
        }
        out
    };
    Ok(FrameField {
        n,
        m,
        nodes,
        s_levels: frames.s_levels.clone(),
        frames: frames.frames.par_iter().map(rotate).collect(),
        ds_frames: frames.ds_frames.par_iter().map(rotate).collect(),
        reorthonormalizations: frames.reorthonormalizations,
        max_drift: frames.max_drift,
    })
}

/// Complete caloric gauge for one resolution: initial frame, transport,
/// limiting alignment.
pub fn caloric_frames<T: Real>(res: &MapResolution<T>, e_infty: &[Vec<T>]) -> Result<FrameField<T>> {
    if res.states()[0].symmetry() != MapSymmetry::Radial {
        return Err(CaloricError::InvalidConfig("the caloric gauge is built for radial maps".into()));
    }
    let f0 = initial_frame(&res.states()[0])?;
    let f = transport_frame(res, &f0)?;
    apply_limiting_gauge(&f, res, e_infty)
}

/// Applies a fixed rotation `R` to a limiting frame: `e_j -> sum_i e_i R_ij`.
pub fn rotate_frame<T: Real>(e_infty: &[Vec<T>], r: &SmallMat<T>) -> Vec<Vec<T>> {
    let n = e_infty.len();
    let m = e_infty[0].len();
    (0..n).map(|j| (0..m).map(|c| (0..n).map(|i| e_infty[i][c] * r[(i, j)]).sum()).collect()).collect()
}
