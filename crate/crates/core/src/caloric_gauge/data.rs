//! Extraction of the gauge variables `psi`, `A`, `F` from caloric frames.

use super::{FrameField, MapResolution};
use crate::error::{CaloricError, Result};
use crate::geometry::{Parity, RadialGrid};
use crate::scalar::Real;
use rayon::prelude::*;
use std::sync::Arc;

/// One heat-resolved time slice with its caloric frames.
#[derive(Clone, Copy)]
pub struct SliceRef<'a, T: Real> {
    pub res: &'a MapResolution<T>,
    pub frames: &'a FrameField<T>,
}

/// Neighboring slices at `t - dt` and `t + dt` for time derivatives.
#[derive(Clone, Copy)]
pub struct TimeStencil<'a, T: Real> {
    pub prev: SliceRef<'a, T>,
    pub next: SliceRef<'a, T>,
    pub dt: T,
}

/// Time-direction quantities at one level of the central slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLevel<T> {
    pub psi_t: Vec<T>,
    pub a_t: Vec<T>,
    pub f_tr: Vec<T>,
    pub f_st: Vec<T>,
    pub dt_psi_t: Vec<T>,
    pub dt_psi_s: Vec<T>,
    pub dtt_psi_s: Vec<T>,
    pub dt_psi_r: Vec<T>,
    pub dt_a_r: Vec<T>,
    pub dt_a_t: Vec<T>,
}

/// Gauge variables at one ladder level. Vectors are node-major
/// (`[k * n + a]`), matrices `[k * n * n + i * n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeLevel<T> {
    pub psi_s: Vec<T>,
    pub psi_r: Vec<T>,
    pub a_s: Vec<T>,
    pub a_r: Vec<T>,
    pub f_sr: Vec<T>,
    pub time: Option<TimeLevel<T>>,
}

/// Gauge variables over a heat ladder for one time slice.
#[derive(Debug, Clone)]
pub struct GaugeData<T> {
    pub(crate) grid: Arc<RadialGrid<T>>,
    pub(crate) n: usize,
    pub(crate) s_levels: Vec<T>,
    pub(crate) rho: T,
    pub(crate) dt: Option<T>,
    pub(crate) levels: Vec<GaugeLevel<T>>,
    pub(crate) antisym_defect: T,
    pub(crate) psi_s_consistency: T,
}

impl<T: Real> GaugeData<T> {
    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }
    pub fn frame_dim(&self) -> usize {
        self.n
    }
    pub fn s_levels(&self) -> &[T] {
        &self.s_levels
    }
    pub fn rho(&self) -> T {
        self.rho
    }
    pub fn dt(&self) -> Option<T> {
        self.dt
    }
    pub fn levels(&self) -> &[GaugeLevel<T>] {
        &self.levels
    }
    pub fn has_time(&self) -> bool {
        self.dt.is_some()
    }
    /// Largest symmetric part of a raw connection matrix before it was
    /// antisymmetrized.
    pub fn antisymmetry_defect(&self) -> T {
        self.antisym_defect
    }
    /// `max |e psi_s - d_s u|` over levels and nodes.
    pub fn psi_s_consistency(&self) -> T {
        self.psi_s_consistency
    }
    /// `max |A_s|` over all levels and nodes.
    pub fn max_a_s(&self) -> T {
        self.levels.iter().flat_map(|l| l.a_s.iter()).fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// `R(a, b) = a b^T - b a^T` at every node.
pub(crate) fn curvature<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let nodes = a.len() / n;
    let mut out = vec![T::zero(); nodes * n * n];
    for k in 0..nodes {
        for i in 0..n {
            for j in 0..n {
                out[k * n * n + i * n + j] = a[k * n + i] * b[k * n + j] - b[k * n + i] * a[k * n + j];
            }
        }
    }
    out
}

/// Coefficients `<e_a, v>` of an ambient field (component-major) in a frame.
fn coefficients<T: Real>(e: &[T], v: &[T], n: usize, m: usize, nodes: usize) -> Vec<T> {
    let mut out = vec![T::zero(); nodes * n];
    for k in 0..nodes {
        for a in 0..n {
            out[k * n + a] = (0..m).map(|c| e[(a * m + c) * nodes + k] * v[c * nodes + k]).sum();
        }
    }
    out
}

/// Raw connection `<de_j, e_i>`, antisymmetrized; returns the matrix and the
/// largest symmetric part.
fn connection<T: Real>(e: &[T], de: &[T], n: usize, m: usize, nodes: usize) -> (Vec<T>, T) {
    let mut out = vec![T::zero(); nodes * n * n];
    let mut defect = T::zero();
    let half = T::lit(0.5);
    for k in 0..nodes {
        let raw = |i: usize, j: usize| -> T { (0..m).map(|c| de[(j * m + c) * nodes + k] * e[(i * m + c) * nodes + k]).sum() };
        for i in 0..n {
            for j in 0..n {
                let (aij, aji) = (raw(i, j), raw(j, i));
                defect = defect.max((half * (aij + aji)).abs());
                out[k * n * n + i * n + j] = half * (aij - aji);
            }
        }
    }
    (out, defect)
}

/// Radial derivative of each column of a node-major field.
pub(crate) fn d_dr<T: Real>(grid: &RadialGrid<T>, f: &[T], width: usize, parity: Parity) -> Vec<T> {
    let nodes = grid.len();
    let mut out = vec![T::zero(); f.len()];
    let mut col = vec![T::zero(); nodes];
    let mut dcol = vec![T::zero(); nodes];
    for w in 0..width {
        for k in 0..nodes {
            col[k] = f[k * width + w];
        }
        grid.derivative_into(&col, parity, &mut dcol);
        for k in 0..nodes {
            out[k * width + w] = dcol[k];
        }
    }
    out
}

/// Radial derivative of every block of a component-major / frame-major field
/// (blocks of length `nodes`), all with the given parity.
fn d_dr_blocks<T: Real>(grid: &RadialGrid<T>, f: &[T], parity: Parity) -> Vec<T> {
    let nodes = grid.len();
    let mut out = vec![T::zero(); f.len()];
    for (src, dst) in f.chunks(nodes).zip(out.chunks_mut(nodes)) {
        grid.derivative_into(src, parity, dst);
    }
    out
}

struct Spatial<T> {
    psi_s: Vec<T>,
    psi_r: Vec<T>,
    a_s: Vec<T>,
    a_r: Vec<T>,
    defect: T,
    consistency: T,
}

fn spatial<T: Real>(slice: &SliceRef<'_, T>, level: usize) -> Spatial<T> {
    let grid = slice.res.grid();
    let nodes = grid.len();
    let (n, m) = (slice.frames.frame_dim(), slice.frames.ambient_dim());
    let u = slice.res.states()[level].values();
    let tension = &slice.res.tension()[level];
    let e = slice.frames.level(level);
    let du = d_dr_blocks(grid, u, Parity::Even);
    let de = d_dr_blocks(grid, e, Parity::Even);
    let psi_s = coefficients(e, tension, n, m, nodes);
    let psi_r = coefficients(e, &du, n, m, nodes);
    let (a_r, d1) = connection(e, &de, n, m, nodes);
    let (a_s, d2) = connection(e, slice.frames.ds_level(level), n, m, nodes);
    let mut consistency = T::zero();
    for k in 0..nodes {
        for c in 0..m {
            let rec: T = (0..n).map(|a| e[(a * m + c) * nodes + k] * psi_s[k * n + a]).sum();
            consistency = consistency.max((rec - tension[c * nodes + k]).abs());
        }
    }
    Spatial { psi_s, psi_r, a_s, a_r, defect: d1.max(d2), consistency }
}

fn centered<T: Real>(plus: &[T], minus: &[T], dt: T) -> Vec<T> {
    let two_dt = T::lit(2.0) * dt;
    plus.iter().zip(minus).map(|(&p, &q)| (p - q) / two_dt).collect()
}

fn second<T: Real>(plus: &[T], mid: &[T], minus: &[T], dt: T) -> Vec<T> {
    let two = T::lit(2.0);
    let dt2 = dt * dt;
    (0..mid.len()).map(|i| (plus[i] - two * mid[i] + minus[i]) / dt2).collect()
}

fn check_compatible<T: Real>(a: &SliceRef<'_, T>, b: &SliceRef<'_, T>) -> Result<()> {
    if a.res.grid() != b.res.grid() {
        return Err(CaloricError::InvalidConfig("time slices use different grids".into()));
    }
    if a.res.s_levels() != b.res.s_levels() {
        return Err(CaloricError::InvalidConfig("time slices use different heat ladders".into()));
    }
    Ok(())
}

/// Computes the gauge variables of `center` at every ladder level. With a
/// time stencil, the `t`-direction quantities are obtained by centered
/// differences across the three slices (which must share grid, ladder and
/// limiting frame).
pub fn compute_gauge_data<T: Real>(center: SliceRef<'_, T>, stencil: Option<TimeStencil<'_, T>>) -> Result<GaugeData<T>> {
    let res = center.res;
    if center.frames.levels() != res.len() || center.frames.nodes() != res.grid().len() {
        return Err(CaloricError::InvalidConfig("frames and resolution do not match".into()));
    }
    if let Some(st) = &stencil {
        check_compatible(&center, &st.prev)?;
        check_compatible(&center, &st.next)?;
        if !(st.dt > T::zero()) {
            return Err(CaloricError::InvalidConfig("time stencil spacing must be positive".into()));
        }
    }
    let grid = Arc::new(res.grid().clone());
    let nodes = grid.len();
    let (n, m) = (center.frames.frame_dim(), center.frames.ambient_dim());
    let results: Vec<(GaugeLevel<T>, T, T)> = (0..res.len())
        .into_par_iter()
        .map(|l| {
            let sp = spatial(&center, l);
            let f_sr = curvature(&sp.psi_s, &sp.psi_r, n);
            let mut defect = sp.defect;
            let time = stencil.as_ref().map(|st| {
                let dt = st.dt;
                let (pp, nn) = (spatial(&st.prev, l), spatial(&st.next, l));
                defect = defect.max(pp.defect).max(nn.defect);
                let u = res.states()[l].values();
                let (um, up) = (st.prev.res.states()[l].values(), st.next.res.states()[l].values());
                let e = center.frames.level(l);
                let (em, ep) = (st.prev.frames.level(l), st.next.frames.level(l));
                let du_t = centered(up, um, dt);
                let du_tt = second(up, u, um, dt);
                let de_t = centered(ep, em, dt);
                let de_tt = second(ep, e, em, dt);
                let psi_t = coefficients(e, &du_t, n, m, nodes);
                let (a_t, d3) = connection(e, &de_t, n, m, nodes);
                defect = defect.max(d3);
                let mut dt_psi_t = coefficients(&de_t, &du_t, n, m, nodes);
                for (x, y) in dt_psi_t.iter_mut().zip(coefficients(e, &du_tt, n, m, nodes)) {
                    *x = *x + y;
                }
                // d_t <d_t e_j, e_i> = <d_tt e_j, e_i> + <d_t e_j, d_t e_i>; the
                // second term is symmetric and drops out of the antisymmetric part.
                let (dt_a_t, _) = connection(e, &de_tt, n, m, nodes);
                TimeLevel {
                    f_tr: curvature(&psi_t, &sp.psi_r, n),
                    f_st: curvature(&sp.psi_s, &psi_t, n),
                    dt_psi_s: centered(&nn.psi_s, &pp.psi_s, dt),
                    dtt_psi_s: second(&nn.psi_s, &sp.psi_s, &pp.psi_s, dt),
                    dt_psi_r: centered(&nn.psi_r, &pp.psi_r, dt),
                    dt_a_r: centered(&nn.a_r, &pp.a_r, dt),
                    psi_t,
                    a_t,
                    dt_psi_t,
                    dt_a_t,
                }
            });
            let level = GaugeLevel { psi_s: sp.psi_s, psi_r: sp.psi_r, a_s: sp.a_s, a_r: sp.a_r, f_sr, time };
            (level, defect, sp.consistency)
        })
        .collect();
    let mut levels = Vec::with_capacity(results.len());
    let (mut antisym_defect, mut psi_s_consistency) = (T::zero(), T::zero());
    for (lvl, d, c) in results {
        antisym_defect = antisym_defect.max(d);
        psi_s_consistency = psi_s_consistency.max(c);
        levels.push(lvl);
    }
    Ok(GaugeData {
        grid,
        n,
        s_levels: res.s_levels().to_vec(),
        rho: res.rho(),
        dt: stencil.map(|s| s.dt),
        levels,
        antisym_defect,
        psi_s_consistency,
    })
}
