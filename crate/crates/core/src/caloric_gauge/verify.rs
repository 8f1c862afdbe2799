//! Residuals of the caloric-gauge identities.
//!
//! All residual norms are pointwise Euclidean (vectors) or Hilbert-Schmidt
//! (matrices), so they are invariant under constant rotations of the gauge.
//! Norms are taken over the interior nodes, leaving out the last few nodes
//! next to the held boundary.

use super::data::{curvature, d_dr, GaugeData, GaugeLevel, TimeLevel};
use crate::error::{CaloricError, Result};
use crate::geometry::{Parity, RadialGrid};
use crate::scalar::Real;
use std::collections::BTreeMap;

const BOUNDARY_MARGIN: usize = 4;

/// Residual of one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEntry<T> {
    /// Largest weighted L^2 residual over the checked levels.
    pub l2: T,
    /// Largest pointwise residual over the checked levels.
    pub linf: T,
    /// Sup norm of the largest term of the identity (its natural scale).
    pub scale: T,
    /// `(level, l2, linf)` per checked level.
    pub per_level: Vec<(usize, T, T)>,
}

impl<T: Real> ResidualEntry<T> {
    /// `linf / scale`, or zero when both vanish.
    pub fn relative(&self) -> T {
        if self.scale > T::zero() {
            self.linf / self.scale
        } else if self.linf > T::zero() {
            T::infinity()
        } else {
            T::zero()
        }
    }
}

/// Named residuals with the discretization they were computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<T> {
    pub entries: BTreeMap<String, ResidualEntry<T>>,
    /// Auxiliary diagnostics (tail sizes and similar).
    pub extras: BTreeMap<String, T>,
    pub h: T,
    pub rho: T,
    pub dt: Option<T>,
    pub nodes: usize,
    pub levels: usize,
}

impl<T: Real> ResidualReport<T> {
    fn new(gd: &GaugeData<T>) -> Self {
        Self {
            entries: BTreeMap::new(),
            extras: BTreeMap::new(),
            h: gd.grid.h(),
            rho: gd.rho,
            dt: gd.dt,
            nodes: gd.grid.len(),
            levels: gd.levels.len(),
        }
    }

    pub fn get(&self, label: &str) -> Option<&ResidualEntry<T>> {
        self.entries.get(label)
    }

    /// Merges the entries of another report (same discretization).
    pub fn merge(&mut self, other: ResidualReport<T>) {
        self.entries.extend(other.entries);
        self.extras.extend(other.extras);
    }

    /// Largest relative residual over all entries.
    pub fn worst_relative(&self) -> T {
        self.entries.values().map(|e| e.relative()).fold(T::zero(), T::max)
    }
}

struct Acc<T> {
    entry: ResidualEntry<T>,
}

impl<T: Real> Acc<T> {
    fn new() -> Self {
        Self { entry: ResidualEntry { l2: T::zero(), linf: T::zero(), scale: T::zero(), per_level: Vec::new() } }
    }

    fn add(&mut self, grid: &RadialGrid<T>, level: usize, residual: &[T], width: usize, terms: &[&[T]]) {
        let (l2, linf) = norms(grid, residual, width);
        self.entry.l2 = self.entry.l2.max(l2);
        self.entry.linf = self.entry.linf.max(linf);
        for t in terms {
            self.entry.scale = self.entry.scale.max(norms(grid, t, width).1);
        }
        self.entry.per_level.push((level, l2, linf));
    }

    fn finish(self, report: &mut ResidualReport<T>, label: &str) {
        report.entries.insert(label.to_string(), self.entry);
    }
}

/// (weighted L^2, sup) of a node-major field over interior nodes.
fn norms<T: Real>(grid: &RadialGrid<T>, f: &[T], width: usize) -> (T, T) {
    let interior = grid.len().saturating_sub(BOUNDARY_MARGIN);
    let (mut l2, mut linf) = (T::zero(), T::zero());
    for k in 0..interior {
        let p2: T = f[k * width..(k + 1) * width].iter().map(|&x| x * x).sum();
        l2 = l2 + grid.weights()[k] * p2;
        linf = linf.max(p2.sqrt());
    }
    (l2.sqrt(), linf)
}

fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// Node-wise matrix-vector product.
fn matvec<T: Real>(a: &[T], v: &[T], n: usize) -> Vec<T> {
    let nodes = v.len() / n;
    let mut out = vec![T::zero(); v.len()];
    for k in 0..nodes {
        for i in 0..n {
            out[k * n + i] = (0..n).map(|j| a[k * n * n + i * n + j] * v[k * n + j]).sum();
        }
    }
    out
}

/// Node-wise commutator `[a, b]`.
fn commutator<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let nodes = a.len() / (n * n);
    let mut out = vec![T::zero(); a.len()];
    for k in 0..nodes {
        let o = k * n * n;
        for i in 0..n {
            for j in 0..n {
                let ab: T = (0..n).map(|l| a[o + i * n + l] * b[o + l * n + j]).sum();
                let ba: T = (0..n).map(|l| b[o + i * n + l] * a[o + l * n + j]).sum();
                out[o + i * n + j] = ab - ba;
            }
        }
    }
    out
}

/// Multiplies each width-block by a per-node scalar.
fn nodal<T: Real>(f: &[T], coef: &[T], width: usize) -> Vec<T> {
    f.iter().enumerate().map(|(i, &x)| x * coef[i / width]).collect()
}

/// Column `w` of a node-major field extended by parity to `r = -2h, -h, 0`.
/// The origin value of an even column comes from the quadratic fit in `r^2`
/// through the first three nodes.
fn extended<T: Real>(grid: &RadialGrid<T>, f: &[T], width: usize, w: usize, parity: Parity) -> Vec<T> {
    let nodes = f.len() / width;
    let at = |k: usize| f[k * width + w];
    let (sign, origin) = match parity {
        Parity::Even => (T::one(), grid.origin_value(&[at(0), at(1), at(2)], parity)),
        Parity::Odd => (-T::one(), T::zero()),
    };
    let mut g = Vec::with_capacity(nodes + 3);
    g.push(sign * at(1));
    g.push(sign * at(0));
    g.push(origin);
    g.extend((0..nodes).map(at));
    g
}

/// Fourth-order first and second radial derivatives of each column. The
/// coth-weighted terms of the covariant Laplacian amplify derivative errors
/// near the origin by `1/r`, which a second-order stencil cannot absorb for
/// odd fields. The last two nodes fall back to second-order stencils.
fn derivatives4<T: Real>(grid: &RadialGrid<T>, f: &[T], width: usize, parity: Parity) -> (Vec<T>, Vec<T>) {
    let nodes = grid.len();
    let h = grid.h();
    let (c8, c16, c30) = (T::lit(8.0), T::lit(16.0), T::lit(30.0));
    let (twelve_h, twelve_h2) = (T::lit(12.0) * h, T::lit(12.0) * h * h);
    let two = T::lit(2.0);
    let mut d1 = vec![T::zero(); f.len()];
    let mut d2 = vec![T::zero(); f.len()];
    for w in 0..width {
        let g = extended(grid, f, width, w, parity);
        for k in 0..nodes {
            let i = k + 3;
            let (first, second) = if k + 2 < nodes {
                (
                    (g[i - 2] - c8 * g[i - 1] + c8 * g[i + 1] - g[i + 2]) / twelve_h,
                    (-g[i - 2] + c16 * g[i - 1] - c30 * g[i] + c16 * g[i + 1] - g[i + 2]) / twelve_h2,
                )
            } else if k + 1 < nodes {
                ((g[i + 1] - g[i - 1]) / (two * h), (g[i + 1] - two * g[i] + g[i - 1]) / (h * h))
            } else {
                (
                    (T::lit(3.0) * g[i] - T::lit(4.0) * g[i - 1] + g[i - 2]) / (two * h),
                    (two * g[i] - T::lit(5.0) * g[i - 1] + T::lit(4.0) * g[i - 2] - g[i - 3]) / (h * h),
                )
            };
            d1[k * width + w] = first;
            d2[k * width + w] = second;
        }
    }
    (d1, d2)
}

fn d_dr4<T: Real>(grid: &RadialGrid<T>, f: &[T], width: usize, parity: Parity) -> Vec<T> {
    derivatives4(grid, f, width, parity).0
}

/// Covariant geometry of the radial slice.
struct Ops<'a, T: Real> {
    grid: &'a RadialGrid<T>,
    n: usize,
    dm1: T,
}

impl<'a, T: Real> Ops<'a, T> {
    fn new(gd: &'a GaugeData<T>) -> Self {
        Self { grid: &gd.grid, n: gd.n, dm1: T::of(gd.grid.dim() - 1) }
    }

    /// `D_r phi = phi' + A_r phi` with the second-order stencil that also
    /// produced `psi_r` and `A_r`, so first-order identities commute exactly
    /// with the discrete derivative.
    fn d_r(&self, phi: &[T], parity: Parity, a_r: &[T]) -> Vec<T> {
        add(&d_dr(self.grid, phi, self.n, parity), &matvec(a_r, phi, self.n))
    }

    /// `D_r phi` with the fourth-order stencil.
    fn d_r_hi(&self, phi: &[T], parity: Parity, a_r: &[T]) -> Vec<T> {
        add(&d_dr4(self.grid, phi, self.n, parity), &matvec(a_r, phi, self.n))
    }

    /// `D^a psi_a = psi_r' + (d-1) coth psi_r + A_r psi_r`.
    fn divergence(&self, psi_r: &[T], a_r: &[T]) -> Vec<T> {
        let g = self.d_r_hi(psi_r, Parity::Odd, a_r);
        add(&g, &nodal(psi_r, &scale(self.grid.coth(), self.dm1), self.n))
    }

    /// `D_r D_r phi = phi'' + (A_r phi)' + A_r phi' + A_r^2 phi`.
    fn d_rr(&self, phi: &[T], parity: Parity, a_r: &[T]) -> Vec<T> {
        let n = self.n;
        let (dphi, second) = derivatives4(self.grid, phi, n, parity);
        let a_phi = matvec(a_r, phi, n);
        // A_r is odd, so A_r phi has the opposite parity of phi.
        let d_aphi = d_dr4(self.grid, &a_phi, n, parity.flip());
        let a_dphi = matvec(a_r, &dphi, n);
        let a_a_phi = matvec(a_r, &a_phi, n);
        add(&add(&second, &d_aphi), &add(&a_dphi, &a_a_phi))
    }

    /// Covariant Laplacian of a scalar-type coefficient field.
    fn lap_scalar(&self, phi: &[T], parity: Parity, a_r: &[T]) -> Vec<T> {
        let g = self.d_r_hi(phi, parity, a_r);
        add(&self.d_rr(phi, parity, a_r), &nodal(&g, &scale(self.grid.coth(), self.dm1), self.n))
    }

    /// Covariant Laplacian of the radial component of a 1-form:
    /// the scalar expression minus `(d-1) coth^2 psi_r`.
    fn lap_oneform(&self, psi_r: &[T], a_r: &[T]) -> Vec<T> {
        let coth2: Vec<T> = self.grid.coth().iter().map(|&c| self.dm1 * c * c).collect();
        sub(&self.lap_scalar(psi_r, Parity::Odd, a_r), &nodal(psi_r, &coth2, self.n))
    }
}

/// Levels with both ladder neighbors on the geometric ladder.
fn ladder_interior<T: Real>(gd: &GaugeData<T>) -> std::ops::Range<usize> {
    2..gd.levels.len().saturating_sub(1)
}

/// `d_s f` at level `l` by a centered difference in `log s`.
fn d_s<T: Real>(gd: &GaugeData<T>, l: usize, get: impl Fn(&GaugeLevel<T>) -> &[T]) -> Vec<T> {
    let denom = T::lit(2.0) * gd.rho.ln() * gd.s_levels[l];
    sub(get(&gd.levels[l + 1]), get(&gd.levels[l - 1])).into_iter().map(|x| x / denom).collect()
}

fn time<T: Real>(lvl: &GaugeLevel<T>) -> &TimeLevel<T> {
    lvl.time.as_ref().expect("time stencil checked")
}

fn require_time<T: Real>(gd: &GaugeData<T>) -> Result<()> {
    if gd.dt.is_none() {
        return Err(CaloricError::InvalidConfig("this residual needs a time stencil".into()));
    }
    Ok(())
}

fn require_ladder<T: Real>(gd: &GaugeData<T>) -> Result<()> {
    if gd.levels.len() < 5 {
        return Err(CaloricError::InsufficientLadder("at least 4 ladder levels are needed".into()));
    }
    Ok(())
}

/// `w = -D_t psi_t + D^a psi_a` at level `l`.
fn tension_at<T: Real>(gd: &GaugeData<T>, ops: &Ops<'_, T>, l: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let lvl = &gd.levels[l];
    let tl = time(lvl);
    let dt_psi = add(&tl.dt_psi_t, &matvec(&tl.a_t, &tl.psi_t, gd.n));
    let div = ops.divergence(&lvl.psi_r, &lvl.a_r);
    (sub(&div, &dt_psi), dt_psi, div)
}

/// Wave tension field `w` per ladder level.
pub fn wave_tension<T: Real>(gd: &GaugeData<T>) -> Result<Vec<Vec<T>>> {
    require_time(gd)?;
    let ops = Ops::new(gd);
    Ok((0..gd.levels.len()).map(|l| tension_at(gd, &ops, l).0).collect())
}

/// Trapezoid rule in `log s` for `int_{s_l0}^{s_max} f ds`.
fn ladder_integral<T: Real>(gd: &GaugeData<T>, l0: usize, f: impl Fn(usize) -> Vec<T>) -> Vec<T> {
    let top = gd.levels.len() - 1;
    let dsig = gd.rho.ln();
    let mut acc: Vec<T> = scale(&f(l0), T::lit(0.5) * gd.s_levels[l0] * dsig);
    for l in l0 + 1..=top {
        let w = if l == top { T::lit(0.5) } else { T::one() };
        acc = add(&acc, &scale(&f(l), w * gd.s_levels[l] * dsig));
    }
    acc
}

/// Fundamental-theorem reconstructions `A_a(s0) + int F_{s a} ds` and
/// `psi_a(s0) + int D_a psi_s ds` from the bottom three ladder levels, with
/// `F` taken from the curvature route `R(psi_s, psi_a)`.
pub fn verify_reconstruction<T: Real>(gd: &GaugeData<T>) -> Result<ResidualReport<T>> {
    require_ladder(gd)?;
    let ops = Ops::new(gd);
    let n = gd.n;
    let grid = &*gd.grid;
    let mut report = ResidualReport::new(gd);
    let starts = [1usize, 2, 3];
    let mut af_r = Acc::new();
    let mut paps_r = Acc::new();
    for &l0 in &starts {
        let lvl = &gd.levels[l0];
        let int_f = ladder_integral(gd, l0, |l| gd.levels[l].f_sr.clone());
        af_r.add(grid, l0, &add(&lvl.a_r, &int_f), n * n, &[&lvl.a_r, &int_f]);
        let int_d = ladder_integral(gd, l0, |l| ops.d_r(&gd.levels[l].psi_s, Parity::Even, &gd.levels[l].a_r));
        paps_r.add(grid, l0, &add(&lvl.psi_r, &int_d), n, &[&lvl.psi_r, &int_d]);
    }
    af_r.finish(&mut report, "AF_r");
    paps_r.finish(&mut report, "paps_r");
    if gd.dt.is_some() {
        let mut af_t = Acc::new();
        let mut paps_t = Acc::new();
        for &l0 in &starts {
            let tl = time(&gd.levels[l0]);
            let int_f = ladder_integral(gd, l0, |l| time(&gd.levels[l]).f_st.clone());
            af_t.add(grid, l0, &add(&tl.a_t, &int_f), n * n, &[&tl.a_t, &int_f]);
            let int_d = ladder_integral(gd, l0, |l| {
                let lv = &gd.levels[l];
                let t = time(lv);
                add(&t.dt_psi_s, &matvec(&t.a_t, &lv.psi_s, n))
            });
            paps_t.add(grid, l0, &add(&tl.psi_t, &int_d), n, &[&tl.psi_t, &int_d]);
        }
        af_t.finish(&mut report, "AF_t");
        paps_t.finish(&mut report, "paps_t");
    }
    let top = &gd.levels[gd.levels.len() - 1];
    let tail_a = norms(grid, &top.a_r, n * n).1;
    let tail_a = match &top.time {
        Some(t) => tail_a.max(norms(grid, &t.a_t, n * n).1),
        None => tail_a,
    };
    report.extras.insert("tail_A".into(), tail_a);
    report.extras.insert("tail_psi".into(), norms(grid, &top.psi_r, n).1);
    Ok(report)
}

/// Curvature, torsion-free and heat-commutation identities:
/// `F = dA + [A, A] = R(psi, psi)`, `D_t psi_r = D_r psi_t`,
/// `d_s psi_a = D_a psi_s`, the space divergence of `F_s`, the wave tension
/// at `s = 0` and the heat tension `psi_s = D^a psi_a`.
pub fn verify_structure<T: Real>(gd: &GaugeData<T>) -> Result<ResidualReport<T>> {
    require_ladder(gd)?;
    let ops = Ops::new(gd);
    let n = gd.n;
    let grid = &*gd.grid;
    let mut report = ResidualReport::new(gd);

    let mut fdu_sr = Acc::new();
    let mut dsps_r = Acc::new();
    let mut sdiv = Acc::new();
    for l in ladder_interior(gd) {
        let lvl = &gd.levels[l];
        let ds_a = d_s(gd, l, |v| &v.a_r);
        fdu_sr.add(grid, l, &sub(&ds_a, &lvl.f_sr), n * n, &[&ds_a, &lvl.f_sr]);
        let ds_psi = d_s(gd, l, |v| &v.psi_r);
        let dr_psis = ops.d_r(&lvl.psi_s, Parity::Even, &lvl.a_r);
        dsps_r.add(grid, l, &sub(&ds_psi, &dr_psis), n, &[&ds_psi, &dr_psis]);
        // D^b F_{sb} = R(D^b psi_s, psi_b) + R(psi_s, psi_s); the last term vanishes.
        let f = &lvl.f_sr;
        let df = add(
            &add(&d_dr4(grid, f, n * n, Parity::Odd), &nodal(f, &scale(grid.coth(), ops.dm1), n * n)),
            &commutator(&lvl.a_r, f, n),
        );
        let rhs = curvature(&dr_psis, &lvl.psi_r, n);
        sdiv.add(grid, l, &sub(&df, &rhs), n * n, &[&df, &rhs]);
    }
    fdu_sr.finish(&mut report, "Fdu_sr");
    dsps_r.finish(&mut report, "Dsps_r");
    sdiv.finish(&mut report, "sdivFs");

    let mut heat = Acc::new();
    for l in 0..gd.levels.len() {
        let lvl = &gd.levels[l];
        let div = ops.divergence(&lvl.psi_r, &lvl.a_r);
        heat.add(grid, l, &sub(&lvl.psi_s, &div), n, &[&lvl.psi_s, &div]);
    }
    heat.finish(&mut report, "heat_tension");

    if gd.dt.is_some() {
        let mut fdu_tr = Acc::new();
        let mut abba = Acc::new();
        for l in 0..gd.levels.len() {
            let lvl = &gd.levels[l];
            let tl = time(lvl);
            let f_a = add(&sub(&tl.dt_a_r, &d_dr(grid, &tl.a_t, n * n, Parity::Even)), &commutator(&tl.a_t, &lvl.a_r, n));
            fdu_tr.add(grid, l, &sub(&f_a, &tl.f_tr), n * n, &[&f_a, &tl.f_tr]);
            let dt_psi_r = add(&tl.dt_psi_r, &matvec(&tl.a_t, &lvl.psi_r, n));
            let dr_psi_t = ops.d_r(&tl.psi_t, Parity::Even, &lvl.a_r);
            abba.add(grid, l, &sub(&dt_psi_r, &dr_psi_t), n, &[&dt_psi_r, &dr_psi_t]);
        }
        fdu_tr.finish(&mut report, "Fdu_tr");
        abba.finish(&mut report, "abba");

        let mut fdu_st = Acc::new();
        let mut dsps_t = Acc::new();
        for l in ladder_interior(gd) {
            let lvl = &gd.levels[l];
            let tl = time(lvl);
            // F_st = d_s A_t - d_t A_s + [A_s, A_t] = d_s A_t in the caloric gauge.
            let ds_a = d_s(gd, l, |v| &time(v).a_t);
            fdu_st.add(grid, l, &sub(&ds_a, &tl.f_st), n * n, &[&ds_a, &tl.f_st]);
            let ds_psi = d_s(gd, l, |v| &time(v).psi_t);
            let dt_psis = add(&tl.dt_psi_s, &matvec(&tl.a_t, &lvl.psi_s, n));
            dsps_t.add(grid, l, &sub(&ds_psi, &dt_psis), n, &[&ds_psi, &dt_psis]);
        }
        fdu_st.finish(&mut report, "Fdu_st");
        dsps_t.finish(&mut report, "Dsps_t");

        let mut w0 = Acc::new();
        let (w, dtp, div) = tension_at(gd, &ops, 0);
        w0.add(grid, 0, &w, n, &[&dtp, &div]);
        w0.finish(&mut report, "wave_tension_s0");
    }
    Ok(report)
}

/// Residual of `(d_s - D^b D_b - c) psi_r = F_r^b psi_b = 0` (radial case)
/// for a given curvature-shift coefficient `c`.
pub fn pxh_residual<T: Real>(gd: &GaugeData<T>, coefficient: T) -> Result<ResidualEntry<T>> {
    require_ladder(gd)?;
    let ops = Ops::new(gd);
    let n = gd.n;
    let mut acc = Acc::new();
    for l in ladder_interior(gd) {
        let lvl = &gd.levels[l];
        let ds_psi = d_s(gd, l, |v| &v.psi_r);
        let lap = ops.lap_oneform(&lvl.psi_r, &lvl.a_r);
        let shift = scale(&lvl.psi_r, coefficient);
        let res = sub(&sub(&ds_psi, &lap), &shift);
        acc.add(&gd.grid, l, &res, n, &[&ds_psi, &lap, &shift]);
    }
    Ok(acc.entry)
}

/// Covariant heat equations for `psi_s`, `psi_t`, `psi_r` and the covariant
/// wave equation for `psi_s`. The `psi_r` shift coefficient is `d - 1`.
pub fn dynamic_residuals<T: Real>(gd: &GaugeData<T>) -> Result<ResidualReport<T>> {
    require_ladder(gd)?;
    require_time(gd)?;
    let ops = Ops::new(gd);
    let n = gd.n;
    let grid = &*gd.grid;
    let mut report = ResidualReport::new(gd);
    report.entries.insert("pxh".into(), pxh_residual(gd, ops.dm1)?);

    let tensions: Vec<Vec<T>> = (0..gd.levels.len()).map(|l| tension_at(gd, &ops, l).0).collect();
    let (mut psh, mut pth, mut wmp) = (Acc::new(), Acc::new(), Acc::new());
    for l in ladder_interior(gd) {
        let lvl = &gd.levels[l];
        let tl = time(lvl);
        let lap_s = ops.lap_scalar(&lvl.psi_s, Parity::Even, &lvl.a_r);
        let ds_psis = d_s(gd, l, |v| &v.psi_s);
        let f_psi = matvec(&lvl.f_sr, &lvl.psi_r, n);
        psh.add(grid, l, &sub(&sub(&ds_psis, &lap_s), &f_psi), n, &[&ds_psis, &lap_s, &f_psi]);

        let lap_t = ops.lap_scalar(&tl.psi_t, Parity::Even, &lvl.a_r);
        let ds_psit = d_s(gd, l, |v| &time(v).psi_t);
        let ft_psi = matvec(&tl.f_tr, &lvl.psi_r, n);
        pth.add(grid, l, &sub(&sub(&ds_psit, &lap_t), &ft_psi), n, &[&ds_psit, &lap_t, &ft_psi]);

        // D_t D_t psi_s = d_tt psi_s + (d_t A_t) psi_s + A_t d_t psi_s + A_t D_t psi_s.
        let dtps = add(&tl.dt_psi_s, &matvec(&tl.a_t, &lvl.psi_s, n));
        let dtdt = add(
            &add(&tl.dtt_psi_s, &matvec(&tl.dt_a_t, &lvl.psi_s, n)),
            &add(&matvec(&tl.a_t, &tl.dt_psi_s, n), &matvec(&tl.a_t, &dtps, n)),
        );
        let denom = T::lit(2.0) * gd.rho.ln() * gd.s_levels[l];
        let ds_w: Vec<T> = sub(&tensions[l + 1], &tensions[l - 1]).into_iter().map(|x| x / denom).collect();
        // F_s^alpha psi_alpha = -F_st psi_t + F_sr psi_r.
        let fs_psi = sub(&f_psi, &matvec(&tl.f_st, &tl.psi_t, n));
        let lhs = sub(&lap_s, &dtdt);
        let res = add(&sub(&lhs, &ds_w), &fs_psi);
        wmp.add(grid, l, &res, n, &[&dtdt, &lap_s, &ds_w, &fs_psi]);
    }
    psh.finish(&mut report, "psh");
    pth.finish(&mut report, "pth");
    wmp.finish(&mut report, "wmp");
    Ok(report)
}
