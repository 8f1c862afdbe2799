//! Target manifolds: the round sphere `S^n` embedded in `R^{n+1}` and the
//! polar-metric targets `d psi^2 + g(psi)^2 d theta^2` of the equivariant
//! reduction, together with the explicit harmonic profiles `P_lambda`,
//! `Q_lambda`.

use crate::error::{CaloricError, Result};
use crate::geometry::{OuterBoundary, Parity, RadialGrid};
use crate::scalar::Real;

/// Relative tolerance for tangency preconditions.
const TANGENCY_TOL: f64 = 1e-8;

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Closest-point projection onto the unit sphere.
pub fn project_to_sphere<T: Real>(v: &[T]) -> Result<Vec<T>> {
    let len = norm(v);
    if !(len > T::zero()) {
        return Err(CaloricError::DegenerateProjection);
    }
    if len == T::one() {
        return Ok(v.to_vec());
    }
    Ok(v.iter().map(|&x| x / len).collect())
}

/// Unit sphere `S^n` in `R^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereTarget {
    n: usize,
}

impl SphereTarget {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(CaloricError::InvalidParameter {
                name: "n".into(),
                reason: "sphere dimension must be at least 1".into(),
            });
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    fn check_tangent<T: Real>(&self, u: &[T], vs: &[&[T]]) -> Result<()> {
        for v in vs {
            if v.len() != self.ambient_dim() || u.len() != self.ambient_dim() {
                return Err(CaloricError::ShapeMismatch { expected: self.ambient_dim(), found: v.len() });
            }
            let residual = dot(u, v).abs();
            let tolerance = T::lit(TANGENCY_TOL) * (T::one() + norm(v));
            if residual > tolerance {
                return Err(CaloricError::TangencyViolation {
                    residual: residual.to_f64_lossy(),
                    tolerance: tolerance.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// `S(u)(X, Y) = -<X, Y> u`, the normal acceleration of curves on the
    /// sphere (a great circle through `u` with velocity `X` has second
    /// derivative `-|X|^2 u`).
    pub fn second_fundamental_form<T: Real>(&self, u: &[T], x: &[T], y: &[T]) -> Result<Vec<T>> {
        self.check_tangent(u, &[x, y])?;
        let c = dot(x, y);
        Ok(u.iter().map(|&ui| -c * ui).collect())
    }

    /// `R(X, Y) Z = <Y, Z> X - <X, Z> Y` (sectional curvature +1).
    pub fn riemann_curvature<T: Real>(&self, u: &[T], x: &[T], y: &[T], z: &[T]) -> Result<Vec<T>> {
        self.check_tangent(u, &[x, y, z])?;
        let (yz, xz) = (dot(y, z), dot(x, z));
        Ok(x.iter().zip(y).map(|(&xi, &yi)| yz * xi - xz * yi).collect())
    }
}

/// Curvature sign of a polar target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolarKind {
    /// `g = sin`, the round sphere.
    Sphere,
    /// `g = sinh`, the hyperbolic plane.
    Hyperbolic,
}

/// Rotationally symmetric surface `d psi^2 + g(psi)^2 d theta^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarTarget {
    pub kind: PolarKind,
}

impl PolarTarget {
    pub fn sphere() -> Self {
        Self { kind: PolarKind::Sphere }
    }

    pub fn hyperbolic() -> Self {
        Self { kind: PolarKind::Hyperbolic }
    }

    pub fn g<T: Real>(&self, psi: T) -> T {
        match self.kind {
            PolarKind::Sphere => psi.sin(),
            PolarKind::Hyperbolic => psi.sinh(),
        }
    }

    pub fn dg<T: Real>(&self, psi: T) -> T {
        match self.kind {
            PolarKind::Sphere => psi.cos(),
            PolarKind::Hyperbolic => psi.cosh(),
        }
    }

    /// `g(psi) g'(psi)`, written as `sin(2 psi)/2` resp. `sinh(2 psi)/2`.
    pub fn ggp<T: Real>(&self, psi: T) -> T {
        let two = T::lit(2.0);
        match self.kind {
            PolarKind::Sphere => (two * psi).sin() / two,
            PolarKind::Hyperbolic => (two * psi).sinh() / two,
        }
    }
}

/// Harmonic-map family of the 1-equivariant reduction on H^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileFamily {
    /// `P_lambda = 2 artanh(lambda tanh(r/2))`, hyperbolic target, `0 <= lambda < 1`.
    P,
    /// `Q_lambda = 2 arctan(lambda tanh(r/2))`, sphere target, `lambda >= 0`.
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicProfile<T> {
    family: ProfileFamily,
    lambda: T,
}

impl<T: Real> HarmonicProfile<T> {
    pub fn new(family: ProfileFamily, lambda: T) -> Result<Self> {
        let ok = match family {
            ProfileFamily::P => lambda >= T::zero() && lambda < T::one(),
            ProfileFamily::Q => lambda >= T::zero() && lambda.is_finite(),
        };
        if !ok {
            let range = match family {
                ProfileFamily::P => "0 <= lambda < 1",
                ProfileFamily::Q => "lambda >= 0",
            };
            return Err(CaloricError::InvalidParameter {
                name: "lambda".into(),
                reason: format!("{lambda} outside the range {range} for family {family:?}"),
            });
        }
        Ok(Self { family, lambda })
    }

    pub fn family(&self) -> ProfileFamily {
        self.family
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// The polar target the profile is harmonic into.
    pub fn target(&self) -> PolarTarget {
        match self.family {
            ProfileFamily::P => PolarTarget::hyperbolic(),
            ProfileFamily::Q => PolarTarget::sphere(),
        }
    }

    /// Limit of the profile as `r -> infinity`.
    pub fn far_field(&self) -> T {
        let two = T::lit(2.0);
        match self.family {
            ProfileFamily::P => two * self.lambda.atanh(),
            ProfileFamily::Q => two * self.lambda.atan(),
        }
    }

    /// Closed-form energy `4 pi lambda^2 / (1 -+ lambda^2)`.
    pub fn closed_form_energy(&self) -> T {
        let l2 = self.lambda * self.lambda;
        let four_pi = T::lit(4.0) * T::PI();
        match self.family {
            ProfileFamily::P => four_pi * l2 / (T::one() - l2),
            ProfileFamily::Q => four_pi * l2 / (T::one() + l2),
        }
    }
}

/// Angle of the profile at radius `r`.
pub fn harmonic_profile<T: Real>(p: &HarmonicProfile<T>, r: T) -> Result<T> {
    if r < T::zero() || r.is_nan() {
        return Err(CaloricError::InvalidParameter { name: "r".into(), reason: format!("radius {r} must be nonnegative") });
    }
    let two = T::lit(2.0);
    let x = p.lambda * (r / two).tanh();
    Ok(match p.family {
        ProfileFamily::P => two * x.atanh(),
        ProfileFamily::Q => two * x.atan(),
    })
}

/// Static equivariant operator `Delta psi - g(psi) g'(psi) / sinh^2 r`
/// (odd parity). With [`OuterBoundary::Held`] the last row is zero.
pub fn equivariant_tension<T: Real>(
    grid: &RadialGrid<T>,
    psi: &[T],
    target: PolarTarget,
    boundary: OuterBoundary,
    out: &mut [T],
) {
    grid.laplacian_into(psi, Parity::Odd, boundary, out);
    let last = grid.len() - 1;
    for k in 0..grid.len() {
        if k == last && boundary == OuterBoundary::Held {
            break;
        }
        out[k] = out[k] - target.ggp(psi[k]) * grid.inv_sinh2()[k];
    }
}

/// Discrete equivariant energy on H^2 (prefactor `pi` from half the angular
/// measure `2 pi`):
/// `pi * int (psi_t^2 + psi_r^2 + g(psi)^2 / sinh^2 r) sinh r dr`.
pub fn equivariant_energy<T: Real>(grid: &RadialGrid<T>, psi: &[T], psi_t: Option<&[T]>, target: PolarTarget) -> Result<T> {
    if grid.dim() != 2 {
        return Err(CaloricError::UnsupportedDimension(grid.dim()));
    }
    let half = T::lit(0.5);
    let kinetic = psi_t.map_or(T::zero(), |v| grid.inner(v, v));
    let potential: T = (0..grid.len()).map(|k| grid.weights()[k] * target.g(psi[k]).powi(2) * grid.inv_sinh2()[k]).sum();
    Ok(half * (kinetic + grid.dirichlet_form(psi, Parity::Odd) + potential))
}

/// Energy of a harmonic profile together with a truncation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEnergy<T> {
    pub energy: T,
    /// Estimate of the energy beyond `r_max`.
    pub tail: T,
    /// Set when the tail exceeds `1e-6` of the total.
    pub truncated: bool,
}

pub fn profile_energy<T: Real>(grid: &RadialGrid<T>, p: &HarmonicProfile<T>) -> Result<ProfileEnergy<T>> {
    let psi: Vec<T> = grid.nodes().iter().map(|&r| harmonic_profile(p, r)).collect::<Result<_>>()?;
    let energy = equivariant_energy(grid, &psi, None, p.target())?;
    // The energy density decays like e^{-r}; its tail integral is roughly the
    // density at r_max.
    let k = grid.len() - 1;
    let r = grid.r_max();
    let dpsi = (psi[k] - psi[k - 1]) / grid.h();
    let density = T::PI() * (dpsi * dpsi + p.target().g(psi[k]).powi(2) * grid.inv_sinh2()[k]) * r.sinh();
    let tail = density;
    Ok(ProfileEnergy { energy, tail, truncated: tail > T::lit(1e-6) * energy })
}
