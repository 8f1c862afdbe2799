//! Small dense matrices (frame rotations, connection coefficients) and a
//! tridiagonal solver for the implicit heat steps.

use crate::scalar::Real;

/// Row-major square matrix of small fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMat<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> SmallMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from a row-major slice of length `n*n`.
    pub fn from_rows(n: usize, a: &[T]) -> Self {
        assert_eq!(a.len(), n * n, "matrix data length");
        Self { n, a: a.to_vec() }
    }

    /// Plane rotation by `theta` in the (i, j) coordinate plane.
    pub fn rotation(n: usize, i: usize, j: usize, theta: T) -> Self {
        let mut m = Self::identity(n);
        let (s, c) = theta.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(i, j)] = -s;
        m[(j, i)] = s;
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.a
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut r = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                for j in 0..n {
                    r[(i, j)] = r[(i, j)] + aik * o[(k, j)];
                }
            }
        }
        r
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { n: self.n, a: self.a.iter().zip(&o.a).map(|(&x, &y)| x + y).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { n: self.n, a: self.a.iter().zip(&o.a).map(|(&x, &y)| x - y).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { n: self.n, a: self.a.iter().map(|&x| x * s).collect() }
    }

    /// Commutator `[self, o]`.
    pub fn commutator(&self, o: &Self) -> Self {
        self.matmul(o).sub(&o.matmul(self))
    }

    /// Antisymmetric part `(M - M^T)/2`.
    pub fn antisym(&self) -> Self {
        self.sub(&self.transpose()).scale(T::lit(0.5))
    }

    /// Symmetric part `(M + M^T)/2`.
    pub fn sym(&self) -> Self {
        self.add(&self.transpose()).scale(T::lit(0.5))
    }

    /// Frobenius (Hilbert-Schmidt) norm.
    pub fn frobenius(&self) -> T {
        self.a.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> T {
        let n = self.n;
        let mut m = self.a.clone();
        let mut det = T::one();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| m[x * n + c].abs().partial_cmp(&m[y * n + c].abs()).unwrap()).unwrap();
            if m[p * n + c] == T::zero() {
                return T::zero();
            }
            if p != c {
                for j in 0..n {
                    m.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = m[c * n + c];
            det = det * piv;
            for r in c + 1..n {
                let f = m[r * n + c] / piv;
                for j in c..n {
                    m[r * n + j] = m[r * n + j] - f * m[c * n + j];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut m = self.a.clone();
        let mut inv = Self::identity(n).a;
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| m[x * n + c].abs().partial_cmp(&m[y * n + c].abs()).unwrap()).unwrap();
            if m[p * n + c].abs() <= T::min_positive_value() {
                return None;
            }
            for j in 0..n {
                m.swap(p * n + j, c * n + j);
                inv.swap(p * n + j, c * n + j);
            }
            let piv = m[c * n + c];
            for j in 0..n {
                m[c * n + j] = m[c * n + j] / piv;
                inv[c * n + j] = inv[c * n + j] / piv;
            }
            for r in 0..n {
                if r != c {
                    let f = m[r * n + c];
                    if f != T::zero() {
                        for j in 0..n {
                            m[r * n + j] = m[r * n + j] - f * m[c * n + j];
                            inv[r * n + j] = inv[r * n + j] - f * inv[c * n + j];
                        }
                    }
                }
            }
        }
        Some(Self { n, a: inv })
    }

    /// Orthogonal factor of the polar decomposition, by Newton iteration
    /// `X <- (X + X^{-T}) / 2`. This is the orthogonal Procrustes solution.
    pub fn polar_orthogonal(&self) -> Option<Self> {
        let mut x = self.clone();
        let tol = T::epsilon() * T::lit(16.0);
        for _ in 0..100 {
            let next = x.add(&x.inverse()?.transpose()).scale(T::lit(0.5));
            let delta = next.sub(&x).frobenius();
            x = next;
            if delta <= tol * T::of(self.n) {
                break;
            }
        }
        // One more sweep polishes the last ulp-level drift.
        Some(x.add(&x.inverse()?.transpose()).scale(T::lit(0.5)))
    }
}

impl<T> std::ops::Index<(usize, usize)> for SmallMat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.a[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SmallMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.a[i * self.n + j]
    }
}

/// Solves a tridiagonal system with sub-diagonal `a` (a[0] unused),
/// diagonal `b` and super-diagonal `c` (c[n-1] unused), overwriting `rhs`.
pub fn solve_tridiagonal<T: Real>(a: &[T], b: &[T], c: &[T], rhs: &mut [T]) {
    let n = b.len();
    let mut cp = vec![T::zero(); n];
    let mut beta = b[0];
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        cp[i - 1] = c[i - 1] / beta;
        beta = b[i] - a[i] * cp[i - 1];
        rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - cp[i] * rhs[i + 1];
    }
}
