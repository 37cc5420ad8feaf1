//! Fixed-size 2-vectors and 2×2 matrices, plus a banded LU solver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A point or vector in the plane, written `(x, t)` throughout.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2::new(0.0, 0.0);

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }
    /// z-component of the planar cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }
    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
    /// Quarter turn `J v` with `J = (0 1; -1 0)`.
    pub fn rot_j(self) -> Self {
        Self::new(self.y, -self.x)
    }
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Vec2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}
impl Sub for Vec2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}
impl Neg for Vec2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}
impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v.scale(self)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    /// The rotation `J = (0 1; -1 0)` used by the conjugate system.
    pub const J: Mat2 = Mat2::new(0.0, 1.0, -1.0, 0.0);

    pub fn from_cols(c0: Vec2, c1: Vec2) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }
    pub fn diag(p: f64, q: f64) -> Self {
        Self::new(p, 0.0, 0.0, q)
    }
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }
    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }
    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }
    /// Symmetric part `(M + Mᵗ)/2`.
    pub fn sym(&self) -> Self {
        let off = 0.5 * (self.b + self.c);
        Self::new(self.a, off, off, self.d)
    }
    /// Antisymmetric coefficient `(b − c)/2`, so that `M = sym + s·J`.
    pub fn skew(&self) -> f64 {
        0.5 * (self.b - self.c)
    }
    /// Largest entry in absolute value, the matrix norm `|F|` used for
    /// matrix-valued functions.
    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
    /// Entrywise (Frobenius) inner product `tr(Mᵗ N)`.
    pub fn frob(&self, o: &Self) -> f64 {
        self.a * o.a + self.b * o.b + self.c * o.c + self.d * o.d
    }
    /// Smallest eigenvalue of the symmetric part, i.e. `min ξ·Mξ/|ξ|²`.
    pub fn min_quadratic(&self) -> f64 {
        let s = self.sym();
        let m = 0.5 * (s.a + s.d);
        let r = libm::hypot(0.5 * (s.a - s.d), s.b);
        m - r
    }
    /// Positive square root of a symmetric positive definite matrix.
    pub fn sqrt_spd(&self) -> Self {
        let s = libm::sqrt(self.det());
        let t = libm::sqrt(self.trace() + 2.0 * s);
        Self::new((self.a + s) / t, self.b / t, self.c / t, (self.d + s) / t)
    }
}

impl Add for Mat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}
impl Sub for Mat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}
impl Mul for Mat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}
impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

/// Square banded matrix stored by diagonals, factorised in place by LU
/// without pivoting.
///
/// Skipping pivoting is safe for the stiffness matrices assembled here: the
/// symmetric part of every element matrix is positive semi-definite and the
/// Dirichlet rows are eliminated, which keeps the elimination growth bounded.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    w: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandMatrix {
    /// Zero matrix of order `n` with half bandwidth `w`.
    pub fn zeros(n: usize, w: usize) -> Self {
        Self { n, w, data: vec![0.0; n * (2 * w + 1)], factored: false }
    }
    pub fn order(&self) -> usize {
        self.n
    }
    pub fn half_bandwidth(&self) -> usize {
        self.w
    }
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.w >= i && j <= i + self.w);
        i * (2 * self.w + 1) + (j + self.w - i)
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.w < i || j > i + self.w {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }
    /// `y = M x` (only valid before factorisation).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.w);
            let hi = (i + self.w + 1).min(self.n);
            let mut acc = 0.0;
            for j in lo..hi {
                acc += self.data[self.idx(i, j)] * x[j];
            }
            *yi = acc;
        }
        y
    }
    /// In-place LU factorisation.
    pub fn factor(&mut self) -> Result<()> {
        let (n, w) = (self.n, self.w);
        let stride = 2 * w + 1;
        for k in 0..n {
            let pivot = self.data[k * stride + w];
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::Singular(k));
            }
            let hi = (k + w + 1).min(n);
            for i in (k + 1)..hi {
                let ik = i * stride + (k + w - i);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in (k + 1)..hi {
                    let kj = k * stride + (j + w - k);
                    let ij = i * stride + (j + w - i);
                    self.data[ij] -= l * self.data[kj];
                }
            }
        }
        self.factored = true;
        Ok(())
    }
    /// Solve with a previously factorised matrix.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert!(self.factored, "factor() must be called before solve()");
        let (n, w) = (self.n, self.w);
        let stride = 2 * w + 1;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let mut acc = x[i];
            for (k, xk) in x.iter().enumerate().take(i).skip(lo) {
                acc -= self.data[i * stride + (k + w - i)] * xk;
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + w + 1).min(n);
            let mut acc = x[i];
            for (j, xj) in x.iter().enumerate().take(hi).skip(i + 1) {
                acc -= self.data[i * stride + (j + w - i)] * xj;
            }
            x[i] = acc / self.data[i * stride + w];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_spd_squares_back() {
        let m = Mat2::new(4.0, 1.0, 1.0, 3.0);
        let r = m.sqrt_spd();
        let back = r * r;
        assert!((back - m).max_abs() < 1e-14);
    }

    #[test]
    fn banded_solve_matches_dense_tridiagonal() {
        let n = 50;
        let mut m = BandMatrix::zeros(n, 1);
        for i in 0..n {
            m.add(i, i, 4.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = m.matvec(&x);
        m.factor().unwrap();
        let y = m.solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn min_quadratic_ignores_skew_part() {
        let m = Mat2::new(1.0, 3.0, -3.0, 1.0);
        assert!((m.min_quadratic() - 1.0).abs() < 1e-15);
    }
}
