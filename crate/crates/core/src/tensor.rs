//! Small fixed-size linear algebra: points and symmetric 2x2 tensors.

use std::ops::{Add, Mul, Sub};

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when counterclockwise.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// General 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub fn from_columns(c0: Point, c1: Point) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.0;
        [m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]]
    }

    /// `Aᵀ S A`, which is symmetric for symmetric `S`.
    pub fn congruence(&self, s: &Sym2) -> Sym2 {
        let r = self.transpose().mul(&s.to_mat()).mul(self);
        Sym2::new(r.0[0][0], 0.5 * (r.0[0][1] + r.0[1][0]), r.0[1][1])
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> [f64; 2] {
        let g = self.transpose().congruence(&Sym2::identity());
        let [l0, l1] = g.eigenvalues();
        [l0.max(0.0).sqrt(), l1.max(0.0).sqrt()]
    }
}

/// Symmetric 2x2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub const fn identity() -> Self {
        Sym2::new(1.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Sym2::new(0.0, 0.0, 0.0)
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2::new(a, 0.0, b)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2([[self.xx, self.xy], [self.xy, self.yy]])
    }

    pub fn apply(&self, p: Point) -> Point {
        [self.xx * p[0] + self.xy * p[1], self.xy * p[0] + self.yy * p[1]]
    }

    /// `vᵀ S v`.
    pub fn quad(&self, v: Point) -> f64 {
        self.xx * v[0] * v[0] + 2.0 * self.xy * v[0] * v[1] + self.yy * v[1] * v[1]
    }

    pub fn is_spd(&self) -> bool {
        self.xx.is_finite()
            && self.xy.is_finite()
            && self.yy.is_finite()
            && self.trace() > 0.0
            && self.det() > 0.0
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let rad = half_diff.hypot(self.xy);
        [mean + rad, mean - rad]
    }

    /// Eigenvalues (largest first) with unit eigenvectors.
    pub fn eigen(&self) -> ([f64; 2], [Point; 2]) {
        let lam = self.eigenvalues();
        let half_diff = 0.5 * (self.xx - self.yy);
        // angle of the leading eigenvector
        let theta = 0.5 * self.xy.atan2(half_diff);
        let (s, c) = theta.sin_cos();
        (lam, [[c, s], [-s, c]])
    }

    /// Reassemble `Σ λᵢ vᵢ vᵢᵀ`.
    pub fn from_eigen(lam: [f64; 2], vecs: [Point; 2]) -> Sym2 {
        let [a, b] = lam;
        let [u, v] = vecs;
        Sym2::new(
            a * u[0] * u[0] + b * v[0] * v[0],
            a * u[0] * u[1] + b * v[0] * v[1],
            a * u[1] * u[1] + b * v[1] * v[1],
        )
    }

    /// Apply `g` to the eigenvalues, keeping the eigenvectors.
    pub fn map_eigenvalues(&self, g: impl Fn(f64) -> f64) -> Sym2 {
        let (lam, vecs) = self.eigen();
        Sym2::from_eigen([g(lam[0]), g(lam[1])], vecs)
    }

    pub fn max_abs_diff(&self, o: &Sym2) -> f64 {
        (self.xx - o.xx)
            .abs()
            .max((self.xy - o.xy).abs())
            .max((self.yy - o.yy).abs())
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reassembles() {
        let s = Sym2::new(2.0, -0.7, -1.5);
        let (lam, v) = s.eigen();
        assert!(Sym2::from_eigen(lam, v).max_abs_diff(&s) < 1e-14);
        assert!(dot(v[0], v[1]).abs() < 1e-15);
        let r = s.apply(v[0]);
        assert!((r[0] - lam[0] * v[0][0]).abs() < 1e-14);
        assert!((r[1] - lam[0] * v[0][1]).abs() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let s = Sym2::new(3.0, 1.0, 2.0);
        let i = s.inverse().unwrap();
        let p = s.to_mat().mul(&i.to_mat());
        assert!((p.0[0][0] - 1.0).abs() < 1e-15 && p.0[0][1].abs() < 1e-15);
        assert!(Sym2::new(1.0, 1.0, 1.0).inverse().is_none());
    }

    #[test]
    fn singular_values_of_rotation_scaling() {
        let (s, c) = 0.3f64.sin_cos();
        let m = Mat2([[2.0 * c, -0.5 * s], [2.0 * s, 0.5 * c]]);
        let sv = m.singular_values();
        assert!((sv[0] - 2.0).abs() < 1e-12 && (sv[1] - 0.5).abs() < 1e-12);
    }
}
