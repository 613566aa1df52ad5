//! Fixed-size 2×2 matrix arithmetic.
//!
//! Everything in the bivariate model lives in 2×2 blocks, so the crate carries
//! its own small types instead of pulling in a general linear algebra library.
//! [`Sym2`] stores the three free entries of a symmetric matrix; [`Mat2`] is a
//! general (not necessarily symmetric) matrix used for products such as
//! `D_i⁻¹ D_j D_k⁻¹`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{DtaError, Result};

/// A point or vector in the plane.
pub type Vec2 = [f64; 2];

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

/// General 2×2 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

/// Eigen-decomposition of a [`Sym2`]: `lambda[0] <= lambda[1]`, with unit
/// eigenvectors stored as the columns `vectors[0]`, `vectors[1]`.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    pub lambda: [f64; 2],
    pub vectors: [Vec2; 2],
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { a11: 0.0, a12: 0.0, a22: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Sym2 { a11, a12: 0.0, a22 }
    }

    pub fn scalar(s: f64) -> Self {
        Sym2::diag(s, s)
    }

    /// Constructs a matrix and checks that it is positive semi-definite up to
    /// `tol` on the determinant.
    pub fn new_psd(a11: f64, a12: f64, a22: f64, tol: f64) -> Result<Self> {
        let s = Sym2::new(a11, a12, a22);
        if s.is_psd(tol) {
            Ok(s)
        } else {
            Err(DtaError::NotPsd(s))
        }
    }

    /// Builds the between-study covariance `[[τ², τ²ρ], [τ²ρ, τ²]]`.
    pub fn from_variance_correlation(tau2: f64, rho: f64) -> Self {
        Sym2::new(tau2, tau2 * rho, tau2)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_finite() && self.a11 >= -tol && self.a22 >= -tol && self.det() >= -tol
    }

    pub fn is_pd(&self) -> bool {
        self.is_finite() && self.a11 > 0.0 && self.det() > 0.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(DtaError::Singular(*self));
        }
        Ok(Sym2::new(self.a22 / det, -self.a12 / det, self.a11 / det))
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2 { m: [[self.a11, self.a12], [self.a12, self.a22]] }
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// `vᵗ A v`.
    pub fn quad_form(&self, v: Vec2) -> f64 {
        self.a11 * v[0] * v[0] + 2.0 * self.a12 * v[0] * v[1] + self.a22 * v[1] * v[1]
    }

    /// `vᵗ A⁻¹ v`, solved without forming the inverse explicitly.
    pub fn inv_quad_form(&self, v: Vec2) -> Result<f64> {
        let det = self.det();
        if det <= 0.0 || !det.is_finite() {
            return Err(DtaError::Singular(*self));
        }
        Ok((self.a22 * v[0] * v[0] - 2.0 * self.a12 * v[0] * v[1] + self.a11 * v[1] * v[1]) / det)
    }

    /// Lower-triangular Cholesky factor `L` with `A = L Lᵗ`.
    pub fn cholesky(&self) -> Result<Mat2> {
        if !self.is_pd() {
            return Err(DtaError::NotPositiveDefinite(*self));
        }
        let l11 = self.a11.sqrt();
        let l21 = self.a12 / l11;
        let l22 = (self.a22 - l21 * l21).sqrt();
        Ok(Mat2 { m: [[l11, 0.0], [l21, l22]] })
    }

    pub fn eigen(&self) -> SymEigen {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let radius = half_diff.hypot(self.a12);
        let lo = mean - radius;
        let hi = mean + radius;
        if self.a12 == 0.0 {
            // already diagonal; keep ascending order
            return if self.a11 <= self.a22 {
                SymEigen { lambda: [self.a11, self.a22], vectors: [[1.0, 0.0], [0.0, 1.0]] }
            } else {
                SymEigen { lambda: [self.a22, self.a11], vectors: [[0.0, 1.0], [1.0, 0.0]] }
            };
        }
        // eigenvector of `hi`, taking the better conditioned of the two row equations
        let c1 = [self.a12, hi - self.a11];
        let c2 = [hi - self.a22, self.a12];
        let v = if c1[0].hypot(c1[1]) >= c2[0].hypot(c2[1]) { c1 } else { c2 };
        let norm = v[0].hypot(v[1]);
        let v_hi = [v[0] / norm, v[1] / norm];
        let v_lo = [-v_hi[1], v_hi[0]];
        SymEigen { lambda: [lo, hi], vectors: [v_lo, v_hi] }
    }

    /// Nearest positive semi-definite matrix in Frobenius norm: negative
    /// eigenvalues are clamped to zero.
    pub fn project_psd(&self) -> Sym2 {
        let e = self.eigen();
        if e.lambda[0] >= 0.0 {
            return *self;
        }
        if e.lambda[1] <= 0.0 {
            return Sym2::ZERO;
        }
        let v = e.vectors[1];
        let l = e.lambda[1];
        Sym2::new(l * v[0] * v[0], l * v[0] * v[1], l * v[1] * v[1])
    }

    /// `L Lᵗ` for a lower-triangular `L`.
    pub fn from_cholesky(l11: f64, l21: f64, l22: f64) -> Sym2 {
        Sym2::new(l11 * l11, l11 * l21, l21 * l21 + l22 * l22)
    }

    pub fn max_abs_diff(&self, other: &Sym2) -> f64 {
        (self.a11 - other.a11).abs().max((self.a12 - other.a12).abs()).max((self.a22 - other.a22).abs())
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, rhs: Sym2) -> Sym2 {
        Sym2::new(self.a11 + rhs.a11, self.a12 + rhs.a12, self.a22 + rhs.a22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, rhs: Sym2) -> Sym2 {
        Sym2::new(self.a11 - rhs.a11, self.a12 - rhs.a12, self.a22 - rhs.a22)
    }
}

impl Neg for Sym2 {
    type Output = Sym2;
    fn neg(self) -> Sym2 {
        self.scale(-1.0)
    }
}

impl std::iter::Sum for Sym2 {
    fn sum<I: Iterator<Item = Sym2>>(iter: I) -> Sym2 {
        iter.fold(Sym2::ZERO, |acc, s| acc + s)
    }
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };
    pub const IDENTITY: Mat2 = Mat2 { m: [[1.0, 0.0], [0.0, 1.0]] };

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2 { m: [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]] }
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    /// Symmetric part `(A + Aᵗ)/2`.
    pub fn sym_part(&self) -> Sym2 {
        Sym2::new(self.m[0][0], 0.5 * (self.m[0][1] + self.m[1][0]), self.m[1][1])
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_of_product(&self, rhs: &Mat2) -> f64 {
        let (a, b) = (&self.m, &rhs.m);
        a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.m, &rhs.m);
        Mat2 {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
        }
    }
}

impl Mul<Sym2> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Sym2) -> Mat2 {
        self * rhs.to_mat()
    }
}

impl Mul<Mat2> for Sym2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        self.to_mat() * rhs
    }
}

impl Mul for Sym2 {
    type Output = Mat2;
    fn mul(self, rhs: Sym2) -> Mat2 {
        self.to_mat() * rhs.to_mat()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] += rhs.m[r][c];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] -= rhs.m[r][c];
            }
        }
        out
    }
}

impl std::iter::Sum for Mat2 {
    fn sum<I: Iterator<Item = Mat2>>(iter: I) -> Mat2 {
        iter.fold(Mat2::ZERO, |acc, m| acc + m)
    }
}
