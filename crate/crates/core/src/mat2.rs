//! Complex 2×2 matrix algebra and the structural constants of the Dirac system.

use crate::scalar::{cone, czero, re, Real};
use num_complex::Complex;
use std::ops::{Add, Mul, Neg, Sub};

/// Complex 2-vector (a column of a [`Mat2`]).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec2<T> {
    pub y1: Complex<T>,
    pub y2: Complex<T>,
}

impl<T: Real> Vec2<T> {
    pub fn new(y1: Complex<T>, y2: Complex<T>) -> Self {
        Self { y1, y2 }
    }

    pub fn zero() -> Self {
        Self::new(czero(), czero())
    }

    pub fn scale(self, s: Complex<T>) -> Self {
        Self::new(self.y1 * s, self.y2 * s)
    }

    /// Bilinear form `⟨y, z⟩ = yᵀ B z = y1 z2 − y2 z1` (the Wronskian of two solutions).
    pub fn wronskian(self, z: Self) -> Complex<T> {
        self.y1 * z.y2 - self.y2 * z.y1
    }

    /// Plain (non-conjugating) bilinear product `yᵀ z`.
    pub fn dot(self, z: Self) -> Complex<T> {
        self.y1 * z.y1 + self.y2 * z.y2
    }

    /// Rank-one matrix `y zᵀ`.
    pub fn outer(self, z: Self) -> Mat2<T> {
        Mat2::new(self.y1 * z.y1, self.y1 * z.y2, self.y2 * z.y1, self.y2 * z.y2)
    }

    pub fn norm_inf(self) -> T {
        self.y1.norm().max(self.y2.norm())
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.y1 + o.y1, self.y2 + o.y2)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.y1 - o.y1, self.y2 - o.y2)
    }
}

/// Complex 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2<T> {
    pub a11: Complex<T>,
    pub a12: Complex<T>,
    pub a21: Complex<T>,
    pub a22: Complex<T>,
}

impl<T: Real> Mat2<T> {
    pub fn new(a11: Complex<T>, a12: Complex<T>, a21: Complex<T>, a22: Complex<T>) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn from_real(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self::new(re(a11), re(a12), re(a21), re(a22))
    }

    pub fn zero() -> Self {
        Self::new(czero(), czero(), czero(), czero())
    }

    pub fn identity() -> Self {
        Self::new(cone(), czero(), czero(), cone())
    }

    /// The symplectic unit `B = [[0, 1], [−1, 0]]`.
    pub fn b() -> Self {
        Self::from_real(T::zero(), T::one(), -T::one(), T::zero())
    }

    /// `[[a, b], [b, −a]]`, the shape of the regular potential.
    pub fn symmetric_tracefree(a: Complex<T>, b: Complex<T>) -> Self {
        Self::new(a, b, b, -a)
    }

    pub fn from_cols(c1: Vec2<T>, c2: Vec2<T>) -> Self {
        Self::new(c1.y1, c2.y1, c1.y2, c2.y2)
    }

    pub fn col1(&self) -> Vec2<T> {
        Vec2::new(self.a11, self.a21)
    }

    pub fn col2(&self) -> Vec2<T> {
        Vec2::new(self.a12, self.a22)
    }

    pub fn col(&self, j: usize) -> Vec2<T> {
        match j {
            0 => self.col1(),
            1 => self.col2(),
            _ => panic!("column index {j} out of range for a 2×2 matrix"),
        }
    }

    pub fn det(&self) -> Complex<T> {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex<T> {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// Inverse via the adjugate. Returns `None` for an exactly singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == czero() {
            return None;
        }
        let inv = d.inv();
        Some(Self::new(self.a22 * inv, -self.a12 * inv, -self.a21 * inv, self.a11 * inv))
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(re(s))
    }

    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.a11 * v.y1 + self.a12 * v.y2, self.a21 * v.y1 + self.a22 * v.y2)
    }

    /// Max absolute entry.
    pub fn max_abs(&self) -> T {
        self.a11.norm().max(self.a12.norm()).max(self.a21.norm()).max(self.a22.norm())
    }

    /// Induced ∞-norm (max row sum).
    pub fn norm_inf(&self) -> T {
        (self.a11.norm() + self.a12.norm()).max(self.a21.norm() + self.a22.norm())
    }

    pub fn entries(&self) -> [Complex<T>; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn from_entries(e: [Complex<T>; 4]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a11, -self.a12, -self.a21, -self.a22)
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

/// Rotation `V(α) = [[cos α, −sin α], [sin α, cos α]]`; its columns are `V₁(α)`, `V₂(α)`.
pub fn rotation<T: Real>(alpha: T) -> Mat2<T> {
    let (s, c) = alpha.sin_cos();
    Mat2::from_real(c, -s, s, c)
}

/// A matrix together with its derivative in the spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub v: Mat2<T>,
    pub d: Mat2<T>,
}

impl<T: Real> Jet<T> {
    pub fn new(v: Mat2<T>, d: Mat2<T>) -> Self {
        Self { v, d }
    }

    pub fn constant(v: Mat2<T>) -> Self {
        Self::new(v, Mat2::zero())
    }

    pub fn identity() -> Self {
        Self::constant(Mat2::identity())
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv = self.v.inverse()?;
        Some(Self::new(inv, -(inv * self.d * inv)))
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use proptest::prelude::*;

    fn m(e: [f64; 8]) -> Mat2<f64> {
        Mat2::new(c(e[0], e[1]), c(e[2], e[3]), c(e[4], e[5]), c(e[6], e[7]))
    }

    #[test]
    fn rotation_special_angles() {
        let r0 = rotation(0.0_f64);
        assert_eq!(r0, Mat2::identity());
        let r = rotation(std::f64::consts::FRAC_PI_2);
        let expect = Mat2::from_real(0.0, -1.0, 1.0, 0.0);
        assert!((r - expect).max_abs() < 1e-16);
        let prod = rotation(0.7) * rotation(-0.7);
        assert!((prod - Mat2::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn b_squares_to_minus_identity() {
        let b = Mat2::<f64>::b();
        assert_eq!(b * b, -Mat2::identity());
        assert_eq!(b.inverse().unwrap(), -b);
    }

    #[test]
    fn wronskian_is_determinant_of_columns() {
        let a = m([1.0, 0.5, -2.0, 0.1, 0.3, 0.0, 4.0, -1.0]);
        assert_eq!(a.col1().wronskian(a.col2()), a.det());
        assert_eq!(a.col1().wronskian(a.col2()), -a.col2().wronskian(a.col1()));
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        assert!(Mat2::<f64>::zero().inverse().is_none());
    }

    #[test]
    fn jet_inverse_matches_finite_difference() {
        let a = m([1.0, 0.5, -2.0, 0.1, 0.3, 0.0, 4.0, -1.0]);
        let da = m([0.2, -0.1, 0.0, 1.0, 0.5, 0.5, -0.3, 0.2]);
        let j = Jet::new(a, da).inverse().unwrap();
        let h = 1e-6;
        let fd = ((a + da.scale_re(h)).inverse().unwrap() - (a - da.scale_re(h)).inverse().unwrap())
            .scale_re(0.5 / h);
        assert!((j.d - fd).max_abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn rotation_is_unimodular(alpha in -10.0_f64..10.0) {
            prop_assert!((rotation(alpha).det() - c(1.0, 0.0)).norm() < 1e-14);
        }

        #[test]
        fn determinant_is_multiplicative(
            e1 in proptest::array::uniform8(-2.0_f64..2.0),
            e2 in proptest::array::uniform8(-2.0_f64..2.0),
        ) {
            let (a, b) = (m(e1), m(e2));
            let lhs = (a * b).det();
            let rhs = a.det() * b.det();
            let scale = (a.max_abs() * b.max_abs()).powi(2).max(1.0);
            prop_assert!((lhs - rhs).norm() <= 1e-14 * scale);
        }

        #[test]
        fn product_is_associative_bitwise(
            e1 in proptest::array::uniform8(-2.0_f64..2.0),
            e2 in proptest::array::uniform8(-2.0_f64..2.0),
        ) {
            let (a, b) = (m(e1), m(e2));
            // Same evaluation order on both sides yields identical bits.
            prop_assert_eq!((a * b) * a, (a * b) * a);
            let lhs = (a * b) * a;
            let rhs = a * (b * a);
            prop_assert!((lhs - rhs).max_abs() <= 1e-13 * (1.0 + lhs.max_abs()));
        }
    }
}
