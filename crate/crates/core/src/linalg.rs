//! Dense complex matrices: LU with partial pivoting, solves and condition estimates.

use crate::scalar::{cone, czero, Real};
use num_complex::Complex;
use std::ops::{Index, IndexMut};

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![czero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, v| s + v.norm()))
            .fold(T::zero(), T::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n).map(|i| self.row(i).iter().zip(v).fold(czero(), |s, (a, b)| s + *a * *b)).collect()
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == czero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * o.data[k * n + j];
                }
            }
        }
        out
    }

    /// `I − self`.
    pub fn one_minus(&self) -> Self {
        let mut m = Self { n: self.n, data: self.data.iter().map(|v| -*v).collect() };
        for i in 0..self.n {
            m[(i, i)] = m[(i, i)] + cone();
        }
        m
    }

    /// `I + self`.
    pub fn one_plus(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] = m[(i, i)] + cone();
        }
        m
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| *a - *b).collect() }
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

/// `PA = LU` with unit lower `L`, stored in place.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Factorizes `a`; `None` when a pivot vanishes exactly.
    pub fn new(a: &CMatrix<T>) -> Option<Self> {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[(i, k)].norm().partial_cmp(&lu[(j, k)].norm()).unwrap_or(std::cmp::Ordering::Equal))?;
            if lu[(p, k)].norm() == T::zero() || !lu[(p, k)].norm().is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == czero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu.data[k * n + j];
                    lu.data[i * n + j] = lu.data[i * n + j] - f * u;
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lu.n;
        let mut y: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s = (0..i).fold(y[i], |s, j| s - row[j] * y[j]);
            y[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = (i + 1..n).fold(y[i], |s, j| s - row[j] * y[j]);
            y[i] = s / row[i];
        }
        y
    }

    pub fn inverse(&self) -> CMatrix<T> {
        let n = self.lu.n;
        let mut inv = CMatrix::zeros(n);
        let mut e = vec![czero::<T>(); n];
        for j in 0..n {
            e[j] = cone();
            let col = self.solve(&e);
            e[j] = czero();
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// `‖A‖∞ ‖A⁻¹‖∞` from an explicit inverse.
pub fn condition_inf<T: Real>(a: &CMatrix<T>, lu: &Lu<T>) -> T {
    a.norm_inf() * lu.inverse().norm_inf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use proptest::prelude::*;

    fn from_rows(rows: &[&[Complex<f64>]]) -> CMatrix<f64> {
        let n = rows.len();
        let mut m = CMatrix::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    #[test]
    fn solves_with_pivoting() {
        let a = from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(2.0, 1.0), c(3.0, 0.0)]]);
        let lu = Lu::new(&a).unwrap();
        let b = [c(1.0, 0.0), c(0.0, 1.0)];
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        assert!((r[0] - b[0]).norm() < 1e-15 && (r[1] - b[1]).norm() < 1e-15);
        // x2 = 1, (2+i)x1 = i − 3
        assert!((x[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[0] - c(-3.0, 1.0) / c(2.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_has_no_factorization() {
        let a = from_rows(&[&[c(1.0, 0.0), c(2.0, 0.0)], &[c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(Lu::new(&a).is_none());
    }

    #[test]
    fn condition_of_diagonal() {
        let a = from_rows(&[&[c(1e3, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(0.0, 1e-2)]]);
        let lu = Lu::new(&a).unwrap();
        assert!((condition_inf(&a, &lu) - 1e5).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn inverse_is_two_sided(entries in proptest::collection::vec(-1.0f64..1.0, 2 * 36)) {
            let n = 6;
            let mut a = CMatrix::<f64>::identity(n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] * c(3.0, 0.0) + c(entries[2 * (i * n + j)], entries[2 * (i * n + j) + 1]);
                }
            }
            let lu = Lu::new(&a).unwrap();
            let inv = lu.inverse();
            let err = a.matmul(&inv).sub(&CMatrix::identity(n)).max_abs();
            prop_assert!(err < 1e-12);
            let err = inv.matmul(&a).sub(&CMatrix::identity(n)).max_abs();
            prop_assert!(err < 1e-12);
        }
    }
}
