//! Regular potentials `Q(x) = [[q1, q2], [q2, −q1]]`: evaluation and local Taylor data.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::scalar::{czero, lit, re, Real};
use num_complex::Complex;

/// Natural cubic spline through complex samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpline<T> {
    xs: Vec<T>,
    ys: Vec<Complex<T>>,
    m: Vec<Complex<T>>,
}

impl<T: Real> ComplexSpline<T> {
    pub fn new(xs: Vec<T>, ys: Vec<Complex<T>>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::spec("potential.samples", "need at least two samples with matching lengths"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::spec("potential.samples.x", "abscissae must be strictly increasing"));
        }
        // Second derivatives with natural end conditions (Thomas algorithm).
        let mut m = vec![czero::<T>(); n];
        if n > 2 {
            let two = lit::<T>(2.0);
            let six = lit::<T>(6.0);
            let mut cp = vec![T::zero(); n];
            let mut dp = vec![czero::<T>(); n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let rhs = ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0) * six;
                let diag = two * (h0 + h1) - h0 * cp[i - 1];
                cp[i] = h1 / diag;
                dp[i] = (rhs - dp[i - 1] * h0) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = dp[i] - m[i + 1] * cp[i];
            }
        }
        Ok(Self { xs, ys, m })
    }

    pub fn eval(&self, x: T) -> Complex<T> {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let six = lit::<T>(6.0);
        self.ys[i] * a
            + self.ys[i + 1] * b
            + (self.m[i] * (a * a * a - a) + self.m[i + 1] * (b * b * b - b)) * (h * h / six)
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }
}

/// Regular part of the potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential<T> {
    Zero,
    Constant { q1: Complex<T>, q2: Complex<T> },
    /// `q1 = a·sin(w x)`, `q2 = a·cos(w x)`.
    Trig { amplitude: Complex<T>, frequency: T },
    Samples { q1: ComplexSpline<T>, q2: ComplexSpline<T> },
}

/// Degree of the local Chebyshev fit used for sampled potentials.
const SAMPLE_FIT_DEGREE: usize = 12;

impl<T: Real> Potential<T> {
    pub fn eval(&self, x: T) -> (Complex<T>, Complex<T>) {
        match self {
            Potential::Zero => (czero(), czero()),
            Potential::Constant { q1, q2 } => (*q1, *q2),
            Potential::Trig { amplitude, frequency } => {
                let (s, c) = (*frequency * x).sin_cos();
                (*amplitude * s, *amplitude * c)
            }
            Potential::Samples { q1, q2 } => (q1.eval(x), q2.eval(x)),
        }
    }

    pub fn matrix(&self, x: T) -> Mat2<T> {
        let (q1, q2) = self.eval(x);
        Mat2::symmetric_tracefree(q1, q2)
    }

    /// Analytic continuation to complex `z`; `None` for sampled data.
    pub fn matrix_complex(&self, z: Complex<T>) -> Option<Mat2<T>> {
        match self {
            Potential::Zero => Some(Mat2::zero()),
            Potential::Constant { q1, q2 } => Some(Mat2::symmetric_tracefree(*q1, *q2)),
            Potential::Trig { amplitude, frequency } => {
                let w = z * *frequency;
                Some(Mat2::symmetric_tracefree(*amplitude * w.sin(), *amplitude * w.cos()))
            }
            Potential::Samples { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Constant { q1, q2 } => *q1 == czero() && *q2 == czero(),
            Potential::Trig { amplitude, .. } => *amplitude == czero(),
            Potential::Samples { .. } => false,
        }
    }

    /// Taylor coefficients `Q_m` with `Q(x0 + t) ≈ Σ_m Q_m t^m`, `m = 0..=order`.
    ///
    /// Closed forms are expanded exactly; sampled data are fitted by a Chebyshev
    /// polynomial on `[x0 − radius, x0 + radius]` and converted to monomials.
    pub fn taylor(&self, x0: T, radius: T, order: usize) -> Vec<Mat2<T>> {
        let mut out = vec![Mat2::zero(); order + 1];
        match self {
            Potential::Zero => {}
            Potential::Constant { q1, q2 } => out[0] = Mat2::symmetric_tracefree(*q1, *q2),
            Potential::Trig { amplitude, frequency } => {
                let phase = *frequency * x0;
                let half_pi = T::FRAC_PI_2();
                let mut wpow = T::one();
                let mut fact = T::one();
                for (m, q) in out.iter_mut().enumerate() {
                    if m > 0 {
                        wpow = wpow * *frequency;
                        fact = fact * lit::<T>(m as f64);
                    }
                    let shift = half_pi * lit::<T>(m as f64);
                    let coef = wpow / fact;
                    let s = (phase + shift).sin() * coef;
                    let c = (phase + shift).cos() * coef;
                    *q = Mat2::symmetric_tracefree(*amplitude * s, *amplitude * c);
                }
            }
            Potential::Samples { q1, q2 } => {
                let a = chebyshev_monomials(|x| q1.eval(x), x0, radius, SAMPLE_FIT_DEGREE);
                let b = chebyshev_monomials(|x| q2.eval(x), x0, radius, SAMPLE_FIT_DEGREE);
                for (m, q) in out.iter_mut().enumerate().take(SAMPLE_FIT_DEGREE + 1) {
                    *q = Mat2::symmetric_tracefree(a[m], b[m]);
                }
            }
        }
        out
    }

    /// Order of the first non-negligible Taylor coefficient at `x0` (`None` if all vanish).
    pub fn vanishing_order(&self, x0: T, radius: T) -> Option<usize> {
        let coeffs = self.taylor(x0, radius, SAMPLE_FIT_DEGREE);
        let tol = lit::<T>(1e-12);
        coeffs.iter().enumerate().find_map(|(m, q)| {
            // Scale by radius^m so the threshold is relative to the local size.
            (q.max_abs() * radius.powi(m as i32) > tol).then_some(m)
        })
    }
}

/// Fits `f` on `[x0 − r, x0 + r]` by Chebyshev interpolation of degree `deg`
/// and returns monomial coefficients in `t = x − x0`.
fn chebyshev_monomials<T: Real, F: Fn(T) -> Complex<T>>(f: F, x0: T, r: T, deg: usize) -> Vec<Complex<T>> {
    let n = deg + 1;
    let pi = T::PI();
    let nf = lit::<T>(n as f64);
    let half = lit::<T>(0.5);
    let samples: Vec<Complex<T>> = (0..n)
        .map(|j| {
            let theta = pi * (lit::<T>(j as f64) + half) / nf;
            f(x0 + r * theta.cos())
        })
        .collect();
    let mut cheb = vec![czero::<T>(); n];
    for (k, ck) in cheb.iter_mut().enumerate() {
        let mut acc = czero::<T>();
        for (j, s) in samples.iter().enumerate() {
            let theta = pi * (lit::<T>(j as f64) + half) / nf;
            acc = acc + *s * (lit::<T>(k as f64) * theta).cos();
        }
        let w = if k == 0 { T::one() } else { lit(2.0) };
        *ck = acc * (w / nf);
    }
    // Monomial coefficients of T_k(u) via the three-term recurrence.
    let mut poly_prev = vec![T::zero(); n];
    let mut poly_cur = vec![T::zero(); n];
    poly_prev[0] = T::one();
    if n > 1 {
        poly_cur[1] = T::one();
    }
    let mut mono = vec![czero::<T>(); n];
    for (k, ck) in cheb.iter().enumerate() {
        let p = if k == 0 {
            poly_prev.clone()
        } else if k == 1 {
            poly_cur.clone()
        } else {
            let mut next = vec![T::zero(); n];
            for i in 0..n {
                let shifted = if i > 0 { poly_cur[i - 1] * lit(2.0) } else { T::zero() };
                next[i] = shifted - poly_prev[i];
            }
            poly_prev = std::mem::replace(&mut poly_cur, next);
            poly_cur.clone()
        };
        for i in 0..n {
            mono[i] = mono[i] + *ck * p[i];
        }
    }
    // u = t / r
    let mut rpow = T::one();
    for m in mono.iter_mut() {
        *m = *m / rpow;
        rpow = rpow * r;
    }
    mono
}

impl<T: Real> Default for Potential<T> {
    fn default() -> Self {
        Potential::Zero
    }
}

/// Builds a sampled potential from parallel arrays.
pub fn sampled<T: Real>(xs: Vec<T>, q1: Vec<Complex<T>>, q2: Vec<Complex<T>>) -> Result<Potential<T>> {
    Ok(Potential::Samples { q1: ComplexSpline::new(xs.clone(), q1)?, q2: ComplexSpline::new(xs, q2)? })
}

/// Constant potential with real entries.
pub fn real_potential<T: Real>(q1: T, q2: T) -> Potential<T> {
    Potential::Constant { q1: re(q1), q2: re(q2) }
}
