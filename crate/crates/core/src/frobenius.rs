//! Local Frobenius bases `S^(k)(x, λ)` at the interior singularities.
//!
//! With `t = x − γ` the system reads `t Y' = M₀ Y + t B (Q(γ + t) − λ) Y`
//! where `M₀ = μ B R(η)` has eigenvalues `±μ`. Each column is a series
//! `t^ρ Σ c_n t^n` with `ρ = −μ` (first column) or `ρ = +μ` (second).

use crate::error::{Error, Result};
use crate::mat2::{Jet, Mat2, Vec2};
use crate::scalar::{c, ci, cone, lit, re, Real};
use crate::types::ProblemSpec;
use num_complex::Complex;

/// Truncation tolerance for the series tail at the working radius.
pub const SERIES_TOL: f64 = 1e-12;
/// First order tried by the adaptive builder.
pub const START_ORDER: usize = 20;
/// Hard cap on the series order.
pub const MAX_ORDER: usize = 200;
/// The working radius never exceeds `RADIUS_LAMBDA_CAP / |λ|`.
pub const RADIUS_LAMBDA_CAP: f64 = 6.0;

/// `(x − γ)^μ` with the branch continued through `Im x > 0`:
/// `|x−γ|^μ` for `x > γ` and `e^{iπμ}|x−γ|^μ` for `x < γ`.
pub fn branch_power<T: Real>(x: T, gamma: T, mu: Complex<T>) -> Result<Complex<T>> {
    let t = x - gamma;
    if t == T::zero() {
        return Err(Error::AtSingularity { x: x.to_f64().unwrap_or(f64::NAN) });
    }
    let modulus = re(t.abs()).powc(mu);
    if t > T::zero() {
        Ok(modulus)
    } else {
        Ok(modulus * (ci::<T>() * mu * T::PI()).exp())
    }
}

/// `M₀ = μ B R(η)` with `R(η) = [[sin 2η, cos 2η], [cos 2η, −sin 2η]]`.
pub fn leading_matrix<T: Real>(mu: Complex<T>, eta: T) -> Mat2<T> {
    let (s, co) = (eta + eta).sin_cos();
    Mat2::new(mu * co, -(mu * s), -(mu * s), -(mu * co))
}

/// Index of the cell `(γ_{k−1/2}, γ_{k+1/2}]` containing `x`, with `γ_{1/2} = 0`
/// and `γ_{N+1/2} = π`; `None` without singularities.
pub fn cell_of<T: Real>(spec: &ProblemSpec<T>, x: T) -> Option<usize> {
    let n = spec.n_singular();
    (n > 0).then(|| spec.midpoints().iter().position(|&m| x <= m).unwrap_or(n - 1))
}

/// `μ_k/(x − γ_k) R(η_k)` for singularity `k`.
pub fn singular_term<T: Real>(spec: &ProblemSpec<T>, k: usize, x: T) -> Mat2<T> {
    let s = spec.singularities()[k];
    let (sn, co) = (s.eta + s.eta).sin_cos();
    let w = s.mu / (x - s.gamma);
    Mat2::new(w * sn, w * co, w * co, -(w * sn))
}

/// The singular part `Q_ω(x)`: the term of the singularity whose cell contains `x`.
pub fn singular_part<T: Real>(spec: &ProblemSpec<T>, x: T) -> Mat2<T> {
    cell_of(spec, x).map_or_else(Mat2::zero, |k| singular_term(spec, k, x))
}

/// Local fundamental system near one singularity at a fixed `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusBasis<T> {
    pub k: usize,
    pub gamma: T,
    pub mu: Complex<T>,
    pub lambda: Complex<T>,
    /// Radius inside which the series is evaluated.
    pub radius: T,
    pub order: usize,
    /// Relative size of the last two series terms at `radius`.
    pub tail: T,
    pub c01: Complex<T>,
    pub c02: Complex<T>,
    coef: [Vec<Vec2<T>>; 2],
    dcoef: Option<[Vec<Vec2<T>>; 2]>,
}

fn solve_shifted<T: Real>(m0: &Mat2<T>, mu: Complex<T>, shift: Complex<T>, rhs: Vec2<T>) -> Vec2<T> {
    // ((shift) I − M₀)⁻¹ = ((shift) I + M₀) / (shift² − μ²) because M₀² = μ² I.
    let den = shift * shift - mu * mu;
    let v = m0.apply(rhs);
    Vec2::new((rhs.y1 * shift + v.y1) / den, (rhs.y2 * shift + v.y2) / den)
}

impl<T: Real> FrobeniusBasis<T> {
    /// Builds both series up to a fixed `order` without checking the tail.
    pub fn with_order(
        spec: &ProblemSpec<T>,
        k: usize,
        lambda: Complex<T>,
        order: usize,
        radius: T,
        with_derivative: bool,
    ) -> Result<Self> {
        let s = spec.singularities()[k];
        let mu = s.mu;
        let m0 = leading_matrix(mu, s.eta);
        let b = Mat2::<T>::b();
        let q = spec.potential().taylor(s.gamma, radius, order.max(1));
        // B G_m with G_0 = Q_0 − λ I and G_m = Q_m.
        let bg: Vec<Mat2<T>> = q
            .iter()
            .enumerate()
            .map(|(m, qm)| if m == 0 { b * (*qm - Mat2::identity().scale(lambda)) } else { b * *qm })
            .collect();

        let (sn, co) = s.eta.sin_cos();
        let c01 = cone::<T>();
        let c02 = cone::<T>();
        let leads = [Vec2::new(re(sn), re(co)).scale(c01), Vec2::new(re(co), re(-sn)).scale(c02)];
        let rhos = [-mu, mu];
        let two_mu = mu + mu;
        let guard = lit::<T>(1e-12);
        for n in 1..=order {
            let gap = c(lit::<T>(n as f64), T::zero()) - two_mu;
            if gap.norm() < guard {
                return Err(Error::ResonantExponent { k, shift: n });
            }
        }

        let mut coef: [Vec<Vec2<T>>; 2] = [Vec::with_capacity(order + 1), Vec::with_capacity(order + 1)];
        let mut dcoef: [Vec<Vec2<T>>; 2] = [Vec::new(), Vec::new()];
        for j in 0..2 {
            coef[j].push(leads[j]);
            if with_derivative {
                dcoef[j].push(Vec2::zero());
            }
            for n in 1..=order {
                let mut rhs = Vec2::zero();
                for m in 0..n {
                    rhs = rhs + bg[m].apply(coef[j][n - 1 - m]);
                }
                let shift = rhos[j] + lit::<T>(n as f64);
                let cn = solve_shifted(&m0, mu, shift, rhs);
                coef[j].push(cn);
                if with_derivative {
                    let mut drhs = Vec2::zero();
                    for m in 0..n {
                        drhs = drhs + bg[m].apply(dcoef[j][n - 1 - m]);
                    }
                    drhs = drhs - b.apply(coef[j][n - 1]);
                    dcoef[j].push(solve_shifted(&m0, mu, shift, drhs));
                }
            }
        }

        let tail = [0usize, 1]
            .iter()
            .map(|&j| {
                let mut rn = T::one();
                let mut peak = T::zero();
                let mut last = [T::zero(); 2];
                for (n, cn) in coef[j].iter().enumerate() {
                    let size = cn.norm_inf() * rn;
                    peak = peak.max(size);
                    if n + 2 > order {
                        last[order - n] = size;
                    }
                    rn = rn * radius;
                }
                (last[0] + last[1]) / peak.max(T::min_positive_value())
            })
            .fold(T::zero(), |a, b| a.max(b));

        Ok(Self {
            k,
            gamma: s.gamma,
            mu,
            lambda,
            radius,
            order,
            tail,
            c01,
            c02,
            coef,
            dcoef: with_derivative.then_some(dcoef),
        })
    }

    fn check_point(&self, x: T) -> Result<T> {
        let t = x - self.gamma;
        if t == T::zero() {
            return Err(Error::AtSingularity { x: x.to_f64().unwrap_or(f64::NAN) });
        }
        if t.abs() > self.radius * (T::one() + lit(1e-12)) {
            return Err(Error::OutOfDisk {
                k: self.k,
                x: x.to_f64().unwrap_or(f64::NAN),
                radius: self.radius.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(t)
    }

    fn sum(coefs: &[Vec2<T>], t: T) -> Vec2<T> {
        let mut acc = Vec2::zero();
        for cn in coefs.iter().rev() {
            acc = Vec2::new(acc.y1 * t + cn.y1, acc.y2 * t + cn.y2);
        }
        acc
    }

    fn rhos(&self) -> [Complex<T>; 2] {
        [-self.mu, self.mu]
    }

    /// Columns `S^(k)_1, S^(k)_2` at `x`.
    pub fn eval(&self, x: T) -> Result<Mat2<T>> {
        let t = self.check_point(x)?;
        let r = self.rhos();
        let c1 = Self::sum(&self.coef[0], t).scale(branch_power(x, self.gamma, r[0])?);
        let c2 = Self::sum(&self.coef[1], t).scale(branch_power(x, self.gamma, r[1])?);
        Ok(Mat2::from_cols(c1, c2))
    }

    /// Value and `λ`-derivative; requires a basis built with derivatives.
    pub fn eval_jet(&self, x: T) -> Result<Jet<T>> {
        let v = self.eval(x)?;
        let Some(dcoef) = &self.dcoef else {
            return Ok(Jet::constant(v));
        };
        let t = x - self.gamma;
        let r = self.rhos();
        let d1 = Self::sum(&dcoef[0], t).scale(branch_power(x, self.gamma, r[0])?);
        let d2 = Self::sum(&dcoef[1], t).scale(branch_power(x, self.gamma, r[1])?);
        Ok(Jet::new(v, Mat2::from_cols(d1, d2)))
    }

    pub fn has_derivative(&self) -> bool {
        self.dcoef.is_some()
    }

    /// Derivative in `x` of both columns.
    pub fn eval_dx(&self, x: T) -> Result<Mat2<T>> {
        let t = self.check_point(x)?;
        let r = self.rhos();
        let mut cols = [Vec2::zero(); 2];
        for j in 0..2 {
            let weighted: Vec<Vec2<T>> = self.coef[j]
                .iter()
                .enumerate()
                .map(|(n, cn)| cn.scale(r[j] + lit::<T>(n as f64)))
                .collect();
            cols[j] = Self::sum(&weighted, t).scale(branch_power(x, self.gamma, r[j])? / t);
        }
        Ok(Mat2::from_cols(cols[0], cols[1]))
    }

    /// Coefficients `c_n` of column `j ∈ {0, 1}`.
    pub fn coefficients(&self, j: usize) -> &[Vec2<T>] {
        &self.coef[j]
    }
}

/// Working radius for singularity `k` at spectral parameter `λ`.
pub fn working_radius<T: Real>(spec: &ProblemSpec<T>, k: usize, lambda: Complex<T>) -> T {
    let base = spec.disk_radius(k);
    let l = lambda.norm();
    if l > T::zero() {
        base.min(lit::<T>(RADIUS_LAMBDA_CAP) / l)
    } else {
        base
    }
}

/// Adaptive construction: order starts at [`START_ORDER`] and doubles until the
/// tail drops below [`SERIES_TOL`], capped at [`MAX_ORDER`].
pub fn build_frobenius_basis<T: Real>(
    spec: &ProblemSpec<T>,
    k: usize,
    lambda: Complex<T>,
    with_derivative: bool,
) -> Result<FrobeniusBasis<T>> {
    let radius = working_radius(spec, k, lambda);
    let tol = lit::<T>(SERIES_TOL).max(T::epsilon() * lit(100.0));
    let mut order = START_ORDER;
    loop {
        let basis = FrobeniusBasis::with_order(spec, k, lambda, order, radius, with_derivative)?;
        if basis.tail < tol {
            return Ok(basis);
        }
        if order >= MAX_ORDER {
            return Err(Error::OrderTooSmall { k, order, tail: basis.tail.to_f64().unwrap_or(f64::NAN) });
        }
        order = (order * 2).min(MAX_ORDER);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::Dop853;
    use crate::potential::Potential;
    use crate::types::Singularity;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(mu: Complex<f64>, eta: f64, pot: Potential<f64>) -> ProblemSpec<f64> {
        ProblemSpec::new(vec![Singularity::new(FRAC_PI_2, mu, eta)], 0.0, 0.0, pot).unwrap()
    }

    #[test]
    fn singular_part_uses_the_nearest_cell() {
        let sp = ProblemSpec::new(
            vec![Singularity::new(1.0, c(0.3, 0.0), 0.0), Singularity::new(2.0, c(0.2, 0.0), 0.0)],
            0.0,
            0.0,
            Potential::Zero,
        )
        .unwrap();
        assert_eq!(cell_of(&sp, 0.2), Some(0));
        assert_eq!(cell_of(&sp, 1.5), Some(0));
        assert_eq!(cell_of(&sp, 1.5 + 1e-12), Some(1));
        assert_eq!(cell_of(&sp, 3.0), Some(1));
        assert_eq!(singular_part(&sp, 1.4), singular_term(&sp, 0, 1.4));
        assert_eq!(singular_part(&sp, 1.6).a12, c(0.2 / (1.6 - 2.0), 0.0));
        assert_eq!(cell_of(&spec(c(0.3, 0.0), 0.0, Potential::Zero), 3.0), Some(0));
    }

    fn trig() -> Potential<f64> {
        Potential::Trig { amplitude: c(0.2, 0.0), frequency: 1.0 }
    }

    /// `B Y' + (Q_ω + Q) Y − λ Y` with `Q` evaluated in closed form.
    fn residual(sp: &ProblemSpec<f64>, b: &FrobeniusBasis<f64>, x: f64) -> f64 {
        let y = b.eval(x).unwrap();
        let dy = b.eval_dx(x).unwrap();
        let a = singular_part(sp, x) + sp.potential().matrix(x) - Mat2::identity().scale(b.lambda);
        (Mat2::b() * dy + a * y).max_abs()
    }

    #[test]
    fn branch_power_examples() {
        assert!((branch_power(1.25, 1.0, c(0.5, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((branch_power(0.75, 1.0, c(0.5, 0.0)).unwrap() - c(0.0, 0.5)).norm() < 1e-15);
        let e = branch_power(0.0, 1.0, c(0.3, 0.0)).unwrap();
        let expect = c(0.0, 0.3 * std::f64::consts::PI).exp();
        assert!((e - expect).norm() < 1e-15);
        assert!(matches!(branch_power(1.0, 1.0, c(0.3, 0.0)), Err(Error::AtSingularity { .. })));
    }

    #[test]
    fn leading_matrix_squares_to_mu_squared() {
        let mu = c(0.3, 0.2);
        let m = leading_matrix(mu, 0.4);
        assert!((m * m - Mat2::identity().scale(mu * mu)).max_abs() < 1e-15);
        let r = Mat2::b() * singular_part(&spec(mu, 0.4, Potential::Zero), FRAC_PI_2 + 1.0);
        assert!((r - m).max_abs() < 1e-15);
    }

    #[test]
    fn leading_behaviour_and_normalisation() {
        let sp = spec(c(0.3, 0.0), 0.0, Potential::Zero);
        let b = build_frobenius_basis(&sp, 0, c(0.0, 0.0), false).unwrap();
        assert_eq!(b.c01 * b.c02, c(1.0, 0.0));
        for &t in &[1e-6, 1e-8] {
            let s = b.eval(FRAC_PI_2 + t).unwrap();
            let col1 = s.col1().scale(c(t.powf(0.3), 0.0));
            let col2 = s.col2().scale(c(t.powf(-0.3), 0.0));
            assert!((col1 - Vec2::new(c(0.0, 0.0), c(1.0, 0.0))).norm_inf() < 1e-6);
            assert!((col2 - Vec2::new(c(1.0, 0.0), c(0.0, 0.0))).norm_inf() < 1e-6);
        }
        // Exact at leading order for Q ≡ 0, λ = 0: only c_0 survives.
        assert!(b.coefficients(0)[1..].iter().all(|v| v.norm_inf() == 0.0));
    }

    #[test]
    fn residual_small_at_order_twenty() {
        let sp = spec(c(0.3, 0.0), 0.2, trig());
        let b = FrobeniusBasis::with_order(&sp, 0, c(2.5, 0.3), 20, 0.2, false).unwrap();
        for &t in &[0.01, -0.01] {
            let r = residual(&sp, &b, FRAC_PI_2 + t);
            assert!(r < 1e-10, "t={t} residual={r}");
        }
    }

    #[test]
    fn wronskian_constant_across_disk() {
        let sp = spec(c(0.3, 0.1), -0.3, trig());
        let b = build_frobenius_basis(&sp, 0, c(4.0, -0.7), false).unwrap();
        let w0 = b.eval(FRAC_PI_2 + 0.5 * b.radius).unwrap().det();
        for i in 1..=10 {
            let t = b.radius * (i as f64 / 10.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
            let w = b.eval(FRAC_PI_2 + t).unwrap().det();
            assert!((w - w0).norm() / w0.norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn out_of_disk_and_resonance_are_reported() {
        let sp = spec(c(0.3, 0.0), 0.0, Potential::Zero);
        let b = build_frobenius_basis(&sp, 0, c(1.0, 0.0), false).unwrap();
        assert!(matches!(b.eval(FRAC_PI_2 + 2.0 * b.radius), Err(Error::OutOfDisk { .. })));
        let res = spec(c(1.0, 0.0), 0.0, Potential::Zero);
        assert!(matches!(
            FrobeniusBasis::with_order(&res, 0, c(1.0, 0.0), 10, 0.1, false),
            Err(Error::ResonantExponent { shift: 2, .. })
        ));
    }

    #[test]
    fn lambda_derivative_matches_difference_quotient() {
        let sp = spec(c(0.3, 0.0), 0.1, trig());
        let lam = c(3.0, 0.2);
        let h = 1e-6;
        let r = 0.1;
        let b = FrobeniusBasis::with_order(&sp, 0, lam, 60, r, true).unwrap();
        let bp = FrobeniusBasis::with_order(&sp, 0, lam + h, 60, r, false).unwrap();
        let bm = FrobeniusBasis::with_order(&sp, 0, lam - h, 60, r, false).unwrap();
        for &t in &[0.07, -0.05] {
            let x = FRAC_PI_2 + t;
            let fd = (bp.eval(x).unwrap() - bm.eval(x).unwrap()).scale_re(0.5 / h);
            let d = b.eval_jet(x).unwrap().d;
            assert!((fd - d).max_abs() < 1e-7 * (1.0 + d.max_abs()));
        }
    }

    #[test]
    fn continuation_through_upper_half_plane() {
        // Integrate along x = γ + ρ e^{iθ}, θ: π → 0, and compare with the series branch.
        let sp = spec(c(0.3, 0.1), 0.25, trig());
        let lam = c(2.0, 0.5);
        let b = build_frobenius_basis(&sp, 0, lam, false).unwrap();
        let rho = 0.8 * b.radius;
        let gamma = FRAC_PI_2;
        let s = sp.singularities()[0];
        let rhs = |theta: f64, y: &[Complex<f64>; 4]| {
            let e = c(0.0, theta).exp();
            let x = e * rho + gamma;
            let dx = e * c(0.0, rho);
            let (sn, co) = (2.0 * s.eta).sin_cos();
            let w = s.mu / (x - gamma);
            let qw = Mat2::new(w * sn, w * co, w * co, -(w * sn));
            let q = sp.potential().matrix_complex(x).unwrap();
            let a = Mat2::b() * (qw + q - Mat2::identity().scale(lam));
            let m = a * Mat2::from_entries(*y);
            m.scale(dx).entries()
        };
        let start = b.eval(gamma - rho).unwrap();
        let out = Dop853::new(1e-12, 1e-14)
            .integrate(rhs, std::f64::consts::PI, start.entries(), &[0.0])
            .unwrap();
        let end = Mat2::from_entries(out[0]);
        let expect = b.eval(gamma + rho).unwrap();
        assert!((end - expect).max_abs() < 1e-6 * expect.max_abs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn residual_decays_with_order(
            lr in 4.0_f64..10.0,
            larg in -3.1_f64..3.1,
            mu_re in 0.05_f64..0.45,
            mu_im in -0.2_f64..0.2,
            eta in -1.5_f64..1.5,
        ) {
            let sp = spec(c(mu_re, mu_im), eta, trig());
            let lam = c(lr * larg.cos(), lr * larg.sin());
            let r_max = (2.0 / lr).min(0.2);
            for &m in &[10usize, 12, 14] {
                let b = FrobeniusBasis::with_order(&sp, 0, lam, m, 0.2, false).unwrap();
                let radii: Vec<f64> = (0..6).map(|i| r_max * (0.5 + 0.1 * i as f64)).collect();
                let pts: Vec<(f64, f64)> = radii
                    .iter()
                    .map(|&r| (r.ln(), residual(&sp, &b, FRAC_PI_2 + r).ln()))
                    .collect();
                let n = pts.len() as f64;
                let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
                let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
                let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                    / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
                let target = (m - 1) as f64;
                prop_assert!((slope - target).abs() <= 0.15 * target, "M={m} slope={slope}");
            }
        }

        #[test]
        fn branch_power_is_multiplicative(
            t in prop_oneof![-2.0_f64..-1e-3, 1e-3_f64..2.0],
            a in (0.01_f64..2.0, -1.0_f64..1.0),
            b in (0.01_f64..2.0, -1.0_f64..1.0),
        ) {
            let (m1, m2) = (c(a.0, a.1), c(b.0, b.1));
            let lhs = branch_power(1.0 + t, 1.0, m1 + m2).unwrap();
            let rhs = branch_power(1.0 + t, 1.0, m1).unwrap() * branch_power(1.0 + t, 1.0, m2).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-13 * lhs.norm().max(1.0));
        }
    }
}
