//! Gauss–Legendre quadrature along straight segments of the complex plane and
//! argument-principle zero counting.

use crate::error::Result;
use crate::scalar::{c, czero, lit, Real};
use num_complex::Complex;
use rayon::prelude::*;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = lit(-x);
        nodes[n - 1 - i] = lit(x);
        weights[i] = lit(w);
        weights[n - 1 - i] = lit(w);
    }
    (nodes, weights)
}

/// Result of integrating `f'/f` along one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeIntegral<T> {
    pub value: Complex<T>,
    /// Smallest `|f(z)|·scale(z)` seen at the quadrature nodes.
    pub min_scaled: T,
}

const NODES: usize = 16;
const MAX_PANELS: usize = 256;

fn panel_sum<T, F>(f: &F, z0: Complex<T>, z1: Complex<T>, panels: usize, scale: &(dyn Fn(Complex<T>) -> T + Sync)) -> Result<EdgeIntegral<T>>
where
    T: Real,
    F: Fn(Complex<T>) -> Result<(Complex<T>, Complex<T>)> + Sync,
{
    let (xs, ws) = gauss_legendre::<T>(NODES);
    let dz = (z1 - z0) / lit::<T>(panels as f64);
    let half = dz * lit::<T>(0.5);
    let pts: Vec<(Complex<T>, T)> = (0..panels)
        .flat_map(|p| {
            let mid = z0 + dz * (lit::<T>(p as f64) + lit(0.5));
            xs.iter().zip(&ws).map(move |(x, w)| (mid + half * *x, *w)).collect::<Vec<_>>()
        })
        .collect();
    let vals: Vec<(Complex<T>, T)> = pts
        .par_iter()
        .map(|(z, w)| {
            let (fz, dfz) = f(*z)?;
            Ok(((dfz / fz) * *w, fz.norm() * scale(*z)))
        })
        .collect::<Result<_>>()?;
    let mut acc = czero::<T>();
    let mut min_scaled = T::infinity();
    for (v, m) in vals {
        acc = acc + v;
        min_scaled = min_scaled.min(m);
    }
    Ok(EdgeIntegral { value: acc * half, min_scaled })
}

/// Integral of `f'/f` from `z0` to `z1`, where `f` returns `(f(z), f'(z))`.
/// Panels are doubled until two successive estimates agree to `tol`.
pub fn log_derivative_integral<T, F>(
    f: &F,
    z0: Complex<T>,
    z1: Complex<T>,
    panel_length: T,
    tol: T,
    scale: &(dyn Fn(Complex<T>) -> T + Sync),
) -> Result<EdgeIntegral<T>>
where
    T: Real,
    F: Fn(Complex<T>) -> Result<(Complex<T>, Complex<T>)> + Sync,
{
    let len = (z1 - z0).norm();
    let mut panels = (len / panel_length).ceil().to_usize().unwrap_or(1).max(1);
    let mut coarse = panel_sum(f, z0, z1, panels, scale)?;
    loop {
        panels *= 2;
        let fine = panel_sum(f, z0, z1, panels, scale)?;
        let done = (fine.value - coarse.value).norm() <= tol * fine.value.norm().max(T::one());
        let min_scaled = coarse.min_scaled.min(fine.min_scaled);
        if done || panels >= MAX_PANELS {
            return Ok(EdgeIntegral { value: fine.value, min_scaled });
        }
        coarse = EdgeIntegral { value: fine.value, min_scaled };
    }
}

/// `(1/2πi)∮ f'/f` over the positively oriented rectangle `[x0, x1] × [y0, y1]`.
pub fn argument_principle<T, F>(f: &F, x0: T, x1: T, y0: T, y1: T, tol: T) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(Complex<T>) -> Result<(Complex<T>, Complex<T>)> + Sync,
{
    let one = |_z: Complex<T>| T::one();
    let pl = lit::<T>(0.5);
    let corners = [c(x0, y0), c(x1, y0), c(x1, y1), c(x0, y1)];
    let mut total = czero::<T>();
    for i in 0..4 {
        total = total + log_derivative_integral(f, corners[i], corners[(i + 1) % 4], pl, tol, &one)?.value;
    }
    Ok(total / (Complex::new(T::zero(), T::TAU())))
}
