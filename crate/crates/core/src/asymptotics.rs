//! Comparison of the characteristic function and the eigenvalues with their
//! leading-order asymptotic counterparts.

use crate::error::Result;
use crate::forward::ForwardSolver;
use crate::scalar::{c, Real};
use num_complex::Complex;
use rayon::prelude::*;

/// `Δ₁₂`, `Δ⁰₁₂` and the scaled difference `|Δ₁₂ − Δ⁰₁₂| e^{−π|Im λ|}` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow<T> {
    pub lambda: Complex<T>,
    pub delta12: Complex<T>,
    pub delta0: Complex<T>,
    pub scaled_diff: T,
}

/// `λ_k`, `λ⁰_k` and their distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationRow<T> {
    pub k: i64,
    pub lambda: Complex<T>,
    pub lambda0: Complex<T>,
    pub diff: T,
}

/// Rows along `λ = m + offset + i·im` for `m` in `ms`.
pub fn decay_table<T: Real>(solver: &ForwardSolver<T>, ms: &[i64], offset: T, im: T) -> Result<Vec<DecayRow<T>>> {
    ms.par_iter()
        .map(|&m| {
            let lambda = c(T::from_i64(m).unwrap_or_else(T::zero) + offset, im);
            let delta12 = solver.char_fn(lambda, false)?.delta.a12;
            let delta0 = solver.char_fn_asymptotic(lambda)?;
            let scaled_diff = (delta12 - delta0).norm() * (-T::PI() * im.abs()).exp();
            Ok(DecayRow { lambda, delta12, delta0, scaled_diff })
        })
        .collect()
}

/// Eigenvalues refined from each asymptotic zero `λ⁰_k` with `k` in `ks`.
pub fn deviation_table<T: Real>(solver: &ForwardSolver<T>, ks: &[i64]) -> Result<Vec<DeviationRow<T>>> {
    let kmax = ks.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
    let seeds = solver.seed_zeros(kmax);
    ks.par_iter()
        .filter_map(|&k| seeds.iter().find(|s| s.k == k).and_then(|s| s.zero).map(|z| (k, z)))
        .map(|(k, lambda0)| {
            let (lambda, _) = solver.newton(lambda0)?;
            Ok(DeviationRow { k, lambda, lambda0, diff: (lambda - lambda0).norm() })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`; the fitted decay exponent is its negative.
pub fn fit_power_law<T: Real>(points: &[(T, T)]) -> Option<T> {
    let logs: Vec<(T, T)> =
        points.iter().filter(|(x, y)| *x > T::zero() && *y > T::zero()).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = T::from_usize(logs.len())?;
    let mx = logs.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = logs.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxx = logs.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    let sxy = logs.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    (sxx > T::zero()).then(|| sxy / sxx)
}
