//! Global fundamental matrix, characteristic matrix, eigenvalues and Weyl residues.

use crate::contour::log_derivative_integral;
use crate::error::{Error, Result};
use crate::frobenius::{build_frobenius_basis, cell_of, singular_part, singular_term};
use crate::mat2::{rotation, Jet, Mat2};
use crate::ode::Dop853;
use crate::scalar::{c, ci, czero, lit, Real};
use crate::types::{sector_of, ProblemSpec, SpectralData, SpectralDatum};
use num_complex::Complex;
use rayon::prelude::*;

/// Integrator tolerances and optional matching points.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Matching points `x_j ∈ (γ_j, γ_{j+1})`; midpoints when `None`.
    pub matching: Option<Vec<T>>,
}

impl<T: Real> Default for ForwardOptions<T> {
    fn default() -> Self {
        Self { rtol: lit(1e-11), atol: lit(1e-13), matching: None }
    }
}

/// `S(x, λ)` and optionally `∂S/∂λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalMatrix<T> {
    pub value: Mat2<T>,
    pub dvalue: Option<Mat2<T>>,
    pub x: T,
    pub lambda: Complex<T>,
}

impl<T: Real> FundamentalMatrix<T> {
    pub fn jet(&self) -> Jet<T> {
        Jet::new(self.value, self.dvalue.unwrap_or_else(Mat2::zero))
    }
}

/// `Δ(λ) = Vᵀ(β) S(π, λ) V(α)` and optionally its `λ`-derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharMatrix<T> {
    pub delta: Mat2<T>,
    pub ddelta: Option<Mat2<T>>,
    pub lambda: Complex<T>,
}

/// One computed eigenvalue with its residue and diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue<T> {
    pub k: i64,
    pub lambda: Complex<T>,
    pub a: Complex<T>,
    /// `Δ̇₁₂(λ_k)`.
    pub ddelta12: Complex<T>,
    /// `|Δ₁₂(λ_k)|` after refinement.
    pub residual: T,
}

/// Outcome of an eigenvalue search on `[s−K−½, s+K+½] × [−h, h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSearch<T> {
    pub eigenvalues: Vec<Eigenvalue<T>>,
    pub strip_height: T,
    /// Left and right edges of the counting window after nudging.
    pub window: (T, T),
    /// Total argument-principle count over the window.
    pub contour_count: i64,
    /// Zeros of the asymptotic characteristic function found in the window, sorted.
    pub asymptotic_zeros: Vec<Complex<T>>,
}

impl<T: Real> EigenSearch<T> {
    pub fn spectral_data(&self) -> Result<SpectralData<T>> {
        SpectralData::new(
            self.eigenvalues.iter().map(|e| SpectralDatum { k: e.k, lambda: e.lambda, a: e.a }).collect(),
            self.strip_height,
        )
    }
}

/// Seed for one lattice index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Seed<T> {
    pub k: i64,
    pub lattice: Complex<T>,
    /// Converged zero of `Δ⁰₁₂`, or `None` when damped Newton failed.
    pub zero: Option<Complex<T>>,
}

const NEWTON_MAX_STEP: f64 = 0.5;
const SEED_DRIFT: f64 = 0.75;
const SEPARATION: f64 = 1e-8;
const SIMPLE_DERIVATIVE: f64 = 1e-10;
const POLE_THRESHOLD: f64 = 1e-13;
const EDGE_CLEARANCE: f64 = 0.05;
const EDGE_MIN_SCALED: f64 = 1e-2;

/// Forward solver bound to one problem.
#[derive(Clone, Debug)]
pub struct ForwardSolver<T> {
    spec: ProblemSpec<T>,
    opts: ForwardOptions<T>,
    bounds: Vec<T>,
}

impl<T: Real> ForwardSolver<T> {
    pub fn new(spec: ProblemSpec<T>, opts: ForwardOptions<T>) -> Result<Self> {
        let n = spec.n_singular();
        let inner = match &opts.matching {
            Some(m) => {
                if m.len() != n.saturating_sub(1) {
                    return Err(Error::spec("matching", format!("expected {} matching points, got {}", n.saturating_sub(1), m.len())));
                }
                for (j, x) in m.iter().enumerate() {
                    let (lo, hi) = (spec.singularities()[j].gamma, spec.singularities()[j + 1].gamma);
                    if !(*x > lo && *x < hi) {
                        return Err(Error::spec("matching", format!("x_{} = {x} not in ({lo}, {hi})", j + 1)));
                    }
                }
                m.clone()
            }
            None => spec.midpoints(),
        };
        let mut bounds = Vec::with_capacity(n + 1);
        bounds.push(T::zero());
        bounds.extend(inner);
        bounds.push(T::PI());
        Ok(Self { spec, opts, bounds })
    }

    pub fn with_defaults(spec: ProblemSpec<T>) -> Result<Self> {
        Self::new(spec, ForwardOptions::default())
    }

    pub fn spec(&self) -> &ProblemSpec<T> {
        &self.spec
    }

    pub fn options(&self) -> &ForwardOptions<T> {
        &self.opts
    }

    /// Same problem with relaxed tolerances.
    fn relaxed(&self) -> Self {
        let mut s = self.clone();
        s.opts.rtol = lit(1e-9);
        s.opts.atol = lit(1e-11);
        s
    }

    fn integrator(&self) -> Dop853<T> {
        Dop853::new(self.opts.rtol, self.opts.atol)
    }

    /// `A(x) = B (Q(x) + Q_ω(x) − λ I)`, so that `Y' = A Y`.
    pub fn coefficient(&self, x: T, lambda: Complex<T>) -> Mat2<T> {
        let m = self.spec.potential().matrix(x) + singular_part(&self.spec, x) - Mat2::identity().scale(lambda);
        Mat2::b() * m
    }

    fn coefficient_in(&self, cell: Option<usize>, x: T, lambda: Complex<T>) -> Mat2<T> {
        let sing = cell.map_or_else(Mat2::zero, |k| singular_term(&self.spec, k, x));
        Mat2::b() * (self.spec.potential().matrix(x) + sing - Mat2::identity().scale(lambda))
    }

    /// Integrates from `x0` with initial jet `start` to every point of `outputs`,
    /// restarting at each cell boundary of `Q_ω` crossed on the way.
    fn propagate(&self, lambda: Complex<T>, x0: T, start: Jet<T>, outputs: &[T], deriv: bool) -> Result<Vec<Jet<T>>> {
        let Some(&last) = outputs.last() else {
            return Ok(Vec::new());
        };
        let dir = if last >= x0 { T::one() } else { -T::one() };
        let mut breaks: Vec<T> = self.spec.midpoints().into_iter().filter(|&m| (m - x0) * dir > T::zero() && (last - m) * dir > T::zero()).collect();
        if dir < T::zero() {
            breaks.reverse();
        }
        breaks.push(last);
        let mut out = Vec::with_capacity(outputs.len());
        let (mut x, mut jet, mut next) = (x0, start, 0usize);
        for (i, &end) in breaks.iter().enumerate() {
            let is_break = i + 1 < breaks.len();
            let mut pts: Vec<T> = Vec::new();
            while next < outputs.len() && (end - outputs[next]) * dir >= T::zero() {
                pts.push(outputs[next]);
                next += 1;
            }
            let n_out = pts.len();
            if is_break {
                pts.push(end);
            }
            let cell = cell_of(&self.spec, (x + end) * lit(0.5));
            let vals = self.segment(lambda, cell, x, jet, &pts, deriv)?;
            out.extend_from_slice(&vals[..n_out]);
            if let Some(v) = vals.last() {
                jet = *v;
            }
            x = end;
        }
        Ok(out)
    }

    fn segment(&self, lambda: Complex<T>, cell: Option<usize>, x0: T, start: Jet<T>, outputs: &[T], deriv: bool) -> Result<Vec<Jet<T>>> {
        if outputs.is_empty() {
            return Ok(Vec::new());
        }
        let ode = self.integrator();
        if deriv {
            let b = Mat2::<T>::b();
            let f = |x: T, y: &[Complex<T>; 8]| {
                let a = self.coefficient_in(cell, x, lambda);
                let yv = Mat2::new(y[0], y[1], y[2], y[3]);
                let zv = Mat2::new(y[4], y[5], y[6], y[7]);
                let dy = a * yv;
                let dz = a * zv - b * yv;
                [dy.a11, dy.a12, dy.a21, dy.a22, dz.a11, dz.a12, dz.a21, dz.a22]
            };
            let (v, d) = (start.v, start.d);
            let y0 = [v.a11, v.a12, v.a21, v.a22, d.a11, d.a12, d.a21, d.a22];
            let out = ode.integrate(f, x0, y0, outputs)?;
            Ok(out
                .iter()
                .map(|y| Jet::new(Mat2::new(y[0], y[1], y[2], y[3]), Mat2::new(y[4], y[5], y[6], y[7])))
                .collect())
        } else {
            let f = |x: T, y: &[Complex<T>; 4]| (self.coefficient_in(cell, x, lambda) * Mat2::from_entries(*y)).entries();
            let out = ode.integrate(f, x0, start.v.entries(), outputs)?;
            Ok(out.iter().map(|y| Jet::constant(Mat2::from_entries(*y))).collect())
        }
    }

    /// Local solution `S^(k)(x)` of region `k` at ascending points `pts`.
    fn region_local(&self, k: usize, lambda: Complex<T>, pts: &[T], deriv: bool) -> Result<Vec<Jet<T>>> {
        let basis = build_frobenius_basis(&self.spec, k, lambda, deriv)?;
        let g = basis.gamma;
        let r = basis.radius;
        let mut out = vec![Jet::identity(); pts.len()];
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, &x) in pts.iter().enumerate() {
            if x < g - r {
                left.push(i);
            } else if x > g + r {
                right.push(i);
            } else {
                out[i] = basis.eval_jet(x)?;
            }
        }
        if !right.is_empty() {
            let xs: Vec<T> = right.iter().map(|&i| pts[i]).collect();
            let vals = self.propagate(lambda, g + r, basis.eval_jet(g + r)?, &xs, deriv)?;
            for (i, v) in right.iter().zip(vals) {
                out[*i] = v;
            }
        }
        if !left.is_empty() {
            let xs: Vec<T> = left.iter().rev().map(|&i| pts[i]).collect();
            let vals = self.propagate(lambda, g - r, basis.eval_jet(g - r)?, &xs, deriv)?;
            for (i, v) in left.iter().rev().zip(vals) {
                out[*i] = v;
            }
        }
        Ok(out)
    }

    fn check_x(&self, x: T) -> Result<()> {
        let xf = x.to_f64().unwrap_or(f64::NAN);
        if !x.is_finite() || x < T::zero() || x > T::PI() {
            return Err(Error::spec("x", format!("{xf} outside [0, π]")));
        }
        if self.spec.singularities().iter().any(|s| s.gamma == x) {
            return Err(Error::AtSingularity { x: xf });
        }
        Ok(())
    }

    /// `S(x, λ)` at every point of `xs` (any order), assembled through the
    /// local bases and transfer products at the matching points.
    pub fn sweep(&self, lambda: Complex<T>, xs: &[T], deriv: bool) -> Result<Vec<FundamentalMatrix<T>>> {
        for &x in xs {
            self.check_x(x)?;
        }
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap_or(std::cmp::Ordering::Equal));
        let sorted: Vec<T> = order.iter().map(|&i| xs[i]).collect();
        let mut jets = vec![Jet::identity(); xs.len()];

        let n = self.spec.n_singular();
        if n == 0 {
            let vals = self.propagate(lambda, T::zero(), Jet::identity(), &sorted, deriv)?;
            for (pos, v) in order.iter().zip(vals) {
                jets[*pos] = v;
            }
        } else {
            let mut next = 0usize;
            let mut carry: Option<(Jet<T>, Jet<T>)> = None; // (S^(k−1)(x_{k−1}), C_{k−1})
            for k in 0..n {
                let (lo, hi) = (self.bounds[k], self.bounds[k + 1]);
                let start = next;
                while next < sorted.len() && (sorted[next] <= hi || k + 1 == n) {
                    next += 1;
                }
                let mut pts = Vec::with_capacity(next - start + 2);
                pts.push(lo);
                pts.extend_from_slice(&sorted[start..next]);
                pts.push(hi);
                let vals = self.region_local(k, lambda, &pts, deriv)?;
                let singular = || Error::Integrator {
                    from: lo.to_f64().unwrap_or(f64::NAN),
                    to: hi.to_f64().unwrap_or(f64::NAN),
                    reason: "local fundamental matrix is singular".into(),
                };
                let inv_left = vals[0].inverse().ok_or_else(singular)?;
                let ck = match carry {
                    None => inv_left,
                    Some((prev_right, prev_c)) => inv_left * (prev_right * prev_c),
                };
                for (i, v) in vals[1..vals.len() - 1].iter().enumerate() {
                    jets[order[start + i]] = *v * ck;
                }
                carry = Some((vals[vals.len() - 1], ck));
            }
        }
        Ok(xs
            .iter()
            .zip(jets)
            .map(|(&x, j)| {
                let j = if x == T::zero() { Jet::identity() } else { j };
                FundamentalMatrix { value: j.v, dvalue: deriv.then_some(j.d), x, lambda }
            })
            .collect())
    }

    pub fn global_s(&self, x: T, lambda: Complex<T>, deriv: bool) -> Result<FundamentalMatrix<T>> {
        Ok(self.sweep(lambda, &[x], deriv)?.remove(0))
    }

    /// `φ(x, λ) = S(x, λ) V(α)` as a jet in `λ` at each point.
    pub fn phi_sweep(&self, lambda: Complex<T>, xs: &[T], deriv: bool) -> Result<Vec<Jet<T>>> {
        let v = Jet::constant(rotation(self.spec.alpha()));
        Ok(self.sweep(lambda, xs, deriv)?.iter().map(|s| s.jet() * v).collect())
    }

    pub fn phi(&self, x: T, lambda: Complex<T>) -> Result<Mat2<T>> {
        Ok(self.global_s(x, lambda, false)?.value * rotation(self.spec.alpha()))
    }

    /// `ψ(x, λ) = S(x, λ) S(π, λ)⁻¹ V(β)`.
    pub fn psi(&self, x: T, lambda: Complex<T>) -> Result<Mat2<T>> {
        let s = self.sweep(lambda, &[x, T::PI()], false)?;
        if x == T::PI() {
            return Ok(rotation(self.spec.beta()));
        }
        let inv = s[1].value.inverse().ok_or(Error::Integrator {
            from: 0.0,
            to: std::f64::consts::PI,
            reason: "S(π, λ) is singular".into(),
        })?;
        Ok(s[0].value * inv * rotation(self.spec.beta()))
    }

    pub fn char_fn(&self, lambda: Complex<T>, deriv: bool) -> Result<CharMatrix<T>> {
        let s = self.global_s(T::PI(), lambda, deriv)?;
        let va = rotation(self.spec.alpha());
        let vbt = rotation(self.spec.beta()).transpose();
        Ok(CharMatrix { delta: vbt * s.value * va, ddelta: s.dvalue.map(|d| vbt * d * va), lambda })
    }

    /// `(Δ₁₂, Δ̇₁₂)`.
    pub fn delta12(&self, lambda: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let cm = self.char_fn(lambda, true)?;
        Ok((cm.delta.a12, cm.ddelta.map(|d| d.a12).unwrap_or_else(czero)))
    }

    /// Weyl function `ℳ(λ) = −Δ₁₁/Δ₁₂`.
    /// Evaluated with the variational system so that poles agree with the
    /// eigenvalues found by [`Self::newton`].
    pub fn weyl_function(&self, lambda: Complex<T>) -> Result<Complex<T>> {
        let cm = self.char_fn(lambda, true)?;
        let d12 = cm.delta.a12;
        if d12.norm() < lit(POLE_THRESHOLD) {
            return Err(Error::Pole { lambda: format!("{lambda}"), magnitude: d12.norm().to_f64().unwrap_or(0.0) });
        }
        Ok(-cm.delta.a11 / d12)
    }

    /// Residue `a = −Δ₁₁(λ)/Δ̇₁₂(λ)` at a simple zero of `Δ₁₂`.
    pub fn weyl_residue(&self, lambda: Complex<T>) -> Result<Complex<T>> {
        let cm = self.char_fn(lambda, true)?;
        residue_from(&cm)
    }

    /// The asymptotic characteristic function `Δ⁰₁₂(λ)` and its derivative.
    pub fn char_fn_asymptotic_with_derivative(&self, lambda: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let l = lit::<T>(sector_of(lambda)?.l as f64);
        let pi = T::PI();
        let i = ci::<T>();
        let theta = lambda * pi + (self.spec.alpha() - self.spec.beta());
        let half_i = c(T::zero(), lit(2.0)).inv();
        let t1 = (-(i * theta)).exp() * half_i;
        let t2 = -((i * theta).exp() * half_i);
        let mut value = t1 + t2;
        let mut deriv = -(i * t1 * pi) + i * t2 * pi;
        for s in self.spec.singularities() {
            let w = pi - s.gamma - s.gamma;
            let phase = -(i * lambda * (l * w)) + i * (l * (s.eta + s.eta - self.spec.alpha() - self.spec.beta()));
            let term = (s.mu * pi).sin() * phase.exp() * l;
            value = value + term;
            deriv = deriv - i * term * (l * w);
        }
        Ok((value, deriv))
    }

    pub fn char_fn_asymptotic(&self, lambda: Complex<T>) -> Result<Complex<T>> {
        Ok(self.char_fn_asymptotic_with_derivative(lambda)?.0)
    }

    /// Lattice shift: the free zeros sit at `k + shift`.
    pub fn lattice_shift(&self) -> T {
        -(self.spec.alpha() - self.spec.beta()) / T::PI()
    }

    fn seed_one(&self, k: i64) -> Seed<T> {
        let lattice = c(lit::<T>(k as f64) + self.lattice_shift(), T::zero());
        let max_step = lit::<T>(NEWTON_MAX_STEP);
        let mut z = lattice;
        for _ in 0..80 {
            let Ok((f, df)) = self.char_fn_asymptotic_with_derivative(z) else {
                z = z + c(lit(1e-3), lit(1e-3));
                continue;
            };
            if df.norm() == T::zero() {
                break;
            }
            let mut step = f / df;
            if step.norm() > max_step {
                step = step * (max_step / step.norm());
            }
            z = z - step;
            if step.norm() <= lit::<T>(1e-14) * z.norm().max(T::one()) {
                let ok = (z - lattice).norm() <= lit(SEED_DRIFT);
                return Seed { k, lattice, zero: ok.then_some(z) };
            }
        }
        Seed { k, lattice, zero: None }
    }

    /// Approximate zeros `λ⁰_k` of `Δ⁰₁₂` by damped Newton from the lattice
    /// `k − (α−β)/π`, `k = −K..K`. Failures and duplicates yield `zero = None`.
    pub fn seed_zeros(&self, kmax: usize) -> Vec<Seed<T>> {
        let k = kmax as i64;
        let mut seeds: Vec<Seed<T>> = (-k..=k).into_par_iter().map(|j| self.seed_one(j)).collect();
        for i in 0..seeds.len() {
            let Some(zi) = seeds[i].zero else { continue };
            let dup = seeds[..i].iter().any(|s| s.zero.is_some_and(|z| (z - zi).norm() < lit(1e-6)));
            if dup {
                seeds[i].zero = None;
            }
        }
        for s in &seeds {
            if s.zero.is_none() {
                log::warn!("no asymptotic zero found near lattice index {}; starting from the lattice point", s.k);
            }
        }
        seeds
    }

    /// Newton refinement on `Δ₁₂` using `Δ̇₁₂` from the variational system.
    pub fn newton(&self, start: Complex<T>) -> Result<(Complex<T>, CharMatrix<T>)> {
        let max_step = lit::<T>(NEWTON_MAX_STEP);
        let mut z = start;
        let fail = |reason: String| Error::NoConvergence { start: format!("{start}"), reason };
        for _ in 0..60 {
            let cm = self.char_fn(z, true)?;
            let f = cm.delta.a12;
            let df = cm.ddelta.map(|d| d.a12).unwrap_or_else(czero);
            if df.norm() == T::zero() {
                return Err(fail("vanishing derivative".into()));
            }
            let mut step = f / df;
            if step.norm() > max_step {
                step = step * (max_step / step.norm());
            }
            z = z - step;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(fail("iterate diverged".into()));
            }
            if step.norm() <= lit::<T>(1e-13) * z.norm().max(T::one()) {
                let cm = self.char_fn(z, true)?;
                return Ok((z, cm));
            }
        }
        Err(fail("iteration limit reached".into()))
    }

    /// Eigenvalues `λ_k`, `k = −K..K`, with residues, after a completeness
    /// audit by the argument principle on unit rectangles.
    pub fn find_eigenvalues(&self, kmax: usize) -> Result<EigenSearch<T>> {
        let k = kmax as i64;
        let margin = 2i64;
        let seeds = self.seed_zeros(kmax + margin as usize);
        let h = T::one() + seeds.iter().filter_map(|s| s.zero).fold(T::zero(), |m, z| m.max(z.im.abs()));
        let shift = self.lattice_shift();
        let half = lit::<T>(0.5);
        let (win_lo, win_hi) = (shift - lit::<T>(k as f64) - half, shift + lit::<T>(k as f64) + half);

        let starts: Vec<Complex<T>> = seeds.iter().map(|s| s.zero.unwrap_or(s.lattice)).collect();
        let refined: Vec<Option<(Complex<T>, CharMatrix<T>)>> =
            starts.par_iter().map(|&z0| self.newton(z0).ok()).collect();
        let ext_lo = win_lo - lit(1.0);
        let ext_hi = win_hi + lit(1.0);
        let mut found: Vec<(Complex<T>, CharMatrix<T>)> = Vec::new();
        for r in refined.into_iter().flatten() {
            self.insert_root(&mut found, r, ext_lo, ext_hi, h);
        }

        // Audit: vertical edges at a_j = win_lo + j, nudged away from known zeros.
        let n_rect = (2 * k + 1) as usize;
        let audit = self.relaxed();
        let mut edges: Vec<T> = (0..=n_rect).map(|j| win_lo + lit::<T>(j as f64)).collect();
        for a in edges.iter_mut() {
            *a = nudge(*a, &found, h);
        }
        let f = |z: Complex<T>| audit.delta12(z);
        let scale = |z: Complex<T>| (-(T::PI() * z.im.abs())).exp();
        let tol = lit::<T>(1e-6);
        let panel = lit::<T>(0.5);
        let mut verticals = Vec::with_capacity(edges.len());
        for j in 0..edges.len() {
            let mut a = edges[j];
            let mut tries = 0;
            loop {
                let e = log_derivative_integral(&f, c(a, -h), c(a, h), panel, tol, &scale)?;
                if e.min_scaled >= lit(EDGE_MIN_SCALED) || tries >= 4 {
                    verticals.push(e.value);
                    break;
                }
                tries += 1;
                a = a + lit::<T>(0.07) * if tries % 2 == 1 { T::one() } else { -lit::<T>(2.0) };
            }
            edges[j] = a;
        }
        let mut total = 0i64;
        for j in 0..n_rect {
            let (a, b) = (edges[j], edges[j + 1]);
            let bottom = log_derivative_integral(&f, c(a, -h), c(b, -h), panel, tol, &scale)?.value;
            let top = log_derivative_integral(&f, c(b, h), c(a, h), panel, tol, &scale)?.value;
            let ring = (bottom + verticals[j + 1] + top - verticals[j]) / c(T::zero(), T::TAU());
            let count = ring.re.round();
            if (ring - c(count, T::zero())).norm() > lit(0.1) {
                return Err(Error::CountMismatch {
                    rect: format!("[{a}, {b}] × [−{h}, {h}]"),
                    contour: count.to_i64().unwrap_or(-1),
                    found: usize::MAX,
                });
            }
            let count = count.to_i64().unwrap_or(0);
            total += count;
            let inside = |z: &Complex<T>| z.re > a && z.re <= b && z.im.abs() <= h;
            let mut have = found.iter().filter(|(z, _)| inside(z)).count() as i64;
            if have != count {
                self.subdivision_search(&mut found, a, b, h, ext_lo, ext_hi);
                have = found.iter().filter(|(z, _)| inside(z)).count() as i64;
            }
            if have != count {
                return Err(Error::CountMismatch {
                    rect: format!("[{a}, {b}] × [−{h}, {h}]"),
                    contour: count,
                    found: have as usize,
                });
            }
        }

        let (lo, hi) = (edges[0], edges[n_rect]);
        let mut inside: Vec<(Complex<T>, CharMatrix<T>)> =
            found.into_iter().filter(|(z, _)| z.re > lo && z.re <= hi && z.im.abs() <= h).collect();
        inside.sort_by(|(a, _), (b, _)| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.im.abs().partial_cmp(&b.im.abs()).unwrap_or(std::cmp::Ordering::Equal))
                .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        if inside.len() != n_rect {
            return Err(Error::CountMismatch {
                rect: format!("window [{lo}, {hi}] × [−{h}, {h}]"),
                contour: total,
                found: inside.len(),
            });
        }
        for i in 0..inside.len() {
            for j in i + 1..inside.len() {
                if (inside[i].0 - inside[j].0).norm() <= lit(SEPARATION) {
                    return Err(Error::MultipleEigenvalue {
                        detail: format!("λ = {} and λ = {} are not separated", inside[i].0, inside[j].0),
                    });
                }
            }
        }
        let eigenvalues = inside
            .iter()
            .enumerate()
            .map(|(i, (z, cm))| {
                let dd = cm.ddelta.map(|d| d.a12).unwrap_or_else(czero);
                if dd.norm() <= lit(SIMPLE_DERIVATIVE) {
                    return Err(Error::MultipleEigenvalue {
                        detail: format!("|Δ̇₁₂| = {:e} at λ = {z}", dd.norm().to_f64().unwrap_or(0.0)),
                    });
                }
                Ok(Eigenvalue {
                    k: i as i64 - k,
                    lambda: *z,
                    a: residue_from(cm)?,
                    ddelta12: dd,
                    residual: cm.delta.a12.norm(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut asymptotic_zeros: Vec<Complex<T>> = seeds
            .iter()
            .filter_map(|s| s.zero)
            .filter(|z| z.re > lo && z.re <= hi)
            .collect();
        asymptotic_zeros.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
        Ok(EigenSearch { eigenvalues, strip_height: h, window: (lo, hi), contour_count: total, asymptotic_zeros })
    }

    fn insert_root(
        &self,
        found: &mut Vec<(Complex<T>, CharMatrix<T>)>,
        r: (Complex<T>, CharMatrix<T>),
        lo: T,
        hi: T,
        h: T,
    ) -> bool {
        let z = r.0;
        if z.re < lo || z.re > hi || z.im.abs() > h {
            return false;
        }
        let tol = lit::<T>(1e-7) * z.norm().max(T::one());
        if found.iter().any(|(w, _)| (*w - z).norm() < tol) {
            return false;
        }
        found.push(r);
        true
    }

    /// Newton from a grid of starting points covering one rectangle.
    fn subdivision_search(&self, found: &mut Vec<(Complex<T>, CharMatrix<T>)>, a: T, b: T, h: T, lo: T, hi: T) {
        let nx = 6usize;
        let ny = ((h + h) / lit(0.25)).ceil().to_usize().unwrap_or(8).max(2);
        let starts: Vec<Complex<T>> = (0..nx)
            .flat_map(|i| {
                (0..ny).map(move |j| {
                    let x = a + (b - a) * (lit::<T>(i as f64) + lit(0.5)) / lit::<T>(nx as f64);
                    let y = -h + (h + h) * (lit::<T>(j as f64) + lit(0.5)) / lit::<T>(ny as f64);
                    c(x, y)
                })
            })
            .collect();
        let roots: Vec<_> = starts.par_iter().filter_map(|&z| self.newton(z).ok()).collect();
        for r in roots {
            self.insert_root(found, r, lo, hi, h);
        }
    }

    /// Eigenvalues and residues as validated spectral data.
    pub fn spectral_data(&self, kmax: usize) -> Result<SpectralData<T>> {
        self.find_eigenvalues(kmax)?.spectral_data()
    }
}

fn residue_from<T: Real>(cm: &CharMatrix<T>) -> Result<Complex<T>> {
    let dd = cm.ddelta.map(|d| d.a12).unwrap_or_else(czero);
    if dd.norm() < lit(SIMPLE_DERIVATIVE) {
        return Err(Error::NonSimpleZero { lambda: format!("{}", cm.lambda), magnitude: dd.norm().to_f64().unwrap_or(0.0) });
    }
    Ok(-cm.delta.a11 / dd)
}

/// Moves a vertical edge away from known zeros.
fn nudge<T: Real>(a: T, found: &[(Complex<T>, CharMatrix<T>)], h: T) -> T {
    let clear = |x: T| found.iter().all(|(z, _)| z.im.abs() > h || (z.re - x).abs() >= lit(EDGE_CLEARANCE));
    for step in [0.0, 0.05, -0.05, 0.1, -0.1, 0.15, -0.15, 0.2, -0.2] {
        let x = a + lit::<T>(step);
        if clear(x) {
            return x;
        }
    }
    a
}

/// `S(x, λ)` with default options.
pub fn global_s<T: Real>(spec: &ProblemSpec<T>, x: T, lambda: Complex<T>, deriv: bool) -> Result<FundamentalMatrix<T>> {
    ForwardSolver::with_defaults(spec.clone())?.global_s(x, lambda, deriv)
}

/// `Δ(λ)` with default options.
pub fn char_fn<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>) -> Result<CharMatrix<T>> {
    ForwardSolver::with_defaults(spec.clone())?.char_fn(lambda, true)
}

pub fn char_fn_asymptotic<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    ForwardSolver::with_defaults(spec.clone())?.char_fn_asymptotic(lambda)
}

pub fn find_eigenvalues<T: Real>(spec: &ProblemSpec<T>, kmax: usize) -> Result<EigenSearch<T>> {
    ForwardSolver::with_defaults(spec.clone())?.find_eigenvalues(kmax)
}

pub fn weyl_function<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    ForwardSolver::with_defaults(spec.clone())?.weyl_function(lambda)
}

pub fn weyl_residue<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    ForwardSolver::with_defaults(spec.clone())?.weyl_residue(lambda)
}
