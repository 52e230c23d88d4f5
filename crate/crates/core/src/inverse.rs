//! Reconstruction of the regular potential from spectral data through the
//! truncated main equation.

use crate::contour::gauss_legendre;
use crate::error::{Error, Result};
use crate::forward::ForwardSolver;
use crate::linalg::{condition_inf, CMatrix, Lu};
use crate::mat2::{Mat2, Vec2};
use crate::scalar::{czero, lit, re, Real};
use crate::types::{ProblemSpec, SpectralData};
use num_complex::Complex;
use rayon::prelude::*;

/// Below this separation the kernel switches to its diagonal limit.
pub const DIAGONAL_THRESHOLD: f64 = 1e-9;
/// Default cap on the condition estimate for accepting a grid point.
pub const CONDITION_CAP: f64 = 1e8;

const COND3_NODES: usize = 6;
const COND3_PANEL: f64 = 0.25;

/// Target and model spectral data paired by index, with the distances `ξ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedData<T> {
    kmax: usize,
    /// `[λ_{n0}, λ_{n1}]` for `n = −K..K`.
    pub lambda: Vec<[Complex<T>; 2]>,
    /// `[a_{n0}, a_{n1}]` for `n = −K..K`.
    pub a: Vec<[Complex<T>; 2]>,
    pub xi: Vec<T>,
    pub chi: Vec<T>,
    /// `Σ |ã_k| ξ_k` over the truncation.
    pub lambda_hat: T,
}

impl<T: Real> PairedData<T> {
    pub fn k_max(&self) -> usize {
        self.kmax
    }

    /// Size `2(2K+1)` of the main equation.
    pub fn dim(&self) -> usize {
        2 * self.lambda.len()
    }

    /// Row of `(n, i)`: `2(n+K) + i`.
    pub fn row(&self, n: i64, i: usize) -> usize {
        2 * (n + self.kmax as i64) as usize + i
    }

    /// `λ_{ni}` in row order.
    pub fn nodes(&self) -> Vec<Complex<T>> {
        self.lambda.iter().flat_map(|l| [l[0], l[1]]).collect()
    }

    /// `a_{ni}` in row order.
    pub fn weights(&self) -> Vec<Complex<T>> {
        self.a.iter().flat_map(|a| [a[0], a[1]]).collect()
    }
}

/// Pairs target data (`i = 0`) with model data (`i = 1`) index by index.
pub fn pair_data<T: Real>(target: &SpectralData<T>, model: &SpectralData<T>) -> Result<PairedData<T>> {
    if target.k_max() != model.k_max() {
        return Err(Error::DataMismatch(format!(
            "target covers [−{0}, {0}] but model covers [−{1}, {1}]",
            target.k_max(),
            model.k_max()
        )));
    }
    let mut out = PairedData {
        kmax: target.k_max(),
        lambda: Vec::with_capacity(target.len()),
        a: Vec::with_capacity(target.len()),
        xi: Vec::with_capacity(target.len()),
        chi: Vec::with_capacity(target.len()),
        lambda_hat: T::zero(),
    };
    for (t, m) in target.iter().zip(model.iter()) {
        if t.k != m.k {
            return Err(Error::DataMismatch(format!("index {} paired with {}", t.k, m.k)));
        }
        if m.a.norm() == T::zero() {
            return Err(Error::DataMismatch(format!("model residue ã_{} is zero", m.k)));
        }
        let xi = (t.lambda - m.lambda).norm() + (t.a / m.a - T::one()).norm();
        out.lambda.push([t.lambda, m.lambda]);
        out.a.push([t.a, m.a]);
        out.xi.push(xi);
        out.chi.push(if xi == T::zero() { T::zero() } else { xi.recip() });
        out.lambda_hat = out.lambda_hat + m.a.norm() * xi;
    }
    Ok(out)
}

/// `φ₂(x, λ)` and `∂φ₂/∂λ` at every `(x, λ)` pair, indexed `[x][λ]`.
#[derive(Clone, Debug)]
pub struct Phi2Table<T> {
    pub xs: Vec<T>,
    pub lambdas: Vec<Complex<T>>,
    pub value: Vec<Vec<Vec2<T>>>,
    pub dvalue: Vec<Vec<Vec2<T>>>,
}

/// Tabulates `φ₂` of `solver` with one sweep per spectral value.
pub fn tabulate_phi2<T: Real>(solver: &ForwardSolver<T>, lambdas: &[Complex<T>], xs: &[T]) -> Result<Phi2Table<T>> {
    let cols: Vec<Vec<(Vec2<T>, Vec2<T>)>> = lambdas
        .par_iter()
        .map(|&l| Ok(solver.phi_sweep(l, xs, true)?.iter().map(|j| (j.v.col2(), j.d.col2())).collect()))
        .collect::<Result<_>>()?;
    let value = (0..xs.len()).map(|ix| cols.iter().map(|c| c[ix].0).collect()).collect();
    let dvalue = (0..xs.len()).map(|ix| cols.iter().map(|c| c[ix].1).collect()).collect();
    Ok(Phi2Table { xs: xs.to_vec(), lambdas: lambdas.to_vec(), value, dvalue })
}

/// `⟨φ₂(λ), φ₂(θ)⟩/(λ−θ)` from tabulated values, with the limit
/// `−⟨φ₂(λ), ∂_λφ₂(λ)⟩` on the diagonal.
fn kernel_from<T: Real>(pl: Vec2<T>, dpl: Vec2<T>, pt: Vec2<T>, l: Complex<T>, t: Complex<T>) -> Complex<T> {
    if (l - t).norm() < lit(DIAGONAL_THRESHOLD) {
        -pl.wronskian(dpl)
    } else {
        pl.wronskian(pt) / (l - t)
    }
}

/// `D(x, λ, θ) = ⟨φ₂(x,λ), φ₂(x,θ)⟩/(λ−θ)` for the problem of `solver`.
pub fn kernel_d<T: Real>(solver: &ForwardSolver<T>, x: T, lambda: Complex<T>, theta: Complex<T>) -> Result<Complex<T>> {
    let jl = solver.phi_sweep(lambda, &[x], true)?[0];
    let pt = if (lambda - theta).norm() < lit(DIAGONAL_THRESHOLD) {
        jl.v.col2()
    } else {
        solver.phi_sweep(theta, &[x], false)?[0].v.col2()
    };
    Ok(kernel_from(jl.v.col2(), jl.d.col2(), pt, lambda, theta))
}

/// `P_{ni,kj} = D(x, λ_{ni}, λ_{kj}) a_{kj}` from the row of a table at one point.
fn p_matrix<T: Real>(paired: &PairedData<T>, phi: &[Vec2<T>], dphi: &[Vec2<T>]) -> CMatrix<T> {
    let nodes = paired.nodes();
    let w = paired.weights();
    let n = nodes.len();
    let mut p = CMatrix::zeros(n);
    for r in 0..n {
        for s in 0..n {
            p[(r, s)] = kernel_from(phi[r], dphi[r], phi[s], nodes[r], nodes[s]) * w[s];
        }
    }
    p
}

/// The block operator built from `P` by the change of unknowns
/// `Ψ_{n0} = χ_n(φ_{n0} − φ_{n1})`, `Ψ_{n1} = φ_{n1}`.
fn h_from_p<T: Real>(paired: &PairedData<T>, p: &CMatrix<T>) -> CMatrix<T> {
    let m = paired.lambda.len();
    let mut h = CMatrix::zeros(2 * m);
    for pn in 0..m {
        let (r0, r1) = (2 * pn, 2 * pn + 1);
        let chi = re(paired.chi[pn]);
        for pk in 0..m {
            let (s0, s1) = (2 * pk, 2 * pk + 1);
            let xi = re(paired.xi[pk]);
            h[(r0, s0)] = (p[(r0, s0)] - p[(r1, s0)]) * chi * xi;
            h[(r0, s1)] = (p[(r0, s0)] - p[(r1, s0)] - p[(r0, s1)] + p[(r1, s1)]) * chi;
            h[(r1, s0)] = p[(r1, s0)] * xi;
            h[(r1, s1)] = p[(r1, s0)] - p[(r1, s1)];
        }
    }
    h
}

/// `H(x)` of the problem held by `solver` at one point. With the model solver
/// this is `H̃(x)`; with the target solver it is the operator `H(x)` satisfying
/// `(I − H̃)(I + H) = I`.
pub fn h_matrix<T: Real>(solver: &ForwardSolver<T>, paired: &PairedData<T>, x: T) -> Result<CMatrix<T>> {
    let t = tabulate_phi2(solver, &paired.nodes(), &[x])?;
    Ok(h_from_p(paired, &p_matrix(paired, &t.value[0], &t.dvalue[0])))
}

/// `(I − H̃(x)) Ψ^(m) = Ψ̃^(m)`, `m = 1, 2`, truncated to `|n| ≤ K`.
#[derive(Clone, Debug)]
pub struct MainEquationSystem<T> {
    pub x: T,
    pub h: CMatrix<T>,
    pub rhs: [Vec<Complex<T>>; 2],
    /// Model `φ̃₂(x, λ_{ni})` in row order.
    pub model_phi: Vec<Vec2<T>>,
}

fn system_from<T: Real>(paired: &PairedData<T>, x: T, phi: &[Vec2<T>], dphi: &[Vec2<T>]) -> MainEquationSystem<T> {
    let h = h_from_p(paired, &p_matrix(paired, phi, dphi));
    let m = paired.lambda.len();
    let mut rhs = [vec![czero(); 2 * m], vec![czero(); 2 * m]];
    for pn in 0..m {
        let (f0, f1) = (phi[2 * pn], phi[2 * pn + 1]);
        let chi = re(paired.chi[pn]);
        rhs[0][2 * pn] = (f0.y1 - f1.y1) * chi;
        rhs[1][2 * pn] = (f0.y2 - f1.y2) * chi;
        rhs[0][2 * pn + 1] = f1.y1;
        rhs[1][2 * pn + 1] = f1.y2;
    }
    MainEquationSystem { x, h, rhs, model_phi: phi.to_vec() }
}

/// Main equation at `x` with model quantities from `model`.
pub fn build_main_equation<T: Real>(model: &ForwardSolver<T>, paired: &PairedData<T>, x: T) -> Result<MainEquationSystem<T>> {
    let t = tabulate_phi2(model, &paired.nodes(), &[x])?;
    Ok(system_from(paired, x, &t.value[0], &t.dvalue[0]))
}

/// Solution of the main equation with its diagnostics.
#[derive(Clone, Debug)]
pub struct MainSolution<T> {
    pub psi: [Vec<Complex<T>>; 2],
    /// `max_m ‖(I − H̃)Ψ^(m) − Ψ̃^(m)‖_∞`.
    pub residual: T,
    /// `max_m ‖Ψ̃^(m)‖_∞`.
    pub rhs_norm: T,
    /// `‖I − H̃‖_∞ ‖(I − H̃)⁻¹‖_∞`.
    pub cond: T,
    /// Whether the condition estimate is below the cap.
    pub condition_s: bool,
}

fn inf_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

/// Dense solve for both right-hand sides.
pub fn solve_main_equation<T: Real>(sys: &MainEquationSystem<T>, cond_cap: T) -> Result<MainSolution<T>> {
    let a = sys.h.one_minus();
    let lu = Lu::new(&a).ok_or_else(|| Error::ConditionS { x: sys.x.to_f64().unwrap_or(f64::NAN), cond: f64::INFINITY })?;
    let cond = condition_inf(&a, &lu);
    let psi = [lu.solve(&sys.rhs[0]), lu.solve(&sys.rhs[1])];
    let mut residual = T::zero();
    let mut rhs_norm = T::zero();
    for m in 0..2 {
        let r: Vec<Complex<T>> = a.matvec(&psi[m]).iter().zip(&sys.rhs[m]).map(|(u, v)| *u - *v).collect();
        residual = residual.max(inf_norm(&r));
        rhs_norm = rhs_norm.max(inf_norm(&sys.rhs[m]));
    }
    let condition_s = cond.is_finite() && cond <= cond_cap;
    if !condition_s {
        log::warn!("Condition S flagged at x = {}: condition estimate {:e}", sys.x, cond);
    }
    Ok(MainSolution { psi, residual, rhs_norm, cond, condition_s })
}

/// `φ₂(x, λ_{ni})` of the target from `Ψ`, in row order.
pub fn recover_phi<T: Real>(psi: &[Vec<Complex<T>>; 2], paired: &PairedData<T>) -> Vec<Vec2<T>> {
    let m = paired.lambda.len();
    let mut out = Vec::with_capacity(2 * m);
    for pn in 0..m {
        let xi = re(paired.xi[pn]);
        let n1 = Vec2::new(psi[0][2 * pn + 1], psi[1][2 * pn + 1]);
        let n0 = Vec2::new(psi[0][2 * pn] * xi, psi[1][2 * pn] * xi) + n1;
        out.push(n0);
        out.push(n1);
    }
    out
}

/// `κ(x) = Σ (a_{k0} φ̃_{2,k0} φᵀ_{2,k0} − a_{k1} φ̃_{2,k1} φᵀ_{2,k1})`.
pub fn kappa<T: Real>(paired: &PairedData<T>, model_phi: &[Vec2<T>], phi: &[Vec2<T>]) -> Mat2<T> {
    let w = paired.weights();
    let mut acc = Mat2::zero();
    for r in 0..w.len() {
        let term = model_phi[r].outer(phi[r]).scale(w[r]);
        acc = if r % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

/// Closest symmetric trace-free matrix `[[q1, q2], [q2, −q1]]`.
pub fn project_symmetric_tracefree<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    let h = lit::<T>(0.5);
    Mat2::symmetric_tracefree((m.a11 - m.a22) * h, (m.a12 + m.a21) * h)
}

/// Settings for the reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionOptions<T> {
    pub epsilon: T,
    pub grid_step: T,
    pub cond_cap: T,
    /// Evaluate the weighted integrability quadrature of `Bκ − κB`.
    pub condition3: bool,
}

impl<T: Real> Default for ReconstructionOptions<T> {
    fn default() -> Self {
        Self { epsilon: lit(0.1), grid_step: lit(0.01), cond_cap: lit(CONDITION_CAP), condition3: true }
    }
}

/// Uniform grid `x_j = j·step` restricted to `Ω_ε`.
pub fn omega_grid<T: Real>(spec: &ProblemSpec<T>, epsilon: T, step: T) -> Vec<T> {
    let mut out = Vec::new();
    let mut j = 1usize;
    loop {
        let x = step * lit::<T>(j as f64);
        if x >= T::PI() {
            break;
        }
        if spec.in_omega(x, epsilon) {
            out.push(x);
        }
        j += 1;
    }
    out
}

/// Per-point reconstruction output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointResult<T> {
    pub x: T,
    pub kappa: Mat2<T>,
    /// `Q̃ + Bκ − κB` projected to symmetric trace-free form.
    pub q: Mat2<T>,
    /// Largest entry of the discarded off-structure part.
    pub leakage: T,
    pub residual: T,
    pub rhs_norm: T,
    pub cond: T,
    pub condition_s: bool,
}

/// Weighted integral of `|Bκ − κB|` over one interval between singularities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition3<T> {
    pub left: T,
    pub right: T,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult<T> {
    pub points: Vec<PointResult<T>>,
    pub condition3: Vec<Condition3<T>>,
    pub lambda_hat: T,
    pub k_max: usize,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> ReconstructionResult<T> {
    pub fn xs(&self) -> Vec<T> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// `max_x max(|q1 − q1_ref|, |q2 − q2_ref|)`.
    pub fn max_error(&self, reference: &crate::potential::Potential<T>) -> T {
        self.points
            .iter()
            .map(|p| {
                let (q1, q2) = reference.eval(p.x);
                (p.q.a11 - q1).norm().max((p.q.a12 - q2).norm())
            })
            .fold(T::zero(), T::max)
    }

    pub fn max_leakage(&self) -> T {
        self.points.iter().fold(T::zero(), |m, p| m.max(p.leakage))
    }

    /// Largest main-equation residual relative to the right-hand side.
    pub fn max_relative_residual(&self) -> T {
        self.points.iter().fold(T::zero(), |m, p| m.max(p.residual / p.rhs_norm.max(T::min_positive_value())))
    }

    /// Grid points where the condition estimate exceeded the cap.
    pub fn condition_s_violations(&self) -> Vec<T> {
        self.points.iter().filter(|p| !p.condition_s).map(|p| p.x).collect()
    }
}

fn at<T: Real>(stage: &'static str, x: T) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtGridPoint { stage, x: x.to_f64().unwrap_or(f64::NAN), source: Box::new(e) }
}

fn commutator_with_b<T: Real>(k: &Mat2<T>) -> Mat2<T> {
    Mat2::b() * *k - *k * Mat2::b()
}

fn solve_point<T: Real>(
    model: &ForwardSolver<T>,
    paired: &PairedData<T>,
    x: T,
    phi: &[Vec2<T>],
    dphi: &[Vec2<T>],
    cond_cap: T,
) -> Result<PointResult<T>> {
    let sys = system_from(paired, x, phi, dphi);
    let sol = solve_main_equation(&sys, cond_cap).map_err(at("main equation", x))?;
    let rec = recover_phi(&sol.psi, paired);
    let k = kappa(paired, &sys.model_phi, &rec);
    let raw = model.spec().potential().matrix(x) + commutator_with_b(&k);
    let q = project_symmetric_tracefree(&raw);
    Ok(PointResult {
        x,
        kappa: k,
        q,
        leakage: (raw - q).max_abs(),
        residual: sol.residual,
        rhs_norm: sol.rhs_norm,
        cond: sol.cond,
        condition_s: sol.condition_s,
    })
}

/// Gauss–Legendre nodes and weights on `(l, r)`, graded geometrically toward
/// singular ends down to distance `dmin`.
fn graded_rule<T: Real>(l: T, r: T, l_sing: bool, r_sing: bool, dmin: T) -> Vec<(T, T)> {
    let two = lit::<T>(2.0);
    let mid = (l + r) / two;
    let mut breaks = vec![if l_sing { l + dmin } else { l }];
    if l_sing {
        let mut d = dmin * two;
        while l + d < mid {
            breaks.push(l + d);
            d = d * two;
        }
    }
    breaks.push(mid);
    if r_sing {
        let mut tail = Vec::new();
        let mut d = dmin * two;
        while r - d > mid {
            tail.push(r - d);
            d = d * two;
        }
        breaks.extend(tail.into_iter().rev());
    }
    breaks.push(if r_sing { r - dmin } else { r });
    let (gx, gw) = gauss_legendre::<T>(COND3_NODES);
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let pieces = (len / lit::<T>(COND3_PANEL)).ceil().to_usize().unwrap_or(1).max(1);
        let h = len / lit::<T>(pieces as f64);
        for p in 0..pieces {
            let a = w[0] + h * lit::<T>(p as f64);
            let half = h / two;
            for (x, wt) in gx.iter().zip(&gw) {
                out.push((a + half + half * *x, half * *wt));
            }
        }
    }
    out
}

/// Algorithm steps 2–4 on a grid: main equation, `φ` recovery, `κ` and `Q`.
pub fn reconstruct_potential<T: Real>(
    model: &ForwardSolver<T>,
    paired: &PairedData<T>,
    grid: &[T],
    opts: &ReconstructionOptions<T>,
) -> Result<ReconstructionResult<T>> {
    let spec = model.spec();
    for &x in grid {
        if !(x > T::zero() && x < T::PI()) {
            return Err(Error::spec("grid", format!("x = {x} not in (0, π)")));
        }
        if spec.singularities().iter().any(|s| s.gamma == x) {
            return Err(Error::AtSingularity { x: x.to_f64().unwrap_or(f64::NAN) });
        }
    }
    let gammas: Vec<T> = spec.singularities().iter().map(|s| s.gamma).collect();
    let mut ends = vec![T::zero()];
    ends.extend(&gammas);
    ends.push(T::PI());
    let rules: Vec<Vec<(T, T)>> = if opts.condition3 {
        let n = gammas.len();
        (0..=n).map(|k| graded_rule(ends[k], ends[k + 1], k > 0, k < n, opts.epsilon / lit(10.0))).collect()
    } else {
        Vec::new()
    };
    let mut xs = grid.to_vec();
    for r in &rules {
        xs.extend(r.iter().map(|p| p.0));
    }
    let table = tabulate_phi2(model, &paired.nodes(), &xs)?;
    let results: Vec<PointResult<T>> = (0..xs.len())
        .into_par_iter()
        .map(|ix| solve_point(model, paired, xs[ix], &table.value[ix], &table.dvalue[ix], opts.cond_cap))
        .collect::<Result<_>>()?;
    let points = results[..grid.len()].to_vec();
    let mut condition3 = Vec::with_capacity(rules.len());
    let mut offset = grid.len();
    for (k, rule) in rules.iter().enumerate() {
        let mut value = T::zero();
        for (j, (x, w)) in rule.iter().enumerate() {
            let pr = &results[offset + j];
            let weight = spec
                .singularities()
                .iter()
                .fold(T::one(), |acc, s| acc * (*x - s.gamma).abs().powf(-lit::<T>(2.0) * s.mu.re));
            value = value + *w * commutator_with_b(&pr.kappa).max_abs() * weight;
        }
        offset += rule.len();
        condition3.push(Condition3 { left: ends[k], right: ends[k + 1], value });
    }
    Ok(ReconstructionResult {
        points,
        condition3,
        lambda_hat: paired.lambda_hat,
        k_max: paired.k_max(),
        alpha: spec.alpha(),
        beta: spec.beta(),
    })
}

/// Full pipeline from target spectral data and a model problem.
pub fn run_algorithm1<T: Real>(
    target: &SpectralData<T>,
    model_spec: &ProblemSpec<T>,
    opts: &ReconstructionOptions<T>,
) -> Result<ReconstructionResult<T>> {
    let model = ForwardSolver::with_defaults(model_spec.clone())?;
    let model_data = model.spectral_data(target.k_max())?;
    let paired = pair_data(target, &model_data)?;
    let grid = omega_grid(model_spec, opts.epsilon, opts.grid_step);
    reconstruct_potential(&model, &paired, &grid, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::scalar::c;
    use crate::types::SpectralDatum;

    fn free() -> ForwardSolver<f64> {
        ForwardSolver::with_defaults(ProblemSpec::new(vec![], 0.0, 0.0, Potential::Zero).unwrap()).unwrap()
    }

    fn data(pairs: &[(f64, f64)]) -> SpectralData<f64> {
        let k = (pairs.len() / 2) as i64;
        SpectralData::new(
            pairs.iter().enumerate().map(|(i, (l, a))| SpectralDatum { k: i as i64 - k, lambda: c(*l, 0.0), a: c(*a, 0.0) }).collect(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn identical_data_pairs_to_zero() {
        let d = data(&[(-1.0, 0.3), (0.0, 0.3), (1.0, 0.3)]);
        let p = pair_data(&d, &d).unwrap();
        assert!(p.xi.iter().all(|x| *x == 0.0) && p.chi.iter().all(|x| *x == 0.0));
        assert_eq!(p.lambda_hat, 0.0);
    }

    #[test]
    fn doubled_residues_give_unit_distance() {
        let m = data(&[(-1.0, 0.3), (0.0, 0.3), (1.0, 0.3)]);
        let t = data(&[(-1.0, 0.6), (0.0, 0.6), (1.0, 0.6)]);
        let p = pair_data(&t, &m).unwrap();
        assert!(p.xi.iter().all(|x| (*x - 1.0).abs() < 1e-15));
        assert!(p.xi.iter().zip(&p.chi).all(|(x, c)| (x * c - 1.0).abs() < 1e-15));
        assert!((p.lambda_hat - 0.9).abs() < 1e-15);
    }

    #[test]
    fn mismatched_ranges_are_rejected() {
        let a = data(&[(0.0, 0.3)]);
        let b = data(&[(-1.0, 0.3), (0.0, 0.3), (1.0, 0.3)]);
        assert!(matches!(pair_data(&a, &b), Err(Error::DataMismatch(_))));
    }

    #[test]
    fn free_kernel_closed_form() {
        let fs = free();
        let d = |x: f64, l: Complex<f64>, t: Complex<f64>| ((l - t) * x).sin() / (l - t) * -1.0;
        for (x, l, t) in [(0.3, c(1.2, 0.0), c(-0.7, 0.0)), (2.0, c(3.1, 0.2), c(2.9, -0.1)), (1.1, c(0.5, 0.5), c(4.0, 0.0))] {
            let k = kernel_d(&fs, x, l, t).unwrap();
            assert!((k - d(x, l, t)).norm() < 1e-9, "{k} vs {}", d(x, l, t));
        }
        let k = kernel_d(&fs, 1.3, c(2.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((k - c(-1.3, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn projection_keeps_structured_part() {
        let m = Mat2::symmetric_tracefree(c(0.2, 0.1), c(-0.4, 0.0));
        assert_eq!(project_symmetric_tracefree(&m), m);
        let skew = Mat2::b().scale(c(0.3, 0.0)) + Mat2::identity();
        assert!(project_symmetric_tracefree(&skew).max_abs() < 1e-16);
    }

    #[test]
    fn grid_avoids_singular_neighbourhoods() {
        let spec = ProblemSpec::new(vec![crate::types::Singularity::new(1.5, c(0.3, 0.0), 0.0)], 0.0, 0.0, Potential::Zero).unwrap();
        let g: Vec<f64> = omega_grid(&spec, 0.1, 0.01);
        assert!(g.iter().all(|x| (x - 1.5).abs() >= 0.1 && *x > 0.0 && *x < std::f64::consts::PI));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((293..=296).contains(&g.len()), "{}", g.len());
    }

    #[test]
    fn graded_rule_integrates_weight() {
        let rule: Vec<(f64, f64)> = graded_rule(0.0, 1.0, false, true, 1e-3);
        let v: f64 = rule.iter().map(|(x, w)| w * (1.0 - x).powf(-0.6)).sum();
        let exact = (1.0 - 1e-3f64.powf(0.4)) / 0.4;
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }
}
