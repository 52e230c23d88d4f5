use proptest::prelude::*;
use singular_dirac::inverse::{
    build_main_equation, h_matrix, kernel_d, omega_grid, pair_data, recover_phi, reconstruct_potential, run_algorithm1,
    solve_main_equation, tabulate_phi2,
};
use singular_dirac::linalg::CMatrix;
use singular_dirac::{
    Complex64, EigenSearch, ForwardSolver, PairedData, Potential, ProblemSpec, ReconstructionOptions, Singularity, SpectralData,
};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

const K_MAX: usize = 40;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn n1_spec(pot: Potential) -> ProblemSpec {
    ProblemSpec::new(vec![Singularity::new(FRAC_PI_2, c(0.3, 0.0), 0.0)], 0.0, 0.0, pot).unwrap()
}

fn trig() -> Potential {
    Potential::Trig { amplitude: c(0.2, 0.0), frequency: 1.0 }
}

struct Fixture {
    target: ForwardSolver,
    model: ForwardSolver,
    target_search: EigenSearch,
    model_search: EigenSearch,
}

impl Fixture {
    fn paired(&self, k: usize) -> PairedData {
        let t: SpectralData = self.target_search.spectral_data().unwrap().truncate(k).unwrap();
        let m: SpectralData = self.model_search.spectral_data().unwrap().truncate(k).unwrap();
        pair_data(&t, &m).unwrap()
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let target = ForwardSolver::with_defaults(n1_spec(trig())).unwrap();
        let model = ForwardSolver::with_defaults(n1_spec(Potential::Zero)).unwrap();
        let target_search = target.find_eigenvalues(K_MAX).unwrap();
        let model_search = model.find_eigenvalues(K_MAX).unwrap();
        Fixture { target, model, target_search, model_search }
    })
}

#[test]
fn diagonal_kernel_matches_difference_quotient() {
    let fs = ForwardSolver::with_defaults(n1_spec(trig())).unwrap();
    let h = 1e-5;
    for (x, lam) in [(0.7, c(2.3, 0.1)), (2.4, c(-4.6, 0.0)), (1.2, c(0.4, -0.3))] {
        let diag = kernel_d(&fs, x, lam, lam).unwrap();
        let p0 = fs.phi(x, lam).unwrap().col2();
        let pp = fs.phi(x, lam + h).unwrap().col2();
        let pm = fs.phi(x, lam - h).unwrap().col2();
        let forward = pp.wronskian(p0) / h;
        let central = (pp.wronskian(p0) + p0.wronskian(pm)) / (2.0 * h);
        assert!((diag - central).norm() < 1e-6, "x = {x}: {diag} vs {central}");
        assert!((diag - forward).norm() < 1e-4 * (1.0 + diag.norm()), "x = {x}: {diag} vs {forward}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_numerator_is_antisymmetric(x in 0.05f64..1.5, l in -8.0f64..8.0, t in -8.0f64..8.0, li in -1.0f64..1.0) {
        let fs = ForwardSolver::with_defaults(n1_spec(trig())).unwrap();
        let a = fs.phi(x, c(l, li)).unwrap().col2();
        let b = fs.phi(x, c(t, -li)).unwrap().col2();
        prop_assert!((a.wronskian(b) + b.wronskian(a)).norm() < 1e-12);
        prop_assert!(a.wronskian(a).norm() < 1e-12);
    }

    #[test]
    fn free_kernel_closed_form(x in 0.05f64..PI, l in -10.0f64..10.0, t in -10.0f64..10.0) {
        prop_assume!((l - t).abs() > 1e-6);
        let fs = ForwardSolver::with_defaults(ProblemSpec::new(vec![], 0.0, 0.0, Potential::Zero).unwrap()).unwrap();
        let d = kernel_d(&fs, x, c(l, 0.0), c(t, 0.0)).unwrap();
        let expect = -((l - t) * x).sin() / (l - t);
        prop_assert!((d.re - expect).abs() < 1e-9 && d.im.abs() < 1e-9);
    }
}

#[test]
fn lambda_hat_shrinks_with_the_perturbation() {
    let model = ForwardSolver::with_defaults(ProblemSpec::new(vec![], 0.0, 0.0, Potential::Zero).unwrap()).unwrap();
    let md = model.spectral_data(5).unwrap();
    let hats: Vec<f64> = [0.1, 0.05, 0.01]
        .iter()
        .map(|&eps| {
            let spec = ProblemSpec::new(vec![], 0.0, 0.0, Potential::Constant { q1: c(eps, 0.0), q2: c(0.5 * eps, 0.0) }).unwrap();
            let td = ForwardSolver::with_defaults(spec).unwrap().spectral_data(5).unwrap();
            pair_data(&td, &md).unwrap().lambda_hat
        })
        .collect();
    assert!(hats[0] > hats[1] && hats[1] > hats[2] && hats[2] > 0.0, "{hats:?}");
}

#[test]
fn data_from_the_model_reproduce_the_model() {
    let spec = n1_spec(trig());
    let data = ForwardSolver::with_defaults(spec.clone()).unwrap().spectral_data(4).unwrap();
    let opts = ReconstructionOptions { grid_step: 0.1, ..ReconstructionOptions::default() };
    let res = run_algorithm1(&data, &spec, &opts).unwrap();
    assert_eq!(res.lambda_hat, 0.0);
    assert!(res.max_error(&trig()) < 1e-10);
    for p in &res.points {
        assert!(p.kappa.max_abs() < 1e-12);
        assert!(p.condition_s && p.residual == 0.0);
    }
}

/// Largest defect of `φ̃_{ni} = φ_{ni} − Σ_k (P̃_{ni,k0}φ_{k0} − P̃_{ni,k1}φ_{k1})` over all rows at each `x`.
fn series_identity_defect(f: &Fixture, k: usize, xs: &[f64]) -> Vec<f64> {
    let paired = f.paired(k);
    let nodes = paired.nodes();
    let weights = paired.weights();
    let model_tab = tabulate_phi2(&f.model, &nodes, xs).unwrap();
    let target_tab = tabulate_phi2(&f.target, &nodes, xs).unwrap();
    let n = nodes.len();
    (0..xs.len())
        .map(|ix| {
            let (mv, md, tv) = (&model_tab.value[ix], &model_tab.dvalue[ix], &target_tab.value[ix]);
            let mut worst = 0.0f64;
            for r in 0..n {
                let mut acc = tv[r];
                for s in 0..n {
                    let d = if (nodes[r] - nodes[s]).norm() < 1e-9 {
                        -mv[r].wronskian(md[r])
                    } else {
                        mv[r].wronskian(mv[s]) / (nodes[r] - nodes[s])
                    };
                    let sign = if s % 2 == 0 { -1.0 } else { 1.0 };
                    acc = acc + tv[s].scale(d * weights[s] * sign);
                }
                worst = worst.max((acc - mv[r]).norm_inf());
            }
            worst
        })
        .collect()
}

#[test]
fn both_problems_known_satisfy_the_series_identity() {
    let f = fixture();
    let xs = [0.35, 0.9, 1.3, 2.0, 2.8];
    let coarse = series_identity_defect(f, 10, &xs);
    let fine = series_identity_defect(f, 20, &xs);
    for i in 0..xs.len() {
        assert!(fine[i] < coarse[i] && fine[i] < 1e-2, "x = {}: {:.3e} -> {:.3e}", xs[i], coarse[i], fine[i]);
    }
}

#[test]
fn recovered_phi_matches_the_target() {
    let f = fixture();
    let paired = f.paired(30);
    let nodes = paired.nodes();
    for x in [0.4, 1.0, 2.2] {
        let sys = build_main_equation(&f.model, &paired, x).unwrap();
        let sol = solve_main_equation(&sys, 1e8).unwrap();
        assert!(sol.residual <= 1e-10 * sol.rhs_norm.max(1.0));
        let phi = recover_phi(&sol.psi, &paired);
        let exact = tabulate_phi2(&f.target, &nodes, &[x]).unwrap();
        let mut worst = 0.0f64;
        for n in -10i64..=10 {
            let r = paired.row(n, 0);
            worst = worst.max((phi[r] - exact.value[0][r]).norm_inf());
        }
        assert!(worst < 1e-4, "x = {x}: {worst:.3e}");
    }
}

#[test]
fn operator_identity_improves_with_truncation() {
    let f = fixture();
    let x = 0.7;
    let defects: Vec<f64> = [10usize, 20, 40]
        .iter()
        .map(|&k| {
            let paired = f.paired(k);
            let hm = h_matrix(&f.model, &paired, x).unwrap();
            let h = h_matrix(&f.target, &paired, x).unwrap();
            hm.one_minus().matmul(&h.one_plus()).sub(&CMatrix::identity(hm.dim())).norm_inf()
        })
        .collect();
    assert!(defects[1] < defects[0] && defects[2] < defects[1], "{defects:?}");
    assert!(defects[2] < 1e-3, "{defects:?}");
}

#[test]
fn reconstruction_diagnostics() {
    let f = fixture();
    let opts = ReconstructionOptions { grid_step: 0.05, ..ReconstructionOptions::default() };
    let grid = omega_grid(f.model.spec(), opts.epsilon, opts.grid_step);
    let mut leak = Vec::new();
    for k in [10usize, 40] {
        let res = reconstruct_potential(&f.model, &f.paired(k), &grid, &opts).unwrap();
        assert!(res.max_relative_residual() <= 1e-10);
        assert!(res.condition_s_violations().is_empty());
        assert_eq!(res.condition3.len(), 2);
        assert!(res.condition3.iter().all(|c| c.value.is_finite() && c.value > 0.0));
        for p in &res.points {
            assert!((p.q.a12 - p.q.a21).norm() < 1e-14 && (p.q.a11 + p.q.a22).norm() < 1e-14);
        }
        leak.push(res.max_leakage());
    }
    assert!(leak[1] <= leak[0], "{leak:?}");
}
