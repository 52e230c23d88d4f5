//! Problem description, sectors of the λ-plane and spectral data.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::{lit, Real};
use num_complex::Complex;

/// One interior singularity `μ/(x−γ)·R(η)` of the system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singularity<T> {
    pub gamma: T,
    pub mu: Complex<T>,
    pub eta: T,
}

impl<T: Real> Singularity<T> {
    pub fn new(gamma: T, mu: Complex<T>, eta: T) -> Self {
        Self { gamma, mu, eta }
    }
}

/// Full description of a boundary value problem: singular part, regular
/// potential and boundary angles.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec<T> {
    singularities: Vec<Singularity<T>>,
    alpha: T,
    beta: T,
    potential: Potential<T>,
}

fn check_angle<T: Real>(field: &str, v: T) -> Result<()> {
    let h = T::FRAC_PI_2() * (T::one() + lit(1e-15));
    if !v.is_finite() || v < -h || v > h {
        return Err(Error::spec(field, format!("angle {v} outside [−π/2, π/2]")));
    }
    Ok(())
}

impl<T: Real> ProblemSpec<T> {
    /// Validates and builds a problem.
    pub fn new(singularities: Vec<Singularity<T>>, alpha: T, beta: T, potential: Potential<T>) -> Result<Self> {
        check_angle("alpha", alpha)?;
        check_angle("beta", beta)?;
        let pi = T::PI();
        let tol = lit::<T>(1e-12);
        for (i, s) in singularities.iter().enumerate() {
            let field = |name: &str| format!("singularity[{i}].{name}");
            if !s.gamma.is_finite() || s.gamma <= T::zero() || s.gamma >= pi {
                return Err(Error::spec(field("gamma"), format!("{} not in (0, π)", s.gamma)));
            }
            if i > 0 && s.gamma <= singularities[i - 1].gamma {
                return Err(Error::spec(field("gamma"), "singularities must be strictly increasing in gamma"));
            }
            if !(s.mu.re.is_finite() && s.mu.im.is_finite()) || s.mu.re <= T::zero() {
                return Err(Error::spec(field("mu"), format!("Re μ = {} must be positive", s.mu.re)));
            }
            let shifted = s.mu + lit::<T>(0.5);
            let n = shifted.re.round();
            if n >= T::one() && (shifted - Complex::new(n, T::zero())).norm() < tol {
                return Err(Error::spec(field("mu"), "μ + 1/2 must not be a positive integer"));
            }
            check_angle(&field("eta"), s.eta)?;
        }
        let spec = Self { singularities, alpha, beta, potential };
        spec.check_weighted_integrability()?;
        Ok(spec)
    }

    /// `|q_j(x)|·|x−γ_k|^{−2Re μ_k}` must be integrable near each `γ_k`: the first
    /// non-vanishing Taylor order `p` of `Q` at `γ_k` needs `p − 2Re μ_k > −1`.
    fn check_weighted_integrability(&self) -> Result<()> {
        for (k, s) in self.singularities.iter().enumerate() {
            let radius = self.disk_radius(k);
            if let Some(p) = self.potential.vanishing_order(s.gamma, radius) {
                let excess = lit::<T>(p as f64) - lit::<T>(2.0) * s.mu.re;
                if excess <= -T::one() {
                    return Err(Error::spec(
                        "potential",
                        format!(
                            "Q vanishes only to order {p} at γ = {}; weighted integrability needs order > 2Re μ − 1",
                            s.gamma
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn singularities(&self) -> &[Singularity<T>] {
        &self.singularities
    }

    pub fn n_singular(&self) -> usize {
        self.singularities.len()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn potential(&self) -> &Potential<T> {
        &self.potential
    }

    /// Same singular part and angles with a different regular potential.
    pub fn with_potential(&self, potential: Potential<T>) -> Result<Self> {
        Self::new(self.singularities.clone(), self.alpha, self.beta, potential)
    }

    /// Handoff radius `r_k = min(0.4·distance to nearest neighbour or endpoint, 0.2)`.
    pub fn disk_radius(&self, k: usize) -> T {
        let g = self.singularities[k].gamma;
        let left = if k == 0 { g } else { g - self.singularities[k - 1].gamma };
        let right = if k + 1 == self.singularities.len() { T::PI() - g } else { self.singularities[k + 1].gamma - g };
        (lit::<T>(0.4) * left.min(right)).min(lit(0.2))
    }

    /// Default matching points `x_j = (γ_j + γ_{j+1})/2`, `j = 1..N−1`.
    pub fn midpoints(&self) -> Vec<T> {
        self.singularities.windows(2).map(|w| (w[0].gamma + w[1].gamma) * lit(0.5)).collect()
    }

    /// Whether `x` lies in `Ω_ε`: inside `(0, π)` and at least `ε` from every `γ_k`.
    pub fn in_omega(&self, x: T, eps: T) -> bool {
        x > T::zero() && x < T::PI() && self.singularities.iter().all(|s| (x - s.gamma).abs() >= eps)
    }
}

/// Sector of the λ-plane: `Π_0 = (−π/2, π/2]`, `Π_1 = (π/2, π]`, `Π_{−1} = (−π, −π/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorIndex {
    pub l: i32,
    pub pi_index: i32,
}

/// Argument in `(−π, π]`, mapping a negative-zero imaginary part to `+π`.
pub fn principal_arg<T: Real>(z: Complex<T>) -> T {
    if z.im == T::zero() && z.re < T::zero() {
        T::PI()
    } else {
        z.im.atan2(z.re)
    }
}

pub fn sector_of<T: Real>(lambda: Complex<T>) -> Result<SectorIndex> {
    if lambda.re == T::zero() && lambda.im == T::zero() {
        return Err(Error::UndefinedSector);
    }
    let arg = principal_arg(lambda);
    let h = T::FRAC_PI_2();
    let pi_index = if arg > -h && arg <= h {
        0
    } else if arg > h {
        1
    } else {
        -1
    };
    Ok(SectorIndex { l: if pi_index == 0 { -1 } else { 1 }, pi_index })
}

/// `ν = min{1, 2Re μ_k}`.
pub fn nu_exponent<T: Real>(spec: &ProblemSpec<T>) -> T {
    spec.singularities().iter().fold(T::one(), |acc, s| acc.min(lit::<T>(2.0) * s.mu.re))
}

/// One eigenvalue with its Weyl residue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDatum<T> {
    pub k: i64,
    pub lambda: Complex<T>,
    pub a: Complex<T>,
}

/// Spectral data indexed by the contiguous range `[−K, K]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData<T> {
    data: Vec<SpectralDatum<T>>,
    strip_height: T,
}

impl<T: Real> SpectralData<T> {
    /// Validates index contiguity, distinctness, nonzero residues and the strip bound.
    pub fn new(mut data: Vec<SpectralDatum<T>>, strip_height: T) -> Result<Self> {
        data.sort_by_key(|d| d.k);
        if data.is_empty() || data.len() % 2 == 0 {
            return Err(Error::DataMismatch(format!("expected 2K+1 entries, got {}", data.len())));
        }
        let kmax = (data.len() / 2) as i64;
        for (i, d) in data.iter().enumerate() {
            if d.k != i as i64 - kmax {
                return Err(Error::DataMismatch(format!("indices are not the contiguous range [−{kmax}, {kmax}]")));
            }
            if d.a.norm() == T::zero() || !d.a.re.is_finite() || !d.a.im.is_finite() {
                return Err(Error::DataMismatch(format!("residue a_{} is zero or not finite", d.k)));
            }
            if !d.lambda.re.is_finite() || !d.lambda.im.is_finite() {
                return Err(Error::DataMismatch(format!("eigenvalue λ_{} is not finite", d.k)));
            }
            if d.lambda.im.abs() > strip_height {
                return Err(Error::DataMismatch(format!(
                    "λ_{} = {} lies outside the strip |Im λ| ≤ {strip_height}",
                    d.k, d.lambda
                )));
            }
        }
        for i in 0..data.len() {
            for j in i + 1..data.len() {
                if data[i].lambda == data[j].lambda {
                    return Err(Error::DataMismatch(format!("λ_{} = λ_{}: spectrum is not simple", data[i].k, data[j].k)));
                }
            }
        }
        Ok(Self { data, strip_height })
    }

    pub fn k_max(&self) -> usize {
        self.data.len() / 2
    }

    pub fn strip_height(&self) -> T {
        self.strip_height
    }

    pub fn as_slice(&self) -> &[SpectralDatum<T>] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SpectralDatum<T>> {
        self.data.iter()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: i64) -> Option<&SpectralDatum<T>> {
        let idx = k + self.k_max() as i64;
        if idx < 0 {
            return None;
        }
        self.data.get(idx as usize)
    }

    /// Restriction to `|k| ≤ kmax`.
    pub fn truncate(&self, kmax: usize) -> Result<Self> {
        if kmax > self.k_max() {
            return Err(Error::DataMismatch(format!("cannot truncate K = {} data to K = {kmax}", self.k_max())));
        }
        let data = self.data.iter().filter(|d| d.k.unsigned_abs() as usize <= kmax).copied().collect();
        Ok(Self { data, strip_height: self.strip_height })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn one(mu: Complex<f64>) -> Vec<Singularity<f64>> {
        vec![Singularity::new(FRAC_PI_2, mu, 0.0)]
    }

    #[test]
    fn sector_examples() {
        assert_eq!(sector_of(c(1.0, 0.0)).unwrap(), SectorIndex { l: -1, pi_index: 0 });
        assert_eq!(sector_of(c(-1.0, 0.0)).unwrap(), SectorIndex { l: 1, pi_index: 1 });
        assert_eq!(sector_of(c(-1.0, -0.0)).unwrap(), SectorIndex { l: 1, pi_index: 1 });
        assert_eq!(sector_of(c(0.0, 1.0)).unwrap(), SectorIndex { l: -1, pi_index: 0 });
        assert_eq!(sector_of(c(0.0, -1.0)).unwrap(), SectorIndex { l: 1, pi_index: -1 });
        assert!(matches!(sector_of(c(0.0, 0.0)), Err(Error::UndefinedSector)));
    }

    #[test]
    fn nu_examples() {
        let s = ProblemSpec::new(one(c(0.3, 0.0)), 0.0, 0.0, Potential::Zero).unwrap();
        assert!((nu_exponent(&s) - 0.6_f64).abs() < 1e-15);
        let free = ProblemSpec::<f64>::new(vec![], 0.0, 0.0, Potential::Zero).unwrap();
        assert_eq!(nu_exponent(&free), 1.0);
        let two = vec![Singularity::new(1.0, c(0.3, 0.1), 0.0), Singularity::new(2.0, c(0.8, 0.0), 0.0)];
        let s = ProblemSpec::new(two, 0.0, 0.0, Potential::Zero).unwrap();
        assert!((nu_exponent(&s) - 0.6_f64).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let bad_order = vec![Singularity::new(2.0, c(0.3, 0.0), 0.0), Singularity::new(1.0, c(0.3, 0.0), 0.0)];
        assert!(ProblemSpec::new(bad_order, 0.0, 0.0, Potential::Zero).is_err());
        assert!(ProblemSpec::new(one(c(-0.1, 0.0)), 0.0, 0.0, Potential::Zero).is_err());
        assert!(ProblemSpec::new(one(c(0.0, 1.0)), 0.0, 0.0, Potential::Zero).is_err());
        assert!(ProblemSpec::new(one(c(0.5, 0.0)), 0.0, 0.0, Potential::Zero).is_err());
        assert!(ProblemSpec::new(one(c(1.5, 0.0)), 0.0, 0.0, Potential::Zero).is_err());
        assert!(ProblemSpec::new(one(c(0.3, 0.0)), 2.0, 0.0, Potential::Zero).is_err());
        assert!(ProblemSpec::new(one(c(0.3, 0.0)), 0.0, -1.6, Potential::Zero).is_err());
        assert!(ProblemSpec::new(vec![Singularity::new(PI, c(0.3, 0.0), 0.0)], 0.0, 0.0, Potential::Zero).is_err());
        // Non-vanishing Q at γ with 2Re μ ≥ 1 is not weighted-integrable.
        let q = Potential::Constant { q1: c(0.1, 0.0), q2: c(0.0, 0.0) };
        assert!(ProblemSpec::new(one(c(0.7, 0.0)), 0.0, 0.0, q.clone()).is_err());
        assert!(ProblemSpec::new(one(c(0.3, 0.0)), 0.0, 0.0, q).is_ok());
        let err = ProblemSpec::new(one(c(-0.1, 0.0)), 0.0, 0.0, Potential::Zero).unwrap_err();
        assert!(err.to_string().contains("mu"));
        assert!(err.is_validation());
    }

    #[test]
    fn disk_radius_and_omega() {
        let two = vec![Singularity::new(1.0, c(0.3, 0.0), 0.0), Singularity::new(1.2, c(0.3, 0.0), 0.0)];
        let s = ProblemSpec::new(two, 0.0, 0.0, Potential::Zero).unwrap();
        assert!((s.disk_radius(0) - 0.08_f64).abs() < 1e-15);
        assert!((s.midpoints()[0] - 1.1_f64).abs() < 1e-15);
        assert!(s.in_omega(0.5, 0.1));
        assert!(!s.in_omega(1.05, 0.1));
        assert!(!s.in_omega(0.0, 0.1));
    }

    #[test]
    fn spectral_data_validation() {
        let mk = |k: i64| SpectralDatum { k, lambda: c(k as f64, 0.0), a: c(1.0 / PI, 0.0) };
        let d = SpectralData::new((-2..=2).rev().map(mk).collect(), 1.0).unwrap();
        assert_eq!(d.k_max(), 2);
        assert_eq!(d.get(-2).unwrap().k, -2);
        assert_eq!(d.truncate(1).unwrap().len(), 3);
        assert!(d.truncate(3).is_err());
        assert!(SpectralData::new((-2..=1).map(mk).collect(), 1.0).is_err());
        assert!(SpectralData::new(vec![mk(-1), mk(0), mk(2)], 1.0).is_err());
        let mut zero_a: Vec<_> = (-1..=1).map(mk).collect();
        zero_a[1].a = c(0.0, 0.0);
        assert!(SpectralData::new(zero_a, 1.0).is_err());
        let mut dup: Vec<_> = (-1..=1).map(mk).collect();
        dup[2].lambda = dup[0].lambda;
        assert!(SpectralData::new(dup, 1.0).is_err());
        let mut tall: Vec<_> = (-1..=1).map(mk).collect();
        tall[0].lambda = c(-1.0, 2.0);
        assert!(SpectralData::new(tall, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn sectors_partition_the_plane(r in 1e-6_f64..1e3, theta in -PI..PI) {
            let lam = c(r * theta.cos(), r * theta.sin());
            let s = sector_of(lam).unwrap();
            prop_assert!([-1, 0, 1].contains(&s.pi_index));
            prop_assert_eq!(s.l == -1, s.pi_index == 0);
            let arg = principal_arg(lam);
            let expected = if arg > -FRAC_PI_2 && arg <= FRAC_PI_2 { 0 } else if arg > 0.0 { 1 } else { -1 };
            prop_assert_eq!(s.pi_index, expected);
        }
    }
}
