//! Adaptive eighth-order Dormand–Prince integration (DOP853) for small complex
//! linear systems along the real line.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use num_complex::Complex;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

type State<T, const N: usize> = [Complex<T>; N];

/// Linear combination `y + h Σ c_i k_i`.
#[inline]
fn comb<T: Real, const N: usize>(y: &State<T, N>, h: T, terms: &[(f64, &State<T, N>)]) -> State<T, N> {
    let mut out = *y;
    for (c, k) in terms {
        let w = h * lit::<T>(*c);
        for i in 0..N {
            out[i] = out[i] + k[i] * w;
        }
    }
    out
}

/// Integrator settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dop853<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Dop853<T> {
    fn default() -> Self {
        Self { rtol: lit(1e-11), atol: lit(1e-13), max_steps: 200_000 }
    }
}

impl<T: Real> Dop853<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrates `y' = f(x, y)` from `(x0, y0)` and returns the state at every
    /// point of `outputs`, which must be monotone in the direction of travel.
    /// Steps are clipped so each output is hit exactly; an output equal to `x0`
    /// returns `y0` unchanged.
    pub fn integrate<const N: usize, F>(&self, f: F, x0: T, y0: State<T, N>, outputs: &[T]) -> Result<Vec<State<T, N>>>
    where
        F: Fn(T, &State<T, N>) -> State<T, N>,
    {
        let mut out = Vec::with_capacity(outputs.len());
        let Some(&last) = outputs.last() else {
            return Ok(out);
        };
        let dir = if last >= x0 { T::one() } else { -T::one() };
        let fail = |to: T, reason: String| Error::Integrator {
            from: x0.to_f64().unwrap_or(f64::NAN),
            to: to.to_f64().unwrap_or(f64::NAN),
            reason,
        };

        let rtol = self.rtol;
        let atol = self.atol;
        let safe = lit::<T>(0.9);
        let facc1 = T::one() / lit::<T>(0.333);
        let facc2 = T::one() / lit::<T>(6.0);
        let expo1 = lit::<T>(1.0 / 8.0);
        let nf = lit::<T>(N as f64);

        let mut x = x0;
        let mut y = y0;
        let mut k1 = f(x, &y);

        // Initial step from the size of y and y'.
        let span = (last - x0).abs();
        let mut h = {
            let (mut d0, mut d1) = (T::zero(), T::zero());
            for i in 0..N {
                let sk = atol + rtol * y[i].norm();
                d0 = d0 + (y[i].norm() / sk).powi(2);
                d1 = d1 + (k1[i].norm() / sk).powi(2);
            }
            let (d0, d1) = ((d0 / nf).sqrt(), (d1 / nf).sqrt());
            let h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) { lit(1e-4) } else { lit::<T>(0.01) * d0 / d1 };
            h0.min(span.max(lit(1e-4)))
        };
        let mut steps = 0usize;
        let mut rejected_last = false;

        for &target in outputs {
            if (target - x) * dir < T::zero() {
                return Err(fail(target, "output points are not monotone".into()));
            }
            while (target - x) * dir > T::zero() {
                steps += 1;
                if steps > self.max_steps {
                    return Err(fail(target, format!("step limit {} exceeded at x = {x}", self.max_steps)));
                }
                let remaining = (target - x).abs();
                if remaining <= T::epsilon() * x.abs().max(T::one()) * lit(10.0) {
                    x = target;
                    k1 = f(x, &y);
                    break;
                }
                let clipped = h >= remaining;
                let hs = if clipped { remaining } else { h } * dir;
                if hs.abs() <= T::epsilon() * x.abs().max(T::one()) * lit(10.0) {
                    return Err(fail(target, format!("step size underflow at x = {x}")));
                }

                let k2 = f(x + hs * lit(C2), &comb(&y, hs, &[(A21, &k1)]));
                let k3 = f(x + hs * lit(C3), &comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
                let k4 = f(x + hs * lit(C4), &comb(&y, hs, &[(A41, &k1), (A43, &k3)]));
                let k5 = f(x + hs * lit(C5), &comb(&y, hs, &[(A51, &k1), (A53, &k3), (A54, &k4)]));
                let k6 = f(x + hs * lit(C6), &comb(&y, hs, &[(A61, &k1), (A64, &k4), (A65, &k5)]));
                let k7 = f(x + hs * lit(C7), &comb(&y, hs, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
                let k8 = f(
                    x + hs * lit(C8),
                    &comb(&y, hs, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
                );
                let k9 = f(
                    x + hs * lit(C9),
                    &comb(&y, hs, &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
                );
                let k10 = f(
                    x + hs * lit(C10),
                    &comb(
                        &y,
                        hs,
                        &[(A101, &k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)],
                    ),
                );
                let k11 = f(
                    x + hs * lit(C11),
                    &comb(
                        &y,
                        hs,
                        &[
                            (A111, &k1),
                            (A114, &k4),
                            (A115, &k5),
                            (A116, &k6),
                            (A117, &k7),
                            (A118, &k8),
                            (A119, &k9),
                            (A1110, &k10),
                        ],
                    ),
                );
                let x_new = if clipped { target } else { x + hs };
                let yy1 = comb(
                    &y,
                    hs,
                    &[
                        (A121, &k1),
                        (A124, &k4),
                        (A125, &k5),
                        (A126, &k6),
                        (A127, &k7),
                        (A128, &k8),
                        (A129, &k9),
                        (A1210, &k10),
                        (A1211, &k11),
                    ],
                );
                let k12 = f(x_new, &yy1);
                let y_new = comb(
                    &y,
                    hs,
                    &[(B1, &k1), (B6, &k6), (B7, &k7), (B8, &k8), (B9, &k9), (B10, &k10), (B11, &k11), (B12, &k12)],
                );

                let mut err = T::zero();
                let mut err2 = T::zero();
                for i in 0..N {
                    let sk = atol + rtol * y[i].norm().max(y_new[i].norm());
                    let bsum = k1[i] * lit::<T>(B1)
                        + k6[i] * lit::<T>(B6)
                        + k7[i] * lit::<T>(B7)
                        + k8[i] * lit::<T>(B8)
                        + k9[i] * lit::<T>(B9)
                        + k10[i] * lit::<T>(B10)
                        + k11[i] * lit::<T>(B11)
                        + k12[i] * lit::<T>(B12);
                    let e2 = bsum - k1[i] * lit::<T>(BHH1) - k9[i] * lit::<T>(BHH2) - k12[i] * lit::<T>(BHH3);
                    err2 = err2 + (e2.norm() / sk).powi(2);
                    let e = k1[i] * lit::<T>(ER1)
                        + k6[i] * lit::<T>(ER6)
                        + k7[i] * lit::<T>(ER7)
                        + k8[i] * lit::<T>(ER8)
                        + k9[i] * lit::<T>(ER9)
                        + k10[i] * lit::<T>(ER10)
                        + k11[i] * lit::<T>(ER11)
                        + k12[i] * lit::<T>(ER12);
                    err = err + (e.norm() / sk).powi(2);
                }
                let mut deno = err + lit::<T>(0.01) * err2;
                if deno <= T::zero() {
                    deno = T::one();
                }
                let err = hs.abs() * err * (T::one() / (deno * nf)).sqrt();
                if !err.is_finite() {
                    return Err(fail(target, format!("non-finite error estimate at x = {x}")));
                }

                let fac11 = err.powf(expo1);
                let fac = facc2.max(facc1.min(fac11 / safe));
                let mut h_new = hs.abs() / fac;
                if err <= T::one() {
                    x = x_new;
                    y = y_new;
                    k1 = f(x, &y);
                    if rejected_last {
                        h_new = h_new.min(hs.abs());
                        rejected_last = false;
                    }
                    // A step clipped to an output must not shrink the next one.
                    h = if clipped { h_new.max(h) } else { h_new };
                } else {
                    h_new = hs.abs() / facc1.min(fac11 / safe);
                    rejected_last = true;
                    h = h_new;
                }
            }
            out.push(y);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn rotation_system_matches_closed_form() {
        // y1' = λ y2, y2' = −λ y1 with complex λ.
        let lam = c(3.7, 0.4);
        let f = |_x: f64, y: &[Complex<f64>; 2]| [lam * y[1], -lam * y[0]];
        let xs = [0.5, 1.0, std::f64::consts::PI];
        let ys = Dop853::default().integrate(f, 0.0, [c(1.0, 0.0), c(0.0, 0.0)], &xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let e0 = (y[0] - (lam * *x).cos()).norm();
            let e1 = (y[1] + (lam * *x).sin()).norm();
            assert!(e0 < 1e-10 && e1 < 1e-10, "x={x} e0={e0} e1={e1}");
        }
    }

    #[test]
    fn backward_integration_and_repeated_outputs() {
        let f = |x: f64, y: &[Complex<f64>; 1]| [y[0] * x];
        let xs = [2.0, 2.0, 1.0, 0.0];
        let ys = Dop853::default().integrate(f, 2.0, [c(1.0, 0.0)], &xs).unwrap();
        assert_eq!(ys[0][0], c(1.0, 0.0));
        assert_eq!(ys[1][0], c(1.0, 0.0));
        assert!((ys[3][0].re - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_outputs_are_rejected() {
        let f = |_x: f64, y: &[Complex<f64>; 1]| [y[0]];
        assert!(Dop853::default().integrate(f, 0.0, [c(1.0, 0.0)], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn step_limit_reports_segment() {
        let f = |_x: f64, y: &[Complex<f64>; 1]| [y[0] * c(0.0, 1e4)];
        let solver = Dop853 { max_steps: 10, ..Dop853::default() };
        let err = solver.integrate(f, 0.0, [c(1.0, 0.0)], &[3.0]).unwrap_err();
        assert!(matches!(err, Error::Integrator { .. }));
    }

    #[test]
    fn works_in_single_precision() {
        let f = |_x: f32, y: &[Complex<f32>; 2]| [y[1], -y[0]];
        let ys = Dop853::new(1e-5f32, 1e-6).integrate(f, 0.0, [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)], &[1.0]).unwrap();
        assert!((ys[0][0].re - 1.0f32.cos()).abs() < 1e-4);
    }
}
