//! Dormand-Prince 5(4) integration of linear matrix ODEs.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::operator::{Operator, Superoperator, C64};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rel_tol: 1e-9, abs_tol: 1e-12, initial_step: 1e-3, min_step: 1e-13, max_step: 0.1 }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &DVector<C64>, terms: &[(f64, &DVector<C64>)], h: f64) -> DVector<C64> {
    let mut out = y.clone();
    for (a, k) in terms {
        out.axpy(C64::new(a * h, 0.0), k, C64::new(1.0, 0.0));
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t0`, returning `y` at each of
/// `times` (non-decreasing, all `>= t0`). Steps never cross a knot.
pub fn integrate<F>(f: F, t0: f64, y0: DVector<C64>, times: &[f64], knots: &[f64], opts: OdeOptions) -> Result<Vec<DVector<C64>>>
where
    F: Fn(f64, &DVector<C64>) -> DVector<C64>,
{
    let mut stops: Vec<f64> = knots.iter().copied().filter(|&k| k > t0).collect();
    stops.extend(times.iter().copied());
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.initial_step;
    let mut k1 = f(t, &y);
    let mut next_time = 0;
    while next_time < times.len() && times[next_time] <= t0 + 1e-14 {
        out.push(y.clone());
        next_time += 1;
    }
    for &stop in &stops {
        while t < stop - 1e-14 {
            let mut step = h.min(opts.max_step).min(stop - t);
            let last = step >= stop - t - 1e-14;
            if last {
                step = stop - t;
            }
            let k2 = f(t + step / 5.0, &axpy(&y, &[(A21, &k1)], step));
            let k3 = f(t + 0.3 * step, &axpy(&y, &[(A31, &k1), (A32, &k2)], step));
            let k4 = f(t + 0.8 * step, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], step));
            let k5 = f(t + 8.0 / 9.0 * step, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], step));
            let k6 = f(t + step, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], step));
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], step);
            let k7 = f(t + step, &y_new);
            let mut err: f64 = 0.0;
            for i in 0..y.len() {
                let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = opts.abs_tol + opts.rel_tol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }
            if err <= 1.0 {
                t = if last { stop } else { t + step };
                y = y_new;
                k1 = k7;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = step * factor;
                } else {
                    h = h.max(step * factor.min(1.0));
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.1);
                if h < opts.min_step {
                    return Err(Error::StepUnderflow { time: t });
                }
            }
        }
        while next_time < times.len() && (times[next_time] - t).abs() < 1e-12 {
            out.push(y.clone());
            next_time += 1;
        }
    }
    Ok(out)
}

/// Solves `d rho / dt = L_t[rho]` and returns `rho` at `times`.
pub fn lindblad_ode_solve<G: Generator + ?Sized>(
    gen: &G,
    rho0: &Operator,
    times: &[f64],
    opts: OdeOptions,
) -> Result<Vec<Operator>> {
    let knots = gen.knots();
    let f = |t: f64, y: &DVector<C64>| gen.superoperator(t).apply_vec(y);
    let ys = integrate(f, 0.0, rho0.vec(), times, &knots, opts)?;
    Ok(ys.iter().map(Operator::from_vec).collect())
}

/// Solves `d Phi / dt = L_t Phi`, `Phi_0 = id`.
pub fn propagate_maps<G: Generator + ?Sized>(gen: &G, times: &[f64], opts: OdeOptions) -> Result<Vec<Superoperator>> {
    let d = gen.dim();
    let n = d * d;
    let knots = gen.knots();
    let f = |t: f64, y: &DVector<C64>| {
        let phi = nalgebra::DMatrix::from_column_slice(n, n, y.as_slice());
        let out = gen.superoperator(t).matrix() * phi;
        DVector::from_column_slice(out.as_slice())
    };
    let id = nalgebra::DMatrix::<C64>::identity(n, n);
    let ys = integrate(f, 0.0, DVector::from_column_slice(id.as_slice()), times, &knots, opts)?;
    Ok(ys
        .iter()
        .map(|y| Superoperator::from_matrix(d, nalgebra::DMatrix::from_column_slice(n, n, y.as_slice())))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{decay_generator, ConstantGenerator, LindbladTerms};
    use crate::operator::{c, positive_negative_parts, pauli, Sign};

    #[test]
    fn scalar_exponential() {
        let f = |_t: f64, y: &DVector<C64>| y * C64::new(-1.0, 2.0);
        let ys = integrate(f, 0.0, DVector::from_element(1, C64::new(1.0, 0.0)), &[0.5, 1.0, 3.0], &[], OdeOptions::default()).unwrap();
        for (y, t) in ys.iter().zip([0.5, 1.0, 3.0]) {
            assert!((y[0] - (C64::new(-1.0, 2.0) * t).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_generator_is_constant() {
        let g = ConstantGenerator(LindbladTerms::zero(2));
        let rho = Operator::from_real_rows(2, &[0.3, 0.1, 0.1, 0.7]);
        for r in lindblad_ode_solve(&g, &rho, &[0.0, 1.0, 2.0], OdeOptions::default()).unwrap() {
            assert!(r.max_abs_diff(&rho) < 1e-15);
        }
    }

    #[test]
    fn decay_population() {
        let g = decay_generator(1.0);
        let rho = Operator::unit(2, 1, 1);
        let ts = [0.5, 1.0, 2.0, 4.0];
        let out = lindblad_ode_solve(&g, &rho, &ts, OdeOptions::default()).unwrap();
        for (r, t) in out.iter().zip(ts) {
            assert!((r.entry(1, 1).re - (-t as f64).exp()).abs() < 1e-7);
            assert!((r.trace().re - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_in_split_parts() {
        let g = ConstantGenerator(LindbladTerms::with_channels(
            pauli::z() * 0.4,
            vec![crate::generators::Channel::new(0.7, pauli::minus()), crate::generators::Channel::new(0.2, pauli::x())],
        ));
        let qx = pauli::x() * 0.5;
        let split = positive_negative_parts(&qx).unwrap();
        let ts = [0.3, 1.1];
        let direct = lindblad_ode_solve(&g, &qx, &ts, OdeOptions::default()).unwrap();
        let (mp, sp) = split.part(Sign::Plus).unwrap();
        let (mm, sm) = split.part(Sign::Minus).unwrap();
        let p = lindblad_ode_solve(&g, sp, &ts, OdeOptions::default()).unwrap();
        let m = lindblad_ode_solve(&g, sm, &ts, OdeOptions::default()).unwrap();
        for k in 0..ts.len() {
            let rec = &p[k] * mp - &m[k] * mm;
            assert!(rec.max_abs_diff(&direct[k]) < 1e-8);
        }
    }

    #[test]
    fn map_propagation_matches_state_propagation() {
        let g = decay_generator(0.6);
        let maps = propagate_maps(&g, &[0.7], OdeOptions::default()).unwrap();
        let rho = Operator::from_rows(2, &[c(0.4, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.6, 0.0)]);
        let direct = lindblad_ode_solve(&g, &rho, &[0.7], OdeOptions::default()).unwrap();
        assert!(maps[0].apply(&rho).max_abs_diff(&direct[0]) < 1e-9);
    }
}
