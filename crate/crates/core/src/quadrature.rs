//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! complex integrands.

use crate::error::{Error, Result};
use crate::operator::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-8, abs_tol: 1e-13, max_intervals: 4000 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> Vec<C64>>(f: &mut F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let n = fc.len();
    let mut k: Vec<C64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<C64> = fc.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for i in 0..n {
            let s = f1[i] + f2[i];
            k[i] += s * WGK[j];
            if j % 2 == 1 {
                g[i] += s * WG[j / 2];
            }
        }
    }
    let mut error: f64 = 0.0;
    for i in 0..n {
        k[i] *= half;
        g[i] *= half;
        error += (k[i] - g[i]).norm_sqr();
    }
    Piece { a, b, value: k, error: error.sqrt() }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates `f` over `[a, b]`, with optional interior breakpoints.
/// Returns the value and the error estimate.
pub fn integrate<F: FnMut(f64) -> Vec<C64>>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<(Vec<C64>, f64)> {
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    let mut pieces: Vec<Piece> = edges
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, w[0], w[1]))
        .collect();
    if pieces.is_empty() {
        let n = f(a).len();
        return Ok((vec![C64::new(0.0, 0.0); n], 0.0));
    }
    loop {
        let n = pieces[0].value.len();
        let mut total = vec![C64::new(0.0, 0.0); n];
        let mut err = 0.0;
        for p in &pieces {
            for i in 0..n {
                total[i] += p.value[i];
            }
            err += p.error;
        }
        if err <= opts.abs_tol.max(opts.rel_tol * vec_norm(&total)) {
            return Ok((total, err));
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::Quadrature { error: err });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Quadrature { error: err });
        }
        pieces.push(kronrod(&mut f, p.a, mid));
        pieces.push(kronrod(&mut f, mid, p.b));
    }
}

pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<(f64, f64)> {
    let (v, e) = integrate(|x| vec![C64::new(f(x), 0.0)], a, b, breakpoints, opts)?;
    Ok((v[0].re, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate_real(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], QuadOptions::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let opts = QuadOptions { rel_tol: 1e-12, ..Default::default() };
        let (v, _) = integrate_real(|x| (20.0 * x).sin(), 0.0, 3.0, &[], opts).unwrap();
        assert!((v - (1.0 - 60f64.cos()) / 20.0).abs() < 1e-12);
    }

    #[test]
    fn kink_with_breakpoint() {
        let (v, _) = integrate_real(|x| (x - 0.3).abs(), 0.0, 1.0, &[0.3], QuadOptions::default()).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn complex_vector() {
        let (v, _) = integrate(|x| vec![C64::new(0.0, x).exp(), C64::new(x, 0.0)], 0.0, 1.0, &[], QuadOptions::default()).unwrap();
        let exact = (C64::new(0.0, 1.0).exp() - 1.0) / C64::new(0.0, 1.0);
        assert!((v[0] - exact).norm() < 1e-12);
        assert!((v[1].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let opts = QuadOptions { rel_tol: 1e-15, abs_tol: 0.0, max_intervals: 3 };
        let r = integrate_real(|x| 1.0 / x.sqrt(), 0.0, 1.0, &[], opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
