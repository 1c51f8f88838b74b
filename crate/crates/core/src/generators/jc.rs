//! Jaynes-Cummings generators: a single mode with occupation `n` and an
//! Ohmic continuum with flat occupation below the cutoff.
//!
//! Both have the form
//! `L[X] = i b_+ [s_+ s_-, X] + i b_- [s_- s_+, X] + g_- D[s_-] X + g_+ D[s_+] X`.

use crate::error::Result;
use crate::operator::{pauli, Operator, Superoperator};
use crate::quadrature::{integrate_real, QuadOptions};

use super::{Channel, Generator, LindbladTerms, TimeGrid};

/// Which channel carries which rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JcLabeling {
    /// `(n + 1)` kernel on the `sigma_+` channel and `n` on `sigma_-`, unit prefactor.
    #[default]
    AsPrinted,
    /// `2 (n + 1)` kernel on `sigma_-` (emission) and `2 n` on `sigma_+`,
    /// as the second-order expansion gives.
    OracleConsistent,
}

/// Rates and drives at one time. `gamma_minus` belongs to `sigma_-`.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct JcRates {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl JcRates {
    /// From the emission-weighted and absorption-weighted sine and cosine
    /// transforms `int J (n+1) K` and `int J n K`.
    fn from_transforms(labeling: JcLabeling, sin_emit: f64, sin_abs: f64, cos_emit: f64, cos_abs: f64) -> Self {
        let (gamma_minus, gamma_plus) = match labeling {
            JcLabeling::AsPrinted => (sin_abs, sin_emit),
            JcLabeling::OracleConsistent => (2.0 * sin_emit, 2.0 * sin_abs),
        };
        JcRates { gamma_minus, gamma_plus, beta_plus: -cos_emit, beta_minus: cos_abs }
    }

    pub fn terms(&self) -> LindbladTerms {
        let (sp, sm) = (pauli::plus(), pauli::minus());
        let h = -(&sp * &sm * self.beta_plus + &sm * &sp * self.beta_minus);
        LindbladTerms::with_channels(h, vec![Channel::new(self.gamma_minus, sm), Channel::new(self.gamma_plus, sp)])
    }
}

/// `sin(x t) / x`, continuous at `x = 0`.
pub fn sin_kernel(x: f64, t: f64) -> f64 {
    let y = x * t;
    if y.abs() < 1e-4 {
        t * (1.0 - y * y / 6.0 + y.powi(4) / 120.0)
    } else {
        y.sin() / x
    }
}

/// `(1 - cos(x t)) / x`, continuous at `x = 0`.
pub fn cos_kernel(x: f64, t: f64) -> f64 {
    let y = x * t;
    if y.abs() < 1e-4 {
        t * (y / 2.0 - y.powi(3) / 24.0)
    } else {
        (1.0 - y.cos()) / x
    }
}

/// Single mode of frequency `omega` with mean occupation `n`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct JcSingleMode {
    pub n: f64,
    pub omega0: f64,
    pub omega: f64,
    pub g: f64,
    pub labeling: JcLabeling,
}

impl JcSingleMode {
    pub fn rates(&self, t: f64) -> JcRates {
        let delta = self.omega0 - self.omega;
        let g2 = self.g * self.g;
        let (s, k) = (sin_kernel(delta, t), cos_kernel(delta, t));
        JcRates::from_transforms(self.labeling, g2 * (self.n + 1.0) * s, g2 * self.n * s, g2 * (self.n + 1.0) * k, g2 * self.n * k)
    }
}

impl Generator for JcSingleMode {
    fn dim(&self) -> usize {
        2
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        self.rates(t).terms()
    }
}

/// `J(w) = g w` and `n(w) = n` on `[0, omega_c]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct JcContinuum {
    pub g: f64,
    pub omega_c: f64,
    pub n: f64,
    pub omega0: f64,
    pub labeling: JcLabeling,
}

impl JcContinuum {
    /// `(int J K_sin, int J K_cos)` by adaptive quadrature, split at `omega0`.
    pub fn transforms(&self, t: f64, quad: QuadOptions) -> Result<(f64, f64)> {
        let bp = [self.omega0];
        let (s, _) = integrate_real(|w| self.g * w * sin_kernel(self.omega0 - w, t), 0.0, self.omega_c, &bp, quad)?;
        let (k, _) = integrate_real(|w| self.g * w * cos_kernel(self.omega0 - w, t), 0.0, self.omega_c, &bp, quad)?;
        Ok((s, k))
    }

    pub fn rates(&self, t: f64, quad: QuadOptions) -> Result<JcRates> {
        let (s, k) = self.transforms(t, quad)?;
        let n = self.n;
        Ok(JcRates::from_transforms(self.labeling, (n + 1.0) * s, n * s, (n + 1.0) * k, n * k))
    }

    pub fn tabulate(&self, grid: TimeGrid, quad: QuadOptions) -> Result<TabulatedRates> {
        let rates = grid.times().into_iter().map(|t| self.rates(t, quad)).collect::<Result<Vec<_>>>()?;
        Ok(TabulatedRates { grid, rates })
    }
}

/// Rates sampled on a grid, linearly interpolated.
#[derive(Clone, Debug)]
pub struct TabulatedRates {
    pub grid: TimeGrid,
    pub rates: Vec<JcRates>,
}

impl TabulatedRates {
    pub fn at(&self, t: f64) -> JcRates {
        let (k, s) = self.grid.locate(t);
        let k1 = (k + 1).min(self.grid.n);
        let (a, b) = (self.rates[k], self.rates[k1]);
        let lerp = |x: f64, y: f64| x * (1.0 - s) + y * s;
        JcRates {
            gamma_minus: lerp(a.gamma_minus, b.gamma_minus),
            gamma_plus: lerp(a.gamma_plus, b.gamma_plus),
            beta_plus: lerp(a.beta_plus, b.beta_plus),
            beta_minus: lerp(a.beta_minus, b.beta_minus),
        }
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().map(|r| r.gamma_minus.min(r.gamma_plus)).fold(f64::INFINITY, f64::min)
    }
}

impl Generator for TabulatedRates {
    fn dim(&self) -> usize {
        2
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        self.at(t).terms()
    }
    fn superoperator(&self, t: f64) -> Superoperator {
        self.at(t).terms().superoperator()
    }
    fn knots(&self) -> Vec<f64> {
        self.grid.times()
    }
}

/// `a^dag a` eigenbasis ladder operator on `cutoff + 1` Fock levels.
pub fn annihilation(cutoff: usize) -> Operator {
    let n = cutoff + 1;
    let mut b = Operator::zeros(n);
    for k in 1..n {
        b.matrix_mut()[(k - 1, k)] = crate::operator::c((k as f64).sqrt(), 0.0);
    }
    b
}

/// `omega0/2 s_z + omega b^dag b + g (s_+ b + s_- b^dag)` on qubit (x) Fock space.
pub fn jc_hamiltonian(omega0: f64, omega: f64, g: f64, cutoff: usize) -> Operator {
    use crate::operator::tensor_product;
    let b = annihilation(cutoff);
    let id_s = Operator::identity(2);
    let id_e = Operator::identity(cutoff + 1);
    tensor_product(&pauli::z(), &id_e) * (omega0 / 2.0)
        + tensor_product(&id_s, &(&b.adjoint() * &b)) * omega
        + (tensor_product(&pauli::plus(), &b) + tensor_product(&pauli::minus(), &b.adjoint())) * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{lindblad_ode_solve, GlobalPropagator, OdeOptions};
    use crate::generators::apo::{apo_generator, ContinuumCorrelations, SingleModeCorrelations};
    use crate::operator::{partial_trace, BipartiteState, Keep};

    fn single(n: f64, labeling: JcLabeling) -> JcSingleMode {
        JcSingleMode { n, omega0: 1.0, omega: 0.1, g: 0.5, labeling }
    }

    /// `Si(x)` by its power series.
    fn si(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = x;
        let mut k = 0;
        while term.abs() > 1e-18 || k < 3 {
            sum += term / (2 * k + 1) as f64;
            term *= -x * x / ((2 * k + 2) * (2 * k + 3)) as f64;
            k += 1;
        }
        sum
    }

    #[test]
    fn vacuum_has_no_absorption() {
        let m = single(0.0, JcLabeling::AsPrinted);
        for t in [0.3, 2.0, 7.0] {
            assert_eq!(m.rates(t).gamma_minus, 0.0);
        }
    }

    #[test]
    fn printed_rate_values() {
        let m = single(0.0, JcLabeling::AsPrinted);
        for t in [0.5, 2.0, 5.0] {
            let expect = 0.25 * (0.9 * t as f64).sin() / 0.9;
            assert!((m.rates(t).gamma_plus - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn rates_share_sign_and_difference() {
        let m = single(0.5, JcLabeling::AsPrinted);
        for k in 1..200 {
            let t = k as f64 * 0.07;
            let r = m.rates(t);
            assert_eq!(r.gamma_plus.signum(), r.gamma_minus.signum());
            let diff = 0.25 * (0.9 * t).sin() / 0.9;
            assert!((r.gamma_plus - r.gamma_minus - diff).abs() < 1e-14);
        }
    }

    #[test]
    fn resonance_limit() {
        let m = JcSingleMode { n: 1.0, omega0: 1.0, omega: 1.0, g: 0.5, labeling: JcLabeling::AsPrinted };
        assert!((m.rates(2.0).gamma_plus - 0.25 * 2.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_apo_matches_closed_form() {
        let n = 0.5;
        let env = SingleModeCorrelations { n, omega: 0.1 };
        let grid = TimeGrid::new(0.5, 6.0);
        let gen = apo_generator(&[pauli::plus(), pauli::minus()], &(pauli::z() * 0.5), &env, 0.5, grid, Default::default()).unwrap();
        let closed = single(n, JcLabeling::OracleConsistent);
        for (k, t) in grid.times().into_iter().enumerate() {
            let s = gen.sample(k).superoperator.clone();
            assert!(s.max_abs_diff(&closed.superoperator(t)) < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn labeling_against_exact_oracle() {
        // Weak coupling: second order is accurate, so only the consistent
        // labeling tracks the exact populations.
        let (g, cutoff) = (0.05, 9);
        let h = jc_hamiltonian(1.0, 0.1, g, cutoff);
        let p = GlobalPropagator::new(h, 2, cutoff + 1).unwrap();
        let rho_e = Operator::diagonal(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let rho_s = Operator::diagonal(&[0.3, 0.7]);
        let st = BipartiteState::product(&rho_s, &rho_e).unwrap();
        let ts = [2.0, 4.0, 6.0];
        let err = |labeling| {
            let m = JcSingleMode { n: 0.5, omega0: 1.0, omega: 0.1, g, labeling };
            let out = lindblad_ode_solve(&m, &rho_s, &ts, OdeOptions::default()).unwrap();
            ts.iter()
                .zip(out)
                .map(|(&t, r)| {
                    let e = partial_trace(&p.evolve(&st, t), Keep::System);
                    (r.entry(1, 1).re - e.entry(1, 1).re).abs()
                })
                .fold(0.0, f64::max)
        };
        let consistent = err(JcLabeling::OracleConsistent);
        let printed = err(JcLabeling::AsPrinted);
        assert!(consistent < 1e-3, "{consistent}");
        assert!(printed > 10.0 * consistent, "{printed} vs {consistent}");
    }

    #[test]
    fn continuum_transform_matches_sine_integral() {
        let m = JcContinuum { g: 1.0, omega_c: 2.0, n: 0.0, omega0: 1.0, labeling: JcLabeling::AsPrinted };
        for t in [0.1, 1.0, 3.0, 10.0] {
            let (s, _) = m.transforms(t, QuadOptions::default()).unwrap();
            assert!((s - 2.0 * si(t)).abs() < 1e-8, "t = {t}");
        }
        let m = JcContinuum { g: 1.0, omega_c: 3.0, n: 0.0, omega0: 1.0, labeling: JcLabeling::AsPrinted };
        let t: f64 = 2.5;
        let expect = si(t) + si(2.0 * t) - ((2.0 * t).cos() - t.cos()) / t;
        assert!((m.transforms(t, QuadOptions::default()).unwrap().0 - expect).abs() < 1e-8);
    }

    #[test]
    fn continuum_rates_positive_and_linear_in_g() {
        let m = JcContinuum { g: 0.05, omega_c: 2.0, n: 10.0, omega0: 1.0, labeling: JcLabeling::AsPrinted };
        let tab = m.tabulate(TimeGrid::new(0.05, 20.0), QuadOptions::default()).unwrap();
        assert!(tab.min_rate() >= 0.0);
        let m2 = JcContinuum { g: 0.1, ..m };
        let (a, b) = (m.rates(1.7, QuadOptions::default()).unwrap(), m2.rates(1.7, QuadOptions::default()).unwrap());
        assert!((b.gamma_plus / a.gamma_plus - 2.0).abs() < 1e-10);
        let vac = JcContinuum { n: 0.0, ..m };
        assert_eq!(vac.rates(1.0, QuadOptions::default()).unwrap().gamma_minus, 0.0);
    }

    #[test]
    fn continuum_cross_check_with_time_domain_apo() {
        let (g, n) = (0.05, 2.0);
        let env = ContinuumCorrelations { g, omega_c: 2.0, n };
        let grid = TimeGrid::new(0.5, 3.0);
        let gen = apo_generator(&[pauli::plus(), pauli::minus()], &(pauli::z() * 0.5), &env, 1.0, grid, Default::default()).unwrap();
        let m = JcContinuum { g, omega_c: 2.0, n, omega0: 1.0, labeling: JcLabeling::OracleConsistent };
        for (k, t) in grid.times().into_iter().enumerate() {
            let r = m.rates(t, QuadOptions::default()).unwrap();
            let s = gen.sample(k).superoperator.clone();
            assert!(s.max_abs_diff(&r.terms().superoperator()) < 1e-8, "t = {t}");
        }
    }
}
