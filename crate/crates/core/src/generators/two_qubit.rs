//! System qubit coupled through `g s_x (x) s_z` to a second qubit, which
//! exchanges excitations with an oscillator at rate `mu`.

use crate::error::Result;
use crate::exact::GlobalPropagator;
use crate::operator::{c, pauli, tensor_product, BipartiteState, Ket, Operator};

use super::apo::{apo_generator, ApoGenerator, ApoOptions, FiniteEnvironment};
use super::jc::annihilation;
use super::{Generator, LindbladTerms, PairJump, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoQubitModel {
    pub g: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub omega: f64,
    pub mu: f64,
    /// Highest Fock level kept.
    pub cutoff: usize,
}

impl Default for TwoQubitModel {
    fn default() -> Self {
        TwoQubitModel { g: 1.0, omega1: 1.0, omega2: 1.0, omega: 1.0, mu: 1.0, cutoff: 8 }
    }
}

impl TwoQubitModel {
    pub fn env_dim(&self) -> usize {
        2 * (self.cutoff + 1)
    }

    pub fn system_hamiltonian(&self) -> Operator {
        pauli::z() * (self.omega1 / 2.0)
    }

    /// Free part of the environment: qubit splitting and oscillator.
    pub fn env_free_hamiltonian(&self) -> Operator {
        let b = annihilation(self.cutoff);
        tensor_product(&pauli::z(), &Operator::identity(self.cutoff + 1)) * (self.omega2 / 2.0)
            + tensor_product(&Operator::identity(2), &(&b.adjoint() * &b)) * self.omega
    }

    /// Qubit-oscillator exchange `mu (s_+ b + s_- b^dag)`.
    pub fn env_exchange(&self) -> Operator {
        let b = annihilation(self.cutoff);
        (tensor_product(&pauli::plus(), &b) + tensor_product(&pauli::minus(), &b.adjoint())) * self.mu
    }

    pub fn env_sigma_z(&self) -> Operator {
        tensor_product(&pauli::z(), &Operator::identity(self.cutoff + 1))
    }

    pub fn global_hamiltonian(&self) -> Operator {
        let de = self.env_dim();
        tensor_product(&self.system_hamiltonian(), &Operator::identity(de))
            + tensor_product(&Operator::identity(2), &(self.env_free_hamiltonian() + self.env_exchange()))
            + tensor_product(&pauli::x(), &self.env_sigma_z()) * self.g
    }

    pub fn propagator(&self) -> Result<GlobalPropagator> {
        GlobalPropagator::new(self.global_hamiltonian(), 2, self.env_dim())
    }

    /// `(|0 0 0> + |1 1 0>) / sqrt 2` with the oscillator in vacuum.
    pub fn initial_state(&self) -> BipartiteState {
        let de = self.env_dim();
        let mut v = Ket::zeros(2 * de);
        let s = 1.0 / 2f64.sqrt();
        v[0] = c(s, 0.0);
        v[de + self.cutoff + 1] = c(s, 0.0);
        BipartiteState::pure(&v, 2, de).expect("normalised")
    }

    /// `A(t) = g (cos(w1 t) s_x - sin(w1 t) s_y)`.
    pub fn a(&self, t: f64) -> Operator {
        let th = self.omega1 * t;
        (pauli::x() * th.cos() - pauli::y() * th.sin()) * self.g
    }

    /// `int_0^t A`.
    pub fn a_tilde(&self, t: f64) -> Operator {
        let th = self.omega1 * t;
        (pauli::x() * th.sin() - pauli::y() * (1.0 - th.cos())) * (self.g / self.omega1)
    }

    /// `(g^2 / w1) (sin(w1 t) + 2 sin(w1 t / 2), sin(w1 t) - 2 sin(w1 t / 2))`
    /// for unit operator-norm jumps and unit environment variance.
    pub fn analytic_rates(&self, t: f64) -> (f64, f64) {
        let th = self.omega1 * t;
        let k = self.g * self.g / self.omega1;
        (k * (th.sin() + 2.0 * (th / 2.0).sin()), k * (th.sin() - 2.0 * (th / 2.0).sin()))
    }

    /// Closed-form branch generator for an environment state. Only
    /// `<s_z>` enters because the exchange term has zero vacuum covariances.
    pub fn branch(&self, env_state: &Operator) -> TwoQubitBranch {
        let mean = env_state.trace_product(&self.env_sigma_z()).re;
        TwoQubitBranch { model: *self, mean_z: mean, var_z: 1.0 - mean * mean }
    }

    /// Second-order generator by quadrature over the finite environment.
    pub fn apo_numeric(&self, env_state: &Operator, grid: TimeGrid, opts: ApoOptions) -> Result<ApoGenerator> {
        let env = FiniteEnvironment::new(
            &self.env_free_hamiltonian(),
            &[self.env_sigma_z() * self.g, self.env_exchange()],
            env_state,
        )?;
        apo_generator(&[pauli::x(), Operator::identity(2)], &self.system_hamiltonian(), &env, 1.0, grid, opts)
    }
}

/// `H = <s_z> A + Var (g^2/w1)(1 - cos) s_z` and jump `Var (A X A~ + A~ X A)`.
#[derive(Clone, Copy, Debug)]
pub struct TwoQubitBranch {
    pub model: TwoQubitModel,
    pub mean_z: f64,
    pub var_z: f64,
}

impl Generator for TwoQubitBranch {
    fn dim(&self) -> usize {
        2
    }

    fn terms(&self, t: f64) -> LindbladTerms {
        let m = &self.model;
        let shift = self.var_z * m.g * m.g / m.omega1 * (1.0 - (m.omega1 * t).cos());
        let h = m.a(t) * self.mean_z + pauli::z() * shift;
        let mut terms = LindbladTerms::zero(2);
        terms.hamiltonian = h;
        if self.var_z != 0.0 {
            terms.pairs.push(PairJump { a: m.a(t) * self.var_z, b: m.a_tilde(t) });
        }
        terms
    }
}

/// Channel rates scaled by `||L||^2` (operator norm), ascending.
pub fn normalized_rates(terms: &LindbladTerms) -> Vec<f64> {
    let mut r: Vec<f64> = terms
        .channel_form()
        .iter()
        .map(|ch| ch.rate * super::operator_norm(&ch.op).powi(2))
        .collect();
    r.sort_by(f64::total_cmp);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_pauli_frame, decompose, Positivity};

    fn branches(m: &TwoQubitModel) -> Vec<Operator> {
        let dec = decompose(&m.initial_state(), &build_pauli_frame(2), Positivity::AllowQuasiStates).unwrap();
        dec.branches.iter().map(|b| b.env_state.clone()).collect()
    }

    #[test]
    fn gamma_minus_small_time() {
        let (_, gm) = TwoQubitModel::default().analytic_rates(0.1);
        assert!((gm + 1.2492e-4).abs() < 1e-7, "{gm}");
        let (_, small) = TwoQubitModel::default().analytic_rates(1e-2);
        assert!((small / (-1e-6 / 8.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn z_branch_is_pure_drive() {
        let m = TwoQubitModel::default();
        let envs = branches(&m);
        let z = m.branch(&envs[3]);
        assert!((z.mean_z.abs() - 1.0).abs() < 1e-12 && z.var_z.abs() < 1e-12);
        let t = 0.7;
        let terms = z.terms(t);
        assert!(terms.pairs.is_empty());
        assert!(terms.hamiltonian.max_abs_diff(&(m.a(t) * z.mean_z)) < 1e-14);
        for e in &envs[..3] {
            let b = m.branch(e);
            assert!(b.mean_z.abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let m = TwoQubitModel { cutoff: 2, ..Default::default() };
        let grid = TimeGrid::new(0.25, 1.5);
        for env in branches(&m) {
            let numeric = m.apo_numeric(&env, grid, Default::default()).unwrap();
            let closed = m.branch(&env);
            for (k, t) in grid.times().into_iter().enumerate() {
                let d = numeric.sample(k).superoperator.max_abs_diff(&closed.superoperator(t));
                assert!(d < 1e-9, "t = {t}: {d}");
            }
        }
    }

    #[test]
    fn rates_from_generator() {
        let m = TwoQubitModel::default();
        let b = m.branch(&branches(&m)[1]);
        for t in [0.1, 0.5, 1.0, 2.0] {
            let r = normalized_rates(&b.terms(t));
            let (gp, gm) = m.analytic_rates(t);
            assert_eq!(r.len(), 2);
            assert!((r[0] - gm).abs() < 1e-9 && (r[1] - gp).abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn independent_of_mu() {
        let grid = TimeGrid::new(0.5, 1.0);
        let base = TwoQubitModel { cutoff: 2, ..Default::default() };
        let env = branches(&base)[0].clone();
        let gens: Vec<_> = [0.0, 1.0, 5.0]
            .iter()
            .map(|&mu| TwoQubitModel { mu, ..base }.apo_numeric(&env, grid, Default::default()).unwrap())
            .collect();
        for k in 0..=grid.n {
            for g in &gens[1..] {
                assert!(g.sample(k).superoperator.max_abs_diff(&gens[0].sample(k).superoperator) < 1e-10);
            }
        }
    }

    #[test]
    fn trace_and_hermiticity() {
        let m = TwoQubitModel::default();
        let b = m.branch(&branches(&m)[2]);
        let s = b.superoperator(0.8);
        assert!(s.trace_annihilation_residual() < 1e-12);
        assert!(s.hermiticity_residual() < 1e-12);
    }
}
