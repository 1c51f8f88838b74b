//! Exact dephasing family: `H = H_S (x) 1 + 1 (x) H_E + sum_k |k><k| (x) B_k`.
//!
//! The generator of each reduced map is extracted from the exact maps and
//! projected onto the diagonal operators `S_l`.

use crate::error::{Error, Result};
use crate::exact::{generator_from_maps, ExtractedGenerator, ExtractionOptions, GlobalPropagator, UnitaryFamily};
use crate::operator::{basis_ket, c, tensor_product, BipartiteState, ChannelNormalization, Ket, Operator, Superoperator};

use super::{Generator, LindbladTerms, TabulatedGenerator, TimeGrid};

/// Model with `H_S = H_E = Omega sum_k (k + 1) |k><k|` and nearest-neighbour
/// hopping couplings `B_k = g (|k><k+1| + h.c.)`, `B_{d-1} = 0`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephasingModel {
    pub d: usize,
    pub omega: f64,
    pub g: f64,
    /// Keep `H_S` in the global Hamiltonian. Off by default: the
    /// system part commutes with the coupling and only rotates coherences.
    #[serde(default)]
    pub include_system_hamiltonian: bool,
}

impl Default for DephasingModel {
    fn default() -> Self {
        DephasingModel { d: 4, omega: 1.0, g: 0.5, include_system_hamiltonian: false }
    }
}

impl DephasingModel {
    pub fn new(d: usize, omega: f64, g: f64) -> Self {
        DephasingModel { d, omega, g, include_system_hamiltonian: false }
    }

    pub fn free_hamiltonian(&self) -> Operator {
        Operator::diagonal(&(1..=self.d).map(|k| self.omega * k as f64).collect::<Vec<_>>())
    }

    pub fn couplings(&self) -> Vec<Operator> {
        let d = self.d;
        (0..d)
            .map(|k| {
                if k + 1 < d {
                    (Operator::unit(d, k, k + 1) + Operator::unit(d, k + 1, k)) * self.g
                } else {
                    Operator::zeros(d)
                }
            })
            .collect()
    }

    pub fn global_hamiltonian(&self) -> Operator {
        let hs = self.include_system_hamiltonian.then(|| self.free_hamiltonian());
        dephasing_hamiltonian(hs.as_ref(), &self.free_hamiltonian(), &self.couplings())
            .expect("model couplings are Hermitian")
    }

    pub fn propagator(&self) -> Result<GlobalPropagator> {
        GlobalPropagator::new(self.global_hamiltonian(), self.d, self.d)
    }

    /// `sum_k |k, k> / sqrt(d)`.
    pub fn maximally_entangled(&self) -> BipartiteState {
        maximally_entangled(self.d)
    }
}

pub fn maximally_entangled(d: usize) -> BipartiteState {
    let mut v = Ket::zeros(d * d);
    for k in 0..d {
        v[k * d + k] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    BipartiteState::pure(&v, d, d).expect("normalised")
}

pub fn dephasing_hamiltonian(h_s: Option<&Operator>, h_e: &Operator, couplings: &[Operator]) -> Result<Operator> {
    let d = couplings.len();
    let de = h_e.dim();
    let mut h = tensor_product(&Operator::identity(d), h_e);
    if let Some(hs) = h_s {
        h += tensor_product(hs, &Operator::identity(de));
    }
    for (k, b) in couplings.iter().enumerate() {
        if !b.is_hermitian(crate::operator::HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation: b.hermitian_deviation() });
        }
        let ket = basis_ket(d, k);
        h += tensor_product(&Operator::projector(&ket), b);
    }
    Ok(h)
}

/// `S_l = (sum_{k<l} |k><k| - l |l><l|) / sqrt(l (l + 1))`, `l = 1..d-1`.
pub fn dephasing_basis(d: usize) -> Vec<Operator> {
    (1..d)
        .map(|l| {
            let mut diag = vec![0.0; d];
            for x in diag.iter_mut().take(l) {
                *x = 1.0;
            }
            diag[l] = -(l as f64);
            Operator::diagonal(&diag) * (1.0 / ((l * (l + 1)) as f64).sqrt())
        })
        .collect()
}

/// Extracted dephasing generator for one environment state.
#[derive(Clone, Debug)]
pub struct DephasingGenerator {
    pub table: TabulatedGenerator,
    pub extraction: ExtractedGenerator,
    /// Largest deviation between the extracted superoperators and their
    /// projection onto the `S_l` structure.
    pub structure_residual: f64,
}

impl DephasingGenerator {
    /// Eigenvalues of `K(t)` per grid time, continuity ordered.
    pub fn rates(&self) -> Vec<Vec<f64>> {
        self.table.rate_curves()
    }

    /// Last grid time up to which every rate is at least `-tol`.
    pub fn cp_window(&self, tol: f64) -> f64 {
        let grid = self.table.grid();
        let mut last = 0.0;
        for (k, r) in self.rates().iter().enumerate() {
            if r.iter().any(|&g| g < -tol) {
                break;
            }
            last = grid.time(k);
        }
        last
    }

    pub fn superoperator_at(&self, k: usize) -> &Superoperator {
        &self.extraction.superops[k]
    }
}

impl Generator for DephasingGenerator {
    fn dim(&self) -> usize {
        self.table.dim()
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        self.table.terms(t)
    }
    fn superoperator(&self, t: f64) -> Superoperator {
        self.table.superoperator(t)
    }
    fn knots(&self) -> Vec<f64> {
        self.table.knots()
    }
}

pub fn dephasing_generator(
    propagator: &GlobalPropagator,
    env_state: &Operator,
    grid: TimeGrid,
    opts: ExtractionOptions,
) -> Result<DephasingGenerator> {
    let family = UnitaryFamily::new(propagator.clone(), env_state.clone());
    let extraction = generator_from_maps(&family, grid, opts)?;
    let (table, structure_residual) =
        extraction.tabulate(&dephasing_basis(propagator.ds()), ChannelNormalization::HilbertSchmidt);
    Ok(DephasingGenerator { table, extraction, structure_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{lindblad_ode_solve, OdeOptions};
    use crate::frames::{build_pauli_frame, decompose, recombine, BranchKey, EvolvedParts, Positivity};
    use crate::operator::{partial_trace, Keep, Sign};

    #[test]
    fn basis_is_orthonormal() {
        let s = dephasing_basis(4);
        for a in 0..3 {
            for b in 0..3 {
                let ip = s[a].inner(&s[b]);
                assert!((ip.re - if a == b { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
            assert!(s[a].trace().norm() < 1e-14);
        }
    }

    #[test]
    fn non_hermitian_coupling_is_rejected() {
        let mut b = DephasingModel::default().couplings();
        b[0] = Operator::unit(4, 0, 1);
        let r = dephasing_hamiltonian(None, &Operator::identity(4), &b);
        assert!(matches!(r, Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn oracle_populations_and_coherence() {
        let m = DephasingModel::default();
        let p = m.propagator().unwrap();
        let s = m.maximally_entangled();
        let expect = [(0.4, c(0.00948, -0.04743)), (1.0, c(0.04496, -0.09156)), (1.6, c(0.07102, -0.10035))];
        for (t, z) in expect {
            let rs = partial_trace(&p.evolve(&s, t), Keep::System);
            for k in 0..4 {
                assert!((rs.entry(k, k).re - 0.25).abs() < 1e-9);
            }
            assert!((rs.entry(0, 1) - z).norm() < 1e-5, "t = {t}: {}", rs.entry(0, 1));
        }
    }

    #[test]
    fn zero_coupling_is_trivial() {
        let m = DephasingModel::new(4, 1.0, 0.0);
        let p = m.propagator().unwrap();
        let g = dephasing_generator(&p, &(Operator::identity(4) * 0.25), TimeGrid::new(0.1, 1.0), Default::default()).unwrap();
        for k in 0..=10 {
            assert!(g.superoperator_at(k).norm() < 1e-8);
        }
    }

    #[test]
    fn extracted_generators_reproduce_pipeline() {
        let m = DephasingModel::default();
        let p = m.propagator().unwrap();
        let s = m.maximally_entangled();
        let f = build_pauli_frame(4);
        let dec = decompose(&s, &f, Positivity::AllowQuasiStates).unwrap();
        let grid = TimeGrid::new(0.01, 1.2);
        let ts = [0.4, 1.2];
        let mut parts: Vec<EvolvedParts> = vec![EvolvedParts::new(); ts.len()];
        for b in &dec.branches {
            let gen = dephasing_generator(&p, &b.env_state, grid, Default::default()).unwrap();
            assert!(gen.structure_residual < 1e-8, "{}", gen.structure_residual);
            for k in [0, 50, 120] {
                let km = gen.table.kossakowski_at(k);
                assert!((km - km.adjoint()).iter().all(|z| z.norm() < 1e-8));
            }
            for sign in [Sign::Plus, Sign::Minus] {
                if let Some((_, sigma)) = b.split.part(sign) {
                    let out = lindblad_ode_solve(&gen, sigma, &ts, OdeOptions::default()).unwrap();
                    for (i, o) in out.into_iter().enumerate() {
                        parts[i].insert(BranchKey::new(b.alpha, b.alpha, sign), o);
                    }
                }
            }
        }
        for (i, &t) in ts.iter().enumerate() {
            let rs = recombine(&parts[i], &dec).unwrap();
            let exact = partial_trace(&p.evolve(&s, t), Keep::System);
            assert!(rs.max_abs_diff(&exact) < 1e-5, "t = {t}: {}", rs.max_abs_diff(&exact));
        }
    }
}
