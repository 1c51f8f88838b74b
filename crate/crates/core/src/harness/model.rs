//! Model catalog: initial states, branch generators and exact references.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{ExtractionOptions, GlobalPropagator};
use crate::frames::OpdDecomposition;
use crate::generators::dephasing::{dephasing_generator, maximally_entangled};
use crate::generators::fixed_corr::{fixed_correlations_generator, CorrelationOperator, FixedCorrelationsGenerator};
use crate::generators::jc::{jc_hamiltonian, JcContinuum, JcSingleMode};
use crate::generators::{decay_generator, Generator, TimeGrid};
use crate::operator::{basis_ket, c, normalized, pauli, tensor_ket, BipartiteState, Ket, Operator};
use crate::quadrature::QuadOptions;

use super::config::{ExperimentConfig, ModelSpec, OracleKind, StateSpec};

pub type BoxedGenerator = Box<dyn Generator>;

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Decay(_) => "decay",
            ModelSpec::DephasingD4(_) => "dephasing-d4",
            ModelSpec::JcSingleMode(_) => "jc-single-mode",
            ModelSpec::JcContinuum(_) => "jc-continuum",
            ModelSpec::TwoQubit(_) => "two-qubit",
            ModelSpec::FixedCorrelations(_) => "fixed-correlations",
        }
    }

    pub fn system_dim(&self) -> usize {
        match self {
            ModelSpec::DephasingD4(m) | ModelSpec::FixedCorrelations(m) => m.d,
            _ => 2,
        }
    }

    /// Environment dimension the model's generators are built for, if fixed.
    pub fn env_dim(&self) -> Option<usize> {
        match self {
            ModelSpec::DephasingD4(m) | ModelSpec::FixedCorrelations(m) => Some(m.d),
            ModelSpec::JcSingleMode(p) => Some(p.cutoff + 1),
            ModelSpec::TwoQubit(m) => Some(m.env_dim()),
            ModelSpec::Decay(_) | ModelSpec::JcContinuum(_) => None,
        }
    }

    /// Whether the reduced dynamics runs through the OPD.
    pub fn uses_opd(&self) -> bool {
        !matches!(self, ModelSpec::FixedCorrelations(_))
    }

    pub fn default_oracle(&self) -> OracleKind {
        match self {
            ModelSpec::DephasingD4(_) | ModelSpec::FixedCorrelations(_) => OracleKind::Global,
            _ => OracleKind::MasterEquation,
        }
    }

    pub fn default_generator_dt(&self) -> f64 {
        match self {
            ModelSpec::FixedCorrelations(_) => 0.005,
            _ => 0.01,
        }
    }

    /// Global Hamiltonian on `C^ds (x) C^dE`, where one exists.
    pub fn global_hamiltonian(&self) -> Option<Operator> {
        match self {
            ModelSpec::DephasingD4(m) | ModelSpec::FixedCorrelations(m) => Some(m.global_hamiltonian()),
            ModelSpec::JcSingleMode(p) => Some(jc_hamiltonian(p.omega0, p.omega, p.g, p.cutoff)),
            ModelSpec::TwoQubit(m) => Some(m.global_hamiltonian()),
            ModelSpec::Decay(_) | ModelSpec::JcContinuum(_) => None,
        }
    }

    pub fn propagator(&self, cap: usize) -> Result<Option<GlobalPropagator>> {
        let (Some(h), Some(de)) = (self.global_hamiltonian(), self.env_dim()) else {
            return Ok(None);
        };
        GlobalPropagator::with_cap(h, self.system_dim(), de, cap).map(Some)
    }

    /// System Hamiltonian removed by the generators' interaction picture.
    pub fn interaction_hamiltonian(&self) -> Option<Operator> {
        match self {
            ModelSpec::JcSingleMode(p) => Some(pauli::z() * (p.omega0 / 2.0)),
            ModelSpec::TwoQubit(m) => Some(m.system_hamiltonian()),
            _ => None,
        }
    }

    pub fn default_state(&self) -> BipartiteState {
        let excited = || BipartiteState::new(Operator::diagonal(&[0.0, 1.0]), 2, 1).expect("valid state");
        match self {
            ModelSpec::Decay(_) | ModelSpec::JcContinuum(_) => excited(),
            ModelSpec::DephasingD4(m) | ModelSpec::FixedCorrelations(m) => maximally_entangled(m.d),
            ModelSpec::JcSingleMode(p) => single_mode_entangled(1, 0, p.cutoff).expect("cutoff >= 1"),
            ModelSpec::TwoQubit(m) => m.initial_state(),
        }
    }
}

pub fn single_mode_entangled(n0: usize, n1: usize, cutoff: usize) -> Result<BipartiteState> {
    if n0 > cutoff || n1 > cutoff {
        return Err(Error::Config(format!("Fock states ({n0}, {n1}) exceed the cutoff {cutoff}")));
    }
    let levels = cutoff + 1;
    let v = tensor_ket(&basis_ket(2, 0), &basis_ket(levels, n0)) + tensor_ket(&basis_ket(2, 1), &basis_ket(levels, n1));
    BipartiteState::pure(&normalized(&v), 2, levels)
}

fn ket_from_pairs(v: &[[f64; 2]]) -> Ket {
    Ket::from_vec(v.iter().map(|p| c(p[0], p[1])).collect())
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomState {
    ds: usize,
    de: usize,
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

/// Initial global state, checked against the model's dimensions.
pub fn build_state(cfg: &ExperimentConfig) -> Result<BipartiteState> {
    let model = &cfg.model;
    let state = match &cfg.state {
        StateSpec::ModelDefault => model.default_state(),
        StateSpec::MaximallyEntangledD4 => maximally_entangled(4),
        StateSpec::QubitEntangled { psi0, psi1 } => {
            if psi0.len() != psi1.len() || psi0.is_empty() {
                return Err(Error::Config("psi0 and psi1 must have the same non-zero length".into()));
            }
            let v = tensor_ket(&basis_ket(2, 0), &ket_from_pairs(psi0)) + tensor_ket(&basis_ket(2, 1), &ket_from_pairs(psi1));
            if v.norm() == 0.0 {
                return Err(Error::Config("qubit-entangled state vanishes".into()));
            }
            BipartiteState::pure(&normalized(&v), 2, psi0.len())?
        }
        StateSpec::SingleModeEntangled { n0, n1 } => {
            let ModelSpec::JcSingleMode(p) = model else {
                return Err(Error::Config("single-mode-entangled needs the jc-single-mode model".into()));
            };
            single_mode_entangled(*n0, *n1, p.cutoff)?
        }
        StateSpec::Product { system, environment } => BipartiteState::product(&system.to_operator()?, &environment.to_operator()?)?,
        StateSpec::System { rho } => {
            let r = rho.to_operator()?;
            let d = r.dim();
            BipartiteState::new(r, d, 1)?
        }
        StateSpec::Custom { path } => {
            let path = cfg.resolve(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let s: CustomState = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let m = super::config::MatrixSpec { re: s.re, im: s.im }.to_operator()?;
            BipartiteState::new(m, s.ds, s.de)?
        }
    };
    if state.ds() != model.system_dim() {
        return Err(Error::Config(format!(
            "state has system dimension {}, model {} needs {}",
            state.ds(),
            model.name(),
            model.system_dim()
        )));
    }
    if let Some(de) = model.env_dim() {
        if state.de() != de {
            return Err(Error::Config(format!(
                "state has environment dimension {}, model {} needs {de}",
                state.de(),
                model.name()
            )));
        }
    }
    Ok(state)
}

pub fn generator_grid(cfg: &ExperimentConfig) -> TimeGrid {
    let dt = cfg.generator.dt.unwrap_or_else(|| cfg.model.default_generator_dt());
    TimeGrid::new(dt, cfg.unravel.t_max + dt)
}

fn fock_number(levels: usize) -> Operator {
    Operator::diagonal(&(0..levels).map(|k| k as f64).collect::<Vec<_>>())
}

/// One generator per OPD branch, in decomposition order.
pub fn branch_generators(
    cfg: &ExperimentConfig,
    dec: &OpdDecomposition,
    propagator: Option<&GlobalPropagator>,
) -> Result<Vec<BoxedGenerator>> {
    let grid = generator_grid(cfg);
    let envs: Vec<&Operator> = dec.branches.iter().map(|b| &b.env_state).collect();
    match &cfg.model {
        ModelSpec::Decay(p) => Ok(envs.iter().map(|_| Box::new(decay_generator(p.gamma)) as BoxedGenerator).collect()),
        ModelSpec::DephasingD4(_) => {
            let prop = propagator.ok_or_else(|| Error::Config("dephasing model needs its global propagator".into()))?;
            envs.par_iter()
                .map(|rho| {
                    dephasing_generator(prop, rho, grid, ExtractionOptions::default()).map(|g| Box::new(g) as BoxedGenerator)
                })
                .collect()
        }
        ModelSpec::JcSingleMode(p) => {
            let num = fock_number(p.cutoff + 1);
            Ok(envs
                .iter()
                .map(|rho| {
                    let n = rho.trace_product(&num).re;
                    Box::new(JcSingleMode { n, omega0: p.omega0, omega: p.omega, g: p.g, labeling: p.labeling }) as BoxedGenerator
                })
                .collect())
        }
        ModelSpec::JcContinuum(p) => {
            let m = JcContinuum { g: p.g, omega_c: p.omega_c, n: p.n, omega0: p.omega0, labeling: p.labeling };
            let table = Arc::new(m.tabulate(grid, QuadOptions::default())?);
            Ok(envs.iter().map(|_| Box::new(table.clone()) as BoxedGenerator).collect())
        }
        ModelSpec::TwoQubit(m) => Ok(envs.iter().map(|rho| Box::new(m.branch(rho)) as BoxedGenerator).collect()),
        ModelSpec::FixedCorrelations(_) => Err(Error::Config("fixed-correlations does not use the OPD".into())),
    }
}

/// Correlated master equation for the fixed-correlations model, with the
/// reduced initial state and correlation data.
pub fn fixed_correlations(
    cfg: &ExperimentConfig,
    state: &BipartiteState,
    propagator: &GlobalPropagator,
) -> Result<(Operator, CorrelationOperator, FixedCorrelationsGenerator)> {
    let (rho_s, corr) = CorrelationOperator::from_state(state);
    let gen = fixed_correlations_generator(propagator, &corr, generator_grid(cfg), ExtractionOptions::default())?;
    Ok((rho_s, corr, gen))
}

/// `e^{i H t} rho e^{-i H t}`.
pub fn to_interaction_picture(rho: &Operator, h: &Operator, t: f64) -> Operator {
    let u = Operator::from_matrix((h.matrix() * c(0.0, t)).exp());
    (&u * rho * u.adjoint()).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_pauli_frame, decompose, Positivity};

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn default_states_match_model_dimensions() {
        for name in ["decay", "dephasing-d4", "jc-single-mode", "jc-continuum", "two-qubit", "fixed-correlations"] {
            let cfg = config(&format!("[model]\nname = \"{name}\"\n"));
            let s = build_state(&cfg).unwrap();
            assert_eq!(s.ds(), cfg.model.system_dim(), "{name}");
        }
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let cfg = config("[model]\nname = \"two-qubit\"\n[state]\npreset = \"maximally-entangled-d4\"\n");
        assert!(matches!(build_state(&cfg), Err(Error::Config(_))));
        let cfg = config("[model]\nname = \"decay\"\n[state]\npreset = \"single-mode-entangled\"\nn0 = 1\nn1 = 0\n");
        assert!(matches!(build_state(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn single_mode_branch_occupations() {
        let cfg = config("[model]\nname = \"jc-single-mode\"\n");
        let s = build_state(&cfg).unwrap();
        let dec = decompose(&s, &build_pauli_frame(2), Positivity::Strict).unwrap();
        let num = fock_number(5);
        let n: Vec<f64> = dec.branches.iter().map(|b| b.env_state.trace_product(&num).re).collect();
        for (b, n) in dec.branches.iter().zip(&n) {
            let expect = if b.alpha == 3 { 0.0 } else { 0.5 };
            assert!((n - expect).abs() < 1e-12, "alpha {}: {n}", b.alpha);
        }
    }

    #[test]
    fn interaction_picture_undoes_free_rotation() {
        let h = pauli::z() * 0.5;
        let rho = Operator::from_real_rows(2, &[0.5, 0.5, 0.5, 0.5]);
        let u = Operator::from_matrix((h.matrix() * c(0.0, -1.3)).exp());
        let lab = &u * &rho * u.adjoint();
        assert!(to_interaction_picture(&lab, &h, 1.3).max_abs_diff(&rho) < 1e-14);
    }
}
