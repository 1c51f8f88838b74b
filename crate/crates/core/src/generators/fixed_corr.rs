//! Single master equation for a fixed environment state and fixed initial
//! correlations: `rho_SE = rho_S (x) rho_E + chi`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exact::{generator_from_maps, ExtractedGenerator, ExtractionOptions, GlobalPropagator, UnitaryFamily};
use crate::operator::{
    c, hermitian_eig_unchecked, partial_trace_op, tensor_product, BipartiteState, ChannelNormalization, Keep, Operator,
    Superoperator, C64, HERMITIAN_TOL,
};

use super::{match_by_overlap, Channel, Generator, LindbladTerms, TabulatedGenerator, TimeGrid};

/// Smallest eigenvalue of `rho (x) rho_E + chi` accepted as compatible.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CorrelationOperator {
    chi: Operator,
    env_state: Operator,
    ds: usize,
}

impl CorrelationOperator {
    pub fn new(chi: Operator, env_state: Operator, ds: usize) -> Result<Self> {
        let de = env_state.dim();
        if chi.dim() != ds * de {
            return Err(Error::DimensionMismatch(format!("chi has dimension {}, expected {}", chi.dim(), ds * de)));
        }
        if !chi.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation: chi.hermitian_deviation() });
        }
        let tr = chi.trace().norm();
        if tr > 1e-10 {
            return Err(Error::Config(format!("correlation operator has trace {tr:.3e}")));
        }
        Ok(CorrelationOperator { chi, env_state, ds })
    }

    /// Splits a global state into `rho_S (x) rho_E + chi` with its own marginals.
    pub fn from_state(state: &BipartiteState) -> (Operator, Self) {
        let (ds, de) = (state.ds(), state.de());
        let rs = partial_trace_op(state.rho(), ds, de, Keep::System).expect("dims agree");
        let re = partial_trace_op(state.rho(), ds, de, Keep::Environment).expect("dims agree");
        let chi = (state.rho() - tensor_product(&rs, &re)).hermitian_part();
        (rs, CorrelationOperator { chi, env_state: re, ds })
    }

    /// `rho_E = 1/n`, `chi = lambda (|Psi><Psi| - 1/n^2)` with `Psi` maximally entangled.
    pub fn lambda_family(n: usize, lambda: f64) -> Self {
        let psi = super::dephasing::maximally_entangled(n);
        let chi = (psi.rho() - Operator::identity(n * n) * (1.0 / (n * n) as f64)) * lambda;
        CorrelationOperator { chi, env_state: Operator::identity(n) * (1.0 / n as f64), ds: n }
    }

    pub fn chi(&self) -> &Operator {
        &self.chi
    }

    pub fn env_state(&self) -> &Operator {
        &self.env_state
    }

    pub fn ds(&self) -> usize {
        self.ds
    }

    pub fn de(&self) -> usize {
        self.env_state.dim()
    }

    pub fn global(&self, rho_s: &Operator) -> Operator {
        tensor_product(rho_s, &self.env_state) + &self.chi
    }

    pub fn min_eigenvalue(&self, rho_s: &Operator) -> f64 {
        hermitian_eig_unchecked(&self.global(rho_s)).values[0]
    }
}

pub fn compatible_state_check(corr: &CorrelationOperator, rho_s: &Operator) -> Result<bool> {
    if rho_s.dim() != corr.ds() {
        return Err(Error::DimensionMismatch(format!("state dimension {} vs {}", rho_s.dim(), corr.ds())));
    }
    Ok(corr.min_eigenvalue(rho_s) >= -COMPATIBILITY_TOL)
}

/// Fraction of Hilbert-Schmidt random states compatible with `corr`, with
/// its binomial standard error.
pub fn domain_volume<R: Rng + ?Sized>(corr: &CorrelationOperator, samples: usize, rng: &mut R) -> (f64, f64) {
    let hits = (0..samples)
        .filter(|_| corr.min_eigenvalue(&crate::random::random_density(corr.ds(), rng)) >= -COMPATIBILITY_TOL)
        .count();
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

/// Eigen-data of the correlated part at one time.
#[derive(Clone, Debug)]
pub struct CorrelatedPart {
    pub delta: Operator,
    /// `b_j`, continuity ordered.
    pub eigenvalues: Vec<f64>,
    /// `|xi_j>` as columns.
    pub eigenvectors: DMatrix<C64>,
}

impl CorrelatedPart {
    /// `sum_i eta_i` over the double index `i = (j, j')`.
    pub fn eta_sum(&self) -> f64 {
        self.eigenvalues.len() as f64 * self.eigenvalues.iter().sum::<f64>()
    }

    pub fn min_eta(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Channels `(eta_i, J_i)` with `J_i = G_i - tr[G_i] / d`, `G_i = |xi_j><xi_j'|`.
    pub fn channels(&self) -> Vec<Channel> {
        let d = self.eigenvalues.len();
        let mut out = Vec::with_capacity(d * d);
        for j in 0..d {
            let xj = self.eigenvectors.column(j).into_owned();
            for jp in 0..d {
                let xjp = self.eigenvectors.column(jp).into_owned();
                let g = Operator::ket_bra(&xj, &xjp);
                let j_op = &g - Operator::identity(d) * (g.trace() / c(d as f64, 0.0));
                out.push(Channel::new(self.eigenvalues[j], j_op));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct FixedCorrelationsGenerator {
    /// `L_t` of the uncorrelated dynamics.
    pub uncorrelated: ExtractedGenerator,
    /// `L_t + Delta_t tr`.
    pub superops: Vec<Superoperator>,
    pub table: TabulatedGenerator,
    pub parts: Vec<CorrelatedPart>,
    /// `I_t` on the grid.
    pub correlation_term: Vec<Operator>,
}

impl FixedCorrelationsGenerator {
    pub fn grid(&self) -> TimeGrid {
        self.uncorrelated.grid
    }

    pub fn max_eta_sum(&self) -> f64 {
        self.parts.iter().map(|p| p.eta_sum().abs()).fold(0.0, f64::max)
    }

    /// `Phi_t[rho_S] + I_t` on the grid.
    pub fn evolve_direct(&self, rho_s: &Operator) -> Vec<Operator> {
        self.uncorrelated.maps.iter().zip(&self.correlation_term).map(|(m, i)| m.apply(rho_s) + i).collect()
    }
}

impl Generator for FixedCorrelationsGenerator {
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

fn correlation_term(p: &GlobalPropagator, chi: &Operator, t: f64) -> Operator {
    let u = p.unitary(t);
    let evolved = &u * chi * u.adjoint();
    partial_trace_op(&evolved, p.ds(), p.de(), Keep::System).expect("dims agree").hermitian_part()
}

/// `Delta_t = dI/dt - L_t[I_t]` with the same central stencil as the map derivative.
pub fn fixed_correlations_generator(
    propagator: &GlobalPropagator,
    corr: &CorrelationOperator,
    grid: TimeGrid,
    opts: ExtractionOptions,
) -> Result<FixedCorrelationsGenerator> {
    if propagator.ds() != corr.ds() || propagator.de() != corr.de() {
        return Err(Error::DimensionMismatch("propagator and correlation operator disagree".into()));
    }
    let family = UnitaryFamily::new(propagator.clone(), corr.env_state().clone());
    let uncorrelated = generator_from_maps(&family, grid, opts)?;
    let d = corr.ds();
    let h = grid.dt * opts.step_fraction;
    let id_vec = Operator::identity(d).vec();
    let mut superops = Vec::new();
    let mut parts: Vec<CorrelatedPart> = Vec::new();
    let mut terms = Vec::new();
    for (k, l) in uncorrelated.superops.iter().enumerate() {
        let t = uncorrelated.grid.time(k);
        let i_t = correlation_term(propagator, corr.chi(), t);
        let f = |s| correlation_term(propagator, corr.chi(), s);
        let deriv = (f(t + h) - f(t - h)) * (8.0 / (12.0 * h)) - (f(t + 2.0 * h) - f(t - 2.0 * h)) * (1.0 / (12.0 * h));
        let delta = (deriv - l.apply(&i_t)).hermitian_part();
        let lchi = l.matrix() + delta.vec() * id_vec.transpose();
        superops.push(Superoperator::from_matrix(d, lchi));
        let e = hermitian_eig_unchecked(&delta);
        let (values, vectors) = match parts.last() {
            Some(prev) => {
                let order = match_by_overlap(&prev.eigenvectors, &e.vectors);
                let values = order.iter().map(|&j| e.values[j]).collect();
                let vectors = DMatrix::from_fn(d, d, |r, col| e.vectors[(r, order[col])]);
                (values, vectors)
            }
            None => (e.values.clone(), e.vectors.clone()),
        };
        parts.push(CorrelatedPart { delta, eigenvalues: values, eigenvectors: vectors });
        terms.push(i_t);
    }
    let basis = crate::frames::traceless_basis(d);
    let (table, _) = TabulatedGenerator::from_superoperators(
        uncorrelated.grid,
        &superops,
        &basis,
        ChannelNormalization::HilbertSchmidt,
    );
    Ok(FixedCorrelationsGenerator { uncorrelated, superops, table, parts, correlation_term: terms })
}
