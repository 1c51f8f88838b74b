//! Reference dynamics: dense global propagation, reduced maps, direct
//! integration of generators, and generators extracted from map families.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::generators::{TabulatedGenerator, TimeGrid};
use crate::operator::{
    c, hermitian_eig, hermitian_eig_unchecked, BipartiteState, ChannelNormalization, Eigen, Operator,
    Superoperator, C64,
};

mod ode;

pub use ode::{integrate, lindblad_ode_solve, propagate_maps, OdeOptions};

/// Default cap on the global dimension handled by the dense oracle.
pub const ORACLE_CAP: usize = 4096;

/// `U(t) = exp(-i H t)` from one eigendecomposition of `H`.
#[derive(Clone, Debug)]
pub struct GlobalPropagator {
    ds: usize,
    de: usize,
    h: Operator,
    eig: Eigen,
}

impl GlobalPropagator {
    pub fn new(h: Operator, ds: usize, de: usize) -> Result<Self> {
        Self::with_cap(h, ds, de, ORACLE_CAP)
    }

    pub fn with_cap(h: Operator, ds: usize, de: usize, cap: usize) -> Result<Self> {
        let dim = h.dim();
        if dim > cap {
            return Err(Error::OracleCap { dim, cap });
        }
        if dim != ds * de {
            return Err(Error::DimensionMismatch(format!("Hamiltonian of dimension {dim} for factors {ds} x {de}")));
        }
        let eig = hermitian_eig(&h)?;
        Ok(GlobalPropagator { ds, de, h, eig })
    }

    pub fn ds(&self) -> usize {
        self.ds
    }

    pub fn de(&self) -> usize {
        self.de
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn unitary(&self, t: f64) -> Operator {
        let v = &self.eig.vectors;
        let n = v.nrows();
        let phases = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * C64::from_polar(1.0, -self.eig.values[j] * t));
        Operator::from_matrix(phases * v.adjoint())
    }

    pub fn evolve(&self, state: &BipartiteState, t: f64) -> BipartiteState {
        let u = self.unitary(t);
        let rho = (&u * state.rho() * u.adjoint()).hermitian_part();
        BipartiteState::from_parts_unchecked(rho, self.ds, self.de)
    }

    /// `X -> tr_E[U(t) (X (x) rho_E) U(t)^dag]` in operator-sum form over the
    /// eigenvectors of `rho_E`. Negative eigenvalues (quasi states) are kept.
    pub fn reduced_map(&self, env_state: &Operator, t: f64) -> Superoperator {
        let (ds, de) = (self.ds, self.de);
        let u = self.unitary(t);
        let env = hermitian_eig_unchecked(&env_state.hermitian_part());
        let mut m = DMatrix::<C64>::zeros(ds * ds, ds * ds);
        for (l, &p) in env.values.iter().enumerate() {
            if p.abs() < 1e-15 {
                continue;
            }
            let e = env.vector(l);
            for k in 0..de {
                let kraus = DMatrix::from_fn(ds, ds, |i, j| {
                    let mut s = C64::new(0.0, 0.0);
                    for m in 0..de {
                        s += u.entry(i * de + k, j * de + m) * e[m];
                    }
                    s
                });
                m += kraus.conjugate().kronecker(&kraus) * c(p, 0.0);
            }
        }
        Superoperator::from_matrix(ds, m)
    }
}

/// `rho_SE(t) = U(t) rho_SE U(t)^dag` at each time.
pub fn propagate_global(h: &Operator, rho0: &BipartiteState, times: &[f64]) -> Result<Vec<BipartiteState>> {
    let p = GlobalPropagator::new(h.clone(), rho0.ds(), rho0.de())?;
    Ok(times.iter().map(|&t| p.evolve(rho0, t)).collect())
}

pub fn reduced_map(h: &Operator, ds: usize, env_state: &Operator, t: f64) -> Result<Superoperator> {
    let p = GlobalPropagator::new(h.clone(), ds, env_state.dim())?;
    Ok(p.reduced_map(env_state, t))
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CptpReport {
    pub choi_min_eigenvalue: f64,
    pub trace_residual: f64,
}

impl CptpReport {
    pub fn is_cptp(&self) -> bool {
        self.choi_min_eigenvalue >= -1e-8 && self.trace_residual <= 1e-10
    }
}

pub fn verify_cptp(map: &Superoperator) -> CptpReport {
    CptpReport {
        choi_min_eigenvalue: map.choi_min_eigenvalue(),
        trace_residual: map.trace_preservation_residual(),
    }
}

/// One-parameter family of maps `Phi_t`, defined on a neighbourhood of
/// `t >= 0` (central differences sample slightly negative times).
pub trait MapFamily: Sync {
    fn dim(&self) -> usize;
    fn map(&self, t: f64) -> Result<Superoperator>;
}

/// `Phi_t[X] = tr_E[U(t) (X (x) rho_E) U(t)^dag]`.
#[derive(Clone, Debug)]
pub struct UnitaryFamily {
    pub propagator: GlobalPropagator,
    pub env_state: Operator,
}

impl UnitaryFamily {
    pub fn new(propagator: GlobalPropagator, env_state: Operator) -> Self {
        UnitaryFamily { propagator, env_state }
    }
}

impl MapFamily for UnitaryFamily {
    fn dim(&self) -> usize {
        self.propagator.ds()
    }
    fn map(&self, t: f64) -> Result<Superoperator> {
        Ok(self.propagator.reduced_map(&self.env_state, t))
    }
}

/// Family given by a closure.
pub struct FnFamily<F> {
    pub d: usize,
    pub f: F,
}

impl<F: Fn(f64) -> Superoperator + Sync> MapFamily for FnFamily<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn map(&self, t: f64) -> Result<Superoperator> {
        Ok((self.f)(t))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractionOptions {
    /// Finite-difference step as a fraction of the grid spacing.
    pub step_fraction: f64,
    pub max_condition: f64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions { step_fraction: 0.1, max_condition: 1e8 }
    }
}

/// `L_t = dPhi_t/dt Phi_t^{-1}` on a grid, with a five-point central
/// difference for the derivative.
#[derive(Clone, Debug)]
pub struct ExtractedGenerator {
    /// Grid actually covered; shorter than requested after truncation.
    pub grid: TimeGrid,
    pub superops: Vec<Superoperator>,
    pub maps: Vec<Superoperator>,
    pub max_condition: f64,
    /// First grid time whose map was too ill-conditioned to invert.
    pub truncated_at: Option<f64>,
}

impl ExtractedGenerator {
    pub fn tabulate(&self, basis: &[Operator], normalization: ChannelNormalization) -> (TabulatedGenerator, f64) {
        TabulatedGenerator::from_superoperators(self.grid, &self.superops, basis, normalization)
    }
}

pub fn generator_from_maps<F: MapFamily + ?Sized>(
    family: &F,
    grid: TimeGrid,
    opts: ExtractionOptions,
) -> Result<ExtractedGenerator> {
    let h = grid.dt * opts.step_fraction;
    let mut superops = Vec::with_capacity(grid.n + 1);
    let mut maps = Vec::with_capacity(grid.n + 1);
    let mut max_condition: f64 = 1.0;
    let mut truncated_at = None;
    for k in 0..=grid.n {
        let t = grid.time(k);
        let phi = family.map(t)?;
        let cond = phi.condition_number();
        if !(cond <= opts.max_condition) {
            if k == 0 {
                return Err(Error::IllConditioned { time: t, condition: cond });
            }
            log::warn!("map at t = {t} has condition number {cond:.3e}; extraction window truncated");
            truncated_at = Some(t);
            break;
        }
        max_condition = max_condition.max(cond);
        let deriv = (family.map(t + h)? - family.map(t - h)?) * (8.0 / (12.0 * h))
            - (family.map(t + 2.0 * h)? - family.map(t - 2.0 * h)?) * (1.0 / (12.0 * h));
        let inv = phi.inverse().ok_or(Error::IllConditioned { time: t, condition: cond })?;
        superops.push(deriv.compose(&inv));
        maps.push(phi);
    }
    let n = superops.len() - 1;
    Ok(ExtractedGenerator { grid: TimeGrid { dt: grid.dt, n }, superops, maps, max_condition, truncated_at })
}
