//! Second-order time-local generators with the adapted projection
//! `P[X] = tr_E[X] (x) rho_E`.
//!
//! For `H_I(t) = sum_j A_j(t) (x) B_j(t)` in the interaction picture,
//!
//! `L[X] = -i g [sum_j A_j(t) <B_j(t)>, X] + J[X] - M X - X N`, with
//! `M = g^2 sum_jk int_0^t A_j(t) A_k(s) Cov_jk(t, s) ds`,
//! `N = g^2 sum_jk int_0^t A_k(s) A_j(t) Cov_kj(s, t) ds` and
//! `J[X] = g^2 sum_jk int_0^t (A_k(s) X A_j(t) Cov_jk(t, s) + A_j(t) X A_k(s) Cov_kj(s, t)) ds`.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::operator::{c, hermitian_eig, ChannelNormalization, Eigen, Operator, Superoperator, C64, I};
use crate::quadrature::{integrate, QuadOptions};

use super::{Generator, LindbladTerms, TabulatedGenerator, TimeGrid};

/// Interaction-picture correlation functions of the environment operators.
pub trait EnvironmentCorrelations: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `<B_j(t)>`.
    fn mean(&self, j: usize, t: f64) -> C64;

    /// `<B_j(t) B_k(s)>`.
    fn moment(&self, j: usize, k: usize, t: f64, s: f64) -> C64;

    /// `Cov_jk(t, s)` for all pairs.
    fn covariances(&self, t: f64, s: f64) -> DMatrix<C64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |j, k| self.moment(j, k, t, s) - self.mean(j, t) * self.mean(k, s))
    }
}

/// `B_j(t) = exp(i H_E t) B_j exp(-i H_E t)` on a finite space.
#[derive(Clone, Debug)]
pub struct FiniteEnvironment {
    energies: Vec<f64>,
    ops: Vec<DMatrix<C64>>,
    rho: DMatrix<C64>,
}

impl FiniteEnvironment {
    pub fn new(h_e: &Operator, ops: &[Operator], rho: &Operator) -> Result<Self> {
        let e = hermitian_eig(h_e)?;
        let v = &e.vectors;
        let rotate = |x: &Operator| v.adjoint() * x.matrix() * v;
        Ok(FiniteEnvironment {
            energies: e.values.clone(),
            ops: ops.iter().map(rotate).collect(),
            rho: rotate(rho),
        })
    }

    fn evolved(&self, j: usize, t: f64) -> DMatrix<C64> {
        let b = &self.ops[j];
        let e = &self.energies;
        DMatrix::from_fn(b.nrows(), b.ncols(), |r, col| b[(r, col)] * C64::from_polar(1.0, (e[r] - e[col]) * t))
    }
}

impl EnvironmentCorrelations for FiniteEnvironment {
    fn len(&self) -> usize {
        self.ops.len()
    }

    fn mean(&self, j: usize, t: f64) -> C64 {
        (self.evolved(j, t) * &self.rho).trace()
    }

    fn moment(&self, j: usize, k: usize, t: f64, s: f64) -> C64 {
        (self.evolved(j, t) * self.evolved(k, s) * &self.rho).trace()
    }

    fn covariances(&self, t: f64, s: f64) -> DMatrix<C64> {
        let n = self.len();
        let at_t: Vec<DMatrix<C64>> = (0..n).map(|j| self.evolved(j, t)).collect();
        let at_s_rho: Vec<DMatrix<C64>> = (0..n).map(|k| self.evolved(k, s) * &self.rho).collect();
        let mean_t: Vec<C64> = at_t.iter().map(|b| (b * &self.rho).trace()).collect();
        let mean_s: Vec<C64> = at_s_rho.iter().map(|b| b.trace()).collect();
        DMatrix::from_fn(n, n, |j, k| {
            let m = at_t[j].transpose().zip_fold(&at_s_rho[k], c(0.0, 0.0), |acc, x, y| acc + x * y);
            m - mean_t[j] * mean_s[k]
        })
    }
}

/// Single bosonic mode of frequency `omega` with occupation `n` and no
/// coherences; operators `[b, b^dag]`.
#[derive(Clone, Copy, Debug)]
pub struct SingleModeCorrelations {
    pub n: f64,
    pub omega: f64,
}

impl EnvironmentCorrelations for SingleModeCorrelations {
    fn len(&self) -> usize {
        2
    }

    fn mean(&self, _j: usize, _t: f64) -> C64 {
        c(0.0, 0.0)
    }

    fn moment(&self, j: usize, k: usize, t: f64, s: f64) -> C64 {
        match (j, k) {
            (0, 1) => C64::from_polar(self.n + 1.0, -self.omega * (t - s)),
            (1, 0) => C64::from_polar(self.n, self.omega * (t - s)),
            _ => c(0.0, 0.0),
        }
    }
}

/// Bosonic continuum with `J(w) = g w` and flat occupation `n` on `[0, w_c]`;
/// operators `[sum_k g_k b_k, sum_k g_k^* b_k^dag]`.
#[derive(Clone, Copy, Debug)]
pub struct ContinuumCorrelations {
    pub g: f64,
    pub omega_c: f64,
    pub n: f64,
}

impl ContinuumCorrelations {
    /// `int_0^{w_c} w exp(-i w s) dw`.
    fn ohmic_transform(&self, s: f64) -> C64 {
        let w = self.omega_c;
        if (w * s).abs() < 1e-2 {
            let mut sum = c(0.0, 0.0);
            let mut term = c(1.0, 0.0);
            for m in 0..12 {
                sum += term * (w.powi(m as i32 + 2) / (m as f64 + 2.0));
                term *= c(0.0, -s) / (m as f64 + 1.0);
            }
            sum
        } else {
            C64::from_polar(1.0, -w * s) * c(1.0 / (s * s), w / s) - 1.0 / (s * s)
        }
    }
}

impl EnvironmentCorrelations for ContinuumCorrelations {
    fn len(&self) -> usize {
        2
    }

    fn mean(&self, _j: usize, _t: f64) -> C64 {
        c(0.0, 0.0)
    }

    fn moment(&self, j: usize, k: usize, t: f64, s: f64) -> C64 {
        match (j, k) {
            (0, 1) => self.ohmic_transform(t - s) * (self.g * (self.n + 1.0)),
            (1, 0) => self.ohmic_transform(t - s).conj() * (self.g * self.n),
            _ => c(0.0, 0.0),
        }
    }
}

/// `A(t) = exp(i H_S t) A exp(-i H_S t)`.
#[derive(Clone, Debug)]
pub struct InteractionPicture {
    eig: Eigen,
    ops: Vec<DMatrix<C64>>,
}

impl InteractionPicture {
    pub fn new(h_s: &Operator, ops: &[Operator]) -> Result<Self> {
        let eig = hermitian_eig(h_s)?;
        let v = &eig.vectors;
        let ops = ops.iter().map(|a| v.adjoint() * a.matrix() * v).collect();
        Ok(InteractionPicture { eig, ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, j: usize, t: f64) -> Operator {
        let a = &self.ops[j];
        let e = &self.eig.values;
        let rotated = DMatrix::from_fn(a.nrows(), a.ncols(), |r, col| a[(r, col)] * C64::from_polar(1.0, (e[r] - e[col]) * t));
        let v = &self.eig.vectors;
        Operator::from_matrix(v * rotated * v.adjoint())
    }
}

/// Pieces of the second-order generator at one time.
#[derive(Clone, Debug)]
pub struct ApoSample {
    pub drive: Operator,
    pub m: Operator,
    pub n: Operator,
    pub superoperator: Superoperator,
    pub quadrature_error: f64,
}

impl ApoSample {
    /// `(M - N) / 2i`.
    pub fn lamb_shift(&self) -> Operator {
        (&self.m - &self.n) * c(0.0, -0.5)
    }

    /// `M + N`.
    pub fn decay(&self) -> Operator {
        &self.m + &self.n
    }
}

pub fn apo_sample(
    system: &InteractionPicture,
    env: &dyn EnvironmentCorrelations,
    coupling: f64,
    t: f64,
    quad: QuadOptions,
) -> Result<ApoSample> {
    let nops = system.len();
    let d = if nops > 0 { system.op(0, 0.0).dim() } else { 0 };
    let dd = d * d;
    let a_t: Vec<Operator> = (0..nops).map(|j| system.op(j, t)).collect();
    let mut drive = Operator::zeros(d);
    for (j, a) in a_t.iter().enumerate() {
        drive += a * (env.mean(j, t) * coupling);
    }
    let block = nops * nops * dd;
    let integrand = |s: f64| {
        let c1 = env.covariances(t, s);
        let c2 = env.covariances(s, t);
        let mut out = vec![c(0.0, 0.0); 2 * block];
        for k in 0..nops {
            let a_s = system.op(k, s);
            for j in 0..nops {
                let (w1, w2) = (c1[(j, k)], c2[(k, j)]);
                let base = (j * nops + k) * dd;
                for (idx, z) in a_s.matrix().iter().enumerate() {
                    out[base + idx] = z * w1;
                    out[block + base + idx] = z * w2;
                }
            }
        }
        out
    };
    let (vals, quadrature_error) = if t > 0.0 {
        integrate(integrand, 0.0, t, &[], quad)?
    } else {
        (vec![c(0.0, 0.0); 2 * block], 0.0)
    };
    let g2 = coupling * coupling;
    let piece = |offset: usize| Operator::from_matrix(DMatrix::from_column_slice(d, d, &vals[offset..offset + dd]) * c(g2, 0.0));
    let mut m = Operator::zeros(d);
    let mut n = Operator::zeros(d);
    let mut s = Superoperator::commutator(&drive.hermitian_part());
    for j in 0..nops {
        for k in 0..nops {
            let base = (j * nops + k) * dd;
            let i1 = piece(base);
            let i2 = piece(block + base);
            if i1.max_abs() == 0.0 && i2.max_abs() == 0.0 {
                continue;
            }
            m += &a_t[j] * &i1;
            n += &i2 * &a_t[j];
            s = s + Superoperator::sandwich(&i1, &a_t[j]) + Superoperator::sandwich(&a_t[j], &i2);
        }
    }
    s = s - Superoperator::left_right(&m, &n);
    Ok(ApoSample { drive: drive.hermitian_part(), m, n, superoperator: s, quadrature_error })
}

/// Second-order generator tabulated on a grid.
#[derive(Clone, Debug)]
pub struct ApoGenerator {
    pub table: TabulatedGenerator,
    pub samples: Vec<ApoSample>,
    /// Largest deviation between the sampled superoperators and their Lindblad form.
    pub form_residual: f64,
}

impl ApoGenerator {
    pub fn sample(&self, k: usize) -> &ApoSample {
        &self.samples[k]
    }
}

impl Generator for ApoGenerator {
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

#[derive(Clone, Copy, Debug)]
pub struct ApoOptions {
    pub quadrature: QuadOptions,
    pub normalization: ChannelNormalization,
}

impl Default for ApoOptions {
    fn default() -> Self {
        ApoOptions { quadrature: QuadOptions::default(), normalization: ChannelNormalization::HilbertSchmidt }
    }
}

/// Tabulates the second-order generator for system operators `a_ops`,
/// system Hamiltonian `h_s` and environment correlations `env`.
pub fn apo_generator(
    a_ops: &[Operator],
    h_s: &Operator,
    env: &dyn EnvironmentCorrelations,
    coupling: f64,
    grid: TimeGrid,
    opts: ApoOptions,
) -> Result<ApoGenerator> {
    let system = InteractionPicture::new(h_s, a_ops)?;
    let samples = grid
        .times()
        .into_iter()
        .map(|t| apo_sample(&system, env, coupling, t, opts.quadrature))
        .collect::<Result<Vec<_>>>()?;
    let superops: Vec<Superoperator> = samples.iter().map(|s| s.superoperator.clone()).collect();
    let basis = crate::frames::traceless_basis(h_s.dim());
    let (table, form_residual) = TabulatedGenerator::from_superoperators(grid, &superops, &basis, opts.normalization);
    Ok(ApoGenerator { table, samples, form_residual })
}

/// `-i [H, .]` as used by first-order drives.
pub fn drive_superoperator(h: &Operator) -> Superoperator {
    Superoperator::left_right(&(h * (-I)), &(h * I))
}
