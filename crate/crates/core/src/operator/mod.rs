//! Dense complex operators and the linear algebra built on them.
//!
//! Composite spaces are always ordered system first: the basis index of
//! `|i>_S |k>_E` is `i * dE + k`, which is what `kronecker` produces.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

mod superop;

pub use superop::{ChannelNormalization, LindbladForm, Superoperator};

pub type C64 = Complex64;
pub type Ket = DVector<C64>;

/// Uniform Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `(-SPLIT_CLAMP, 0)` count as zero when splitting.
pub const SPLIT_CLAMP: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "operator must be square, got {}x{}", m.nrows(), m.ncols());
        Operator(m)
    }

    pub fn try_from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Operator(m))
    }

    pub fn zeros(d: usize) -> Self {
        Operator(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Operator(DMatrix::identity(d, d))
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Operator(DMatrix::from_fn(d, d, f))
    }

    /// Row-major real entries.
    pub fn from_real_rows(d: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), d * d);
        Operator::from_fn(d, |i, j| c(rows[i * d + j], 0.0))
    }

    /// Row-major complex entries.
    pub fn from_rows(d: usize, rows: &[C64]) -> Self {
        assert_eq!(rows.len(), d * d);
        Operator::from_fn(d, |i, j| rows[i * d + j])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Operator::from_fn(d, |i, j| if i == j { c(diag[i], 0.0) } else { ZERO })
    }

    /// `|i><j|` in dimension `d`.
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(i, j)] = ONE;
        Operator(m)
    }

    pub fn ket_bra(ket: &Ket, bra: &Ket) -> Self {
        Operator(ket * bra.adjoint())
    }

    pub fn projector(psi: &Ket) -> Self {
        Operator::ket_bra(psi, psi)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Operator(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Operator(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator(&self.0 * s)
    }

    /// Hilbert-Schmidt inner product `tr[self^dag other]`.
    pub fn inner(&self, other: &Operator) -> C64 {
        self.0.zip_fold(&other.0, ZERO, |acc, a, b| acc + a.conj() * b)
    }

    /// `tr[self other]` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.0.zip_fold(&other.0, 0.0, |m, a, b| m.max((a - b).norm()))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn hermitian_part(&self) -> Self {
        Operator((&self.0 + self.0.adjoint()) * c(0.5, 0.0))
    }

    pub fn is_trace_one(&self, tol: f64) -> bool {
        (self.trace() - ONE).norm() <= tol
    }

    /// False for non-Hermitian input.
    pub fn is_psd(&self, tol: f64) -> bool {
        match hermitian_eig(self) {
            Ok(e) => e.values[0] >= -tol,
            Err(_) => false,
        }
    }

    pub fn expectation(&self, psi: &Ket) -> C64 {
        psi.dotc(&(&self.0 * psi))
    }

    pub fn apply(&self, psi: &Ket) -> Ket {
        &self.0 * psi
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Operator(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        Operator(&self.0 * &other.0 + &other.0 * &self.0)
    }

    /// Column-stacked vector of entries.
    pub fn vec(&self) -> DVector<C64> {
        DVector::from_column_slice(self.0.as_slice())
    }

    pub fn from_vec(v: &DVector<C64>) -> Self {
        let d = (v.len() as f64).sqrt().round() as usize;
        assert_eq!(d * d, v.len());
        Operator(DMatrix::from_column_slice(d, d, v.as_slice()))
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                Operator(&self.0 $op &rhs.0)
            }
        }
        impl $tr<Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                Operator(self.0 $op rhs.0)
            }
        }
        impl $tr<&Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                Operator(self.0 $op &rhs.0)
            }
        }
        impl $tr<Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                Operator(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, s: C64) -> Operator {
        Operator(&self.0 * s)
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, s: C64) -> Operator {
        Operator(self.0 * s)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        Operator(&self.0 * c(s, 0.0))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        Operator(self.0 * c(s, 0.0))
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, o: &Operator) -> Operator {
        o * self
    }
}

impl Mul<Operator> for f64 {
    type Output = Operator;
    fn mul(self, o: Operator) -> Operator {
        o * self
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, o: &Operator) -> Operator {
        o * self
    }
}

impl Mul<Operator> for C64 {
    type Output = Operator;
    fn mul(self, o: Operator) -> Operator {
        o * self
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-self.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Operator> for Operator {
    fn add_assign(&mut self, rhs: Operator) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        self.0 -= &rhs.0;
    }
}

/// Qubit operators in the convention `sigma_z = |1><1| - |0><0|`,
/// `sigma_+ = |1><0|`, `sigma_- = |0><1|`, `sigma_x sigma_y = i sigma_z`.
pub mod pauli {
    use super::*;

    pub fn x() -> Operator {
        Operator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> Operator {
        Operator::from_rows(2, &[ZERO, I, -I, ZERO])
    }

    pub fn z() -> Operator {
        Operator::diagonal(&[-1.0, 1.0])
    }

    pub fn plus() -> Operator {
        Operator::unit(2, 1, 0)
    }

    pub fn minus() -> Operator {
        Operator::unit(2, 0, 1)
    }

    pub fn all() -> [Operator; 3] {
        [x(), y(), z()]
    }
}

pub fn basis_ket(d: usize, k: usize) -> Ket {
    let mut v = Ket::zeros(d);
    v[k] = ONE;
    v
}

pub fn normalized(psi: &Ket) -> Ket {
    psi / c(psi.norm(), 0.0)
}

/// Kronecker product, system factor first.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    Operator(a.0.kronecker(&b.0))
}

pub fn tensor_ket(a: &Ket, b: &Ket) -> Ket {
    a.kronecker(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    System,
    Environment,
}

/// Partial trace of an arbitrary (not necessarily positive) operator on `dS * dE`.
pub fn partial_trace_op(x: &Operator, ds: usize, de: usize, keep: Keep) -> Result<Operator> {
    if x.dim() != ds * de {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} is not {}x{}",
            x.dim(),
            ds,
            de
        )));
    }
    let m = &x.0;
    Ok(match keep {
        Keep::System => Operator::from_fn(ds, |i, j| {
            (0..de).map(|k| m[(i * de + k, j * de + k)]).sum()
        }),
        Keep::Environment => Operator::from_fn(de, |k, l| {
            (0..ds).map(|i| m[(i * de + k, i * de + l)]).sum()
        }),
    })
}

/// Density operator on a bipartite space, system first.
#[derive(Clone, Debug)]
pub struct BipartiteState {
    ds: usize,
    de: usize,
    rho: Operator,
}

impl BipartiteState {
    pub fn new(rho: Operator, ds: usize, de: usize) -> Result<Self> {
        if ds == 0 || de == 0 || rho.dim() != ds * de {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} is not {}x{}",
                rho.dim(),
                ds,
                de
            )));
        }
        let dev = rho.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if !rho.is_trace_one(HERMITIAN_TOL) {
            return Err(Error::DimensionMismatch(format!(
                "state trace {} is not one",
                rho.trace()
            )));
        }
        let e = hermitian_eig(&rho)?;
        if e.values[0] < -HERMITIAN_TOL {
            return Err(Error::DimensionMismatch(format!(
                "state has negative eigenvalue {:.3e}",
                e.values[0]
            )));
        }
        Ok(BipartiteState { ds, de, rho })
    }

    pub fn pure(psi: &Ket, ds: usize, de: usize) -> Result<Self> {
        BipartiteState::new(Operator::projector(&normalized(psi)), ds, de)
    }

    pub fn product(rs: &Operator, re: &Operator) -> Result<Self> {
        BipartiteState::new(tensor_product(rs, re), rs.dim(), re.dim())
    }

    /// Skips validation; for evolved states whose positivity is guaranteed by construction.
    pub fn from_parts_unchecked(rho: Operator, ds: usize, de: usize) -> Self {
        debug_assert_eq!(rho.dim(), ds * de);
        BipartiteState { ds, de, rho }
    }

    pub fn ds(&self) -> usize {
        self.ds
    }

    pub fn de(&self) -> usize {
        self.de
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    pub fn into_rho(self) -> Operator {
        self.rho
    }
}

pub fn partial_trace(state: &BipartiteState, keep: Keep) -> Operator {
    partial_trace_op(&state.rho, state.ds, state.de, keep).expect("dimensions validated")
}

/// Eigen-decomposition with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Ket {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> Operator {
        let d = self.values.len();
        let mut m = DMatrix::zeros(d, d);
        for (k, &l) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            m += &v * v.adjoint() * c(l, 0.0);
        }
        Operator(m)
    }
}

pub fn hermitian_eig(h: &Operator) -> Result<Eigen> {
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(hermitian_eig_unchecked(&h.hermitian_part()))
}

/// Input is assumed Hermitian; only the Hermitian part is used.
pub fn hermitian_eig_unchecked(h: &Operator) -> Eigen {
    let d = h.dim();
    if d == 1 {
        return Eigen {
            values: vec![h.0[(0, 0)].re],
            vectors: DMatrix::identity(1, 1),
        };
    }
    let sym = nalgebra::SymmetricEigen::new(h.hermitian_part().0);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[a].total_cmp(&sym.eigenvalues[b]));
    let values = order.iter().map(|&k| sym.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(d, d, |i, j| sym.eigenvectors[(i, order[j])]);
    Eigen { values, vectors }
}

/// `q = mu_plus * sigma_plus - mu_minus * sigma_minus` with unit-trace positive parts.
#[derive(Clone, Debug)]
pub struct PosNegSplit {
    pub mu_plus: f64,
    pub sigma_plus: Option<Operator>,
    pub mu_minus: f64,
    pub sigma_minus: Option<Operator>,
}

impl PosNegSplit {
    pub fn recombined(&self, d: usize) -> Operator {
        let mut out = Operator::zeros(d);
        if let Some(s) = &self.sigma_plus {
            out += s * self.mu_plus;
        }
        if let Some(s) = &self.sigma_minus {
            out -= &(s * self.mu_minus);
        }
        out
    }

    pub fn part(&self, sign: Sign) -> Option<(f64, &Operator)> {
        match sign {
            Sign::Plus => self.sigma_plus.as_ref().map(|s| (self.mu_plus, s)),
            Sign::Minus => self.sigma_minus.as_ref().map(|s| (self.mu_minus, s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

pub fn positive_negative_parts(q: &Operator) -> Result<PosNegSplit> {
    let e = hermitian_eig(q)?;
    let d = q.dim();
    let mut plus = DMatrix::zeros(d, d);
    let mut minus = DMatrix::zeros(d, d);
    let (mut mu_plus, mut mu_minus) = (0.0, 0.0);
    for (k, &l) in e.values.iter().enumerate() {
        let v = e.vectors.column(k);
        if l > 0.0 {
            plus += &v * v.adjoint() * c(l, 0.0);
            mu_plus += l;
        } else if l <= -SPLIT_CLAMP {
            minus += &v * v.adjoint() * c(-l, 0.0);
            mu_minus += -l;
        }
    }
    let norm = |m: DMatrix<C64>, mu: f64| {
        (mu > 0.0).then(|| Operator(m * c(1.0 / mu, 0.0)).hermitian_part())
    };
    Ok(PosNegSplit {
        sigma_plus: norm(plus, mu_plus),
        sigma_minus: norm(minus, mu_minus),
        mu_plus,
        mu_minus,
    })
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let e = hermitian_eig(&(a - b))?;
    Ok(0.5 * e.values.iter().map(|l| l.abs()).sum::<f64>())
}

/// Sum of per-element variance, mapped to a trace-distance scale: `0.5 * sqrt(d) * ||se||_F`.
pub fn trace_distance_sigma(element_se: &DMatrix<f64>) -> f64 {
    let d = element_se.nrows() as f64;
    0.5 * d.sqrt() * element_se.norm()
}
