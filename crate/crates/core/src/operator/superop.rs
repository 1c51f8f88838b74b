//! Linear maps on `d x d` operators as `d^2 x d^2` matrices acting on
//! column-stacked vectors: `vec(A X B) = (B^T kron A) vec(X)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use super::{c, hermitian_eig_unchecked, tensor_product, Operator, C64, I, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    d: usize,
    m: DMatrix<C64>,
}

impl Superoperator {
    pub fn from_matrix(d: usize, m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), d * d);
        assert_eq!(m.ncols(), d * d);
        Superoperator { d, m }
    }

    pub fn zeros(d: usize) -> Self {
        Superoperator::from_matrix(d, DMatrix::zeros(d * d, d * d))
    }

    pub fn identity(d: usize) -> Self {
        Superoperator::from_matrix(d, DMatrix::identity(d * d, d * d))
    }

    /// Tabulates a linear map from its action on matrix units.
    pub fn from_map(d: usize, f: impl Fn(&Operator) -> Operator) -> Self {
        let mut m = DMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let col = f(&Operator::unit(d, i, j)).vec();
                m.set_column(i + j * d, &col);
            }
        }
        Superoperator::from_matrix(d, m)
    }

    /// `X -> a X b`.
    pub fn sandwich(a: &Operator, b: &Operator) -> Self {
        Superoperator::from_matrix(a.dim(), b.matrix().transpose().kronecker(a.matrix()))
    }

    /// `X -> -i [h, X]`.
    pub fn commutator(h: &Operator) -> Self {
        let id = Operator::identity(h.dim());
        (Superoperator::sandwich(h, &id) - Superoperator::sandwich(&id, h)) * (-I)
    }

    /// `X -> a X + X b`.
    pub fn left_right(a: &Operator, b: &Operator) -> Self {
        let id = Operator::identity(a.dim());
        Superoperator::sandwich(a, &id) + Superoperator::sandwich(&id, b)
    }

    /// `X -> gamma (L X L^dag - {L^dag L, X}/2)`.
    pub fn dissipator(rate: f64, l: &Operator) -> Self {
        let ld = l.adjoint();
        let ll = &ld * l;
        (Superoperator::sandwich(l, &ld) - Superoperator::left_right(&ll, &ll) * c(0.5, 0.0))
            * c(rate, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        Operator::from_vec(&(&self.m * x.vec()))
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.m * v
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator::from_matrix(self.d, &self.m * &other.m)
    }

    pub fn inverse(&self) -> Option<Superoperator> {
        self.m.clone().try_inverse().map(|m| Superoperator::from_matrix(self.d, m))
    }

    /// Ratio of extreme singular values; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        let sv = self.m.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        self.m.zip_fold(&other.m, 0.0, |m, a, b| m.max((a - b).norm()))
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// `sum_ij |i><j| kron Phi[|i><j|]`.
    pub fn choi(&self) -> Operator {
        let d = self.d;
        let mut out = Operator::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                out += tensor_product(&Operator::unit(d, i, j), &self.apply(&Operator::unit(d, i, j)));
            }
        }
        out
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        hermitian_eig_unchecked(&self.choi()).values[0]
    }

    /// `max_ij |tr Phi[|i><j|] - delta_ij|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.d;
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let t = self.apply(&Operator::unit(d, i, j)).trace();
                let target = if i == j { ONE } else { ZERO };
                r = r.max((t - target).norm());
            }
        }
        r
    }

    /// `max_ij |tr L[|i><j|]|`, zero for a generator of trace-preserving dynamics.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let d = self.d;
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                r = r.max(self.apply(&Operator::unit(d, i, j)).trace().norm());
            }
        }
        r
    }

    /// `max |L[X]^dag - L[X^dag]|` over matrix units.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.d;
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let a = self.apply(&Operator::unit(d, i, j)).adjoint();
                let b = self.apply(&Operator::unit(d, j, i));
                r = r.max(a.max_abs_diff(&b));
            }
        }
        r
    }

    /// Coefficients `c_ab` of `L[X] = sum_ab c_ab F_a X F_b^dag` for an
    /// orthonormal operator list `F`.
    pub fn process_matrix(&self, basis: &[Operator]) -> DMatrix<C64> {
        let n = basis.len();
        DMatrix::from_fn(n, n, |a, b| {
            let k = basis[b].conj().matrix().kronecker(basis[a].matrix());
            k.zip_fold(&self.m, ZERO, |acc, x, y| acc + x.conj() * y)
        })
    }

    /// Decomposes a generator into Hamiltonian and Kossakowski matrix over
    /// `basis`, a list of orthonormal traceless Hermitian operators. The
    /// Hamiltonian comes out traceless. Incomplete bases are allowed; the
    /// residual reports what the basis fails to capture.
    pub fn kossakowski(&self, basis: &[Operator]) -> LindbladForm {
        let d = self.d;
        let mut full = Vec::with_capacity(basis.len() + 1);
        full.push(Operator::identity(d) * (1.0 / (d as f64).sqrt()));
        full.extend(basis.iter().cloned());
        let n = full.len();
        let coeff = self.process_matrix(&full);
        let mut f_prime = Operator::zeros(d);
        for a in 1..n {
            f_prime += &full[a] * (coeff[(a, 0)] / c((d as f64).sqrt(), 0.0));
        }
        let hamiltonian = ((&f_prime - f_prime.adjoint()) * c(0.0, 0.5)).hermitian_part();
        let m = n - 1;
        let kossakowski = DMatrix::from_fn(m, m, |a, b| coeff[(a + 1, b + 1)]);
        let form = LindbladForm {
            d,
            hamiltonian,
            kossakowski,
            basis: basis.to_vec(),
            residual: 0.0,
        };
        let residual = form.superoperator().max_abs_diff(self);
        LindbladForm { residual, ..form }
    }
}

impl Add for Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: Superoperator) -> Superoperator {
        Superoperator::from_matrix(self.d, self.m + rhs.m)
    }
}

impl Sub for Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: Superoperator) -> Superoperator {
        Superoperator::from_matrix(self.d, self.m - rhs.m)
    }
}

impl Mul<C64> for Superoperator {
    type Output = Superoperator;
    fn mul(self, s: C64) -> Superoperator {
        Superoperator::from_matrix(self.d, self.m * s)
    }
}

impl Mul<f64> for Superoperator {
    type Output = Superoperator;
    fn mul(self, s: f64) -> Superoperator {
        self * c(s, 0.0)
    }
}

/// `L[X] = -i[H, X] + sum_ab K_ab (F_a X F_b^dag - {F_b^dag F_a, X}/2)`.
#[derive(Clone, Debug)]
pub struct LindbladForm {
    pub d: usize,
    pub hamiltonian: Operator,
    pub kossakowski: DMatrix<C64>,
    pub basis: Vec<Operator>,
    /// Max entry deviation between this form and the superoperator it came from.
    pub residual: f64,
}

/// Scale of diagonalised jump operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelNormalization {
    /// `tr L^dag L = 1`.
    #[default]
    HilbertSchmidt,
    /// `tr L^dag L = d`, so that Pauli operators have unit weight.
    Pauli,
}

impl LindbladForm {
    pub fn superoperator(&self) -> Superoperator {
        let d = self.d;
        let mut s = Superoperator::commutator(&self.hamiltonian);
        let n = self.basis.len();
        for a in 0..n {
            for b in 0..n {
                let k = self.kossakowski[(a, b)];
                if k.norm() == 0.0 {
                    continue;
                }
                let fa = &self.basis[a];
                let fb_dag = self.basis[b].adjoint();
                let g = &fb_dag * fa;
                let term = Superoperator::sandwich(fa, &fb_dag)
                    - Superoperator::left_right(&g, &g) * c(0.5, 0.0);
                s = s + term * k;
            }
        }
        debug_assert_eq!(s.dim(), d);
        s
    }

    /// Eigen-channels of the Kossakowski matrix, ascending in rate.
    pub fn channels(&self, norm: ChannelNormalization) -> Vec<(f64, Operator)> {
        let n = self.basis.len();
        if n == 0 {
            return Vec::new();
        }
        let e = hermitian_eig_unchecked(&Operator::from_matrix(self.kossakowski.clone()));
        let scale = match norm {
            ChannelNormalization::HilbertSchmidt => 1.0,
            ChannelNormalization::Pauli => self.d as f64,
        };
        (0..n)
            .map(|k| {
                let mut l = Operator::zeros(self.d);
                for a in 0..n {
                    l += &self.basis[a] * e.vectors[(a, k)];
                }
                (e.values[k] / scale, l * scale.sqrt())
            })
            .collect()
    }
}
