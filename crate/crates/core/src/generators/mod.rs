//! Time-dependent Lindblad generators.

use nalgebra::DMatrix;

use crate::operator::{
    c, hermitian_eig_unchecked, ChannelNormalization, LindbladForm, Operator, Superoperator, C64,
    I,
};

pub mod apo;
pub mod dephasing;
pub mod divisibility;
pub mod fixed_corr;
pub mod jc;
pub mod two_qubit;

/// Channels with `|rate| * ||L||^2` below this are dropped.
pub const RATE_EPS: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct Channel {
    pub rate: f64,
    pub op: Operator,
}

impl Channel {
    pub fn new(rate: f64, op: Operator) -> Self {
        Channel { rate, op }
    }
}

/// Jump term `a X b^dag + b X a^dag` with decay contribution `b^dag a + a^dag b`.
#[derive(Clone, Debug)]
pub struct PairJump {
    pub a: Operator,
    pub b: Operator,
}

/// Generator sample at one time:
/// `L[X] = -i[H, X] + J[X] - {Gamma, X}/2`.
#[derive(Clone, Debug)]
pub struct LindbladTerms {
    pub hamiltonian: Operator,
    pub channels: Vec<Channel>,
    pub pairs: Vec<PairJump>,
}

impl LindbladTerms {
    pub fn zero(d: usize) -> Self {
        LindbladTerms { hamiltonian: Operator::zeros(d), channels: Vec::new(), pairs: Vec::new() }
    }

    pub fn with_channels(hamiltonian: Operator, channels: Vec<Channel>) -> Self {
        LindbladTerms { hamiltonian, channels, pairs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn gamma(&self) -> Operator {
        let mut g = Operator::zeros(self.dim());
        for ch in &self.channels {
            g += (&ch.op.adjoint() * &ch.op) * ch.rate;
        }
        for p in &self.pairs {
            g += &p.b.adjoint() * &p.a + &p.a.adjoint() * &p.b;
        }
        g
    }

    /// `K = H - i Gamma / 2`.
    pub fn effective_hamiltonian(&self) -> Operator {
        &self.hamiltonian - self.gamma() * c(0.0, 0.5)
    }

    pub fn jump(&self, x: &Operator) -> Operator {
        let mut out = Operator::zeros(self.dim());
        for ch in &self.channels {
            out += (&ch.op * x * ch.op.adjoint()) * ch.rate;
        }
        for p in &self.pairs {
            out += &p.a * x * p.b.adjoint() + &p.b * x * p.a.adjoint();
        }
        out
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        let k = self.effective_hamiltonian();
        let drift = (&k * x - x * k.adjoint()) * (-I);
        drift + self.jump(x)
    }

    pub fn superoperator(&self) -> Superoperator {
        let k = self.effective_hamiltonian();
        let mut s = Superoperator::left_right(&(&k * (-I)), &(k.adjoint() * I));
        for ch in &self.channels {
            s = s + Superoperator::sandwich(&ch.op, &ch.op.adjoint()) * ch.rate;
        }
        for p in &self.pairs {
            s = s
                + Superoperator::sandwich(&p.a, &p.b.adjoint())
                + Superoperator::sandwich(&p.b, &p.a.adjoint());
        }
        s
    }

    /// Pair jumps rewritten as diagonal channels; negligible channels dropped.
    pub fn channel_form(&self) -> Vec<Channel> {
        let mut out: Vec<Channel> = self
            .channels
            .iter()
            .filter(|ch| ch.rate.abs() * ch.op.frobenius_norm().powi(2) > RATE_EPS)
            .cloned()
            .collect();
        let d = self.dim();
        if self.pairs.is_empty() {
            return out;
        }
        let basis = crate::frames::hermitian_basis(d);
        let n = basis.len();
        let mut k = DMatrix::<C64>::zeros(n, n);
        for p in &self.pairs {
            let av: Vec<C64> = basis.iter().map(|f| f.inner(&p.a)).collect();
            let bv: Vec<C64> = basis.iter().map(|f| f.inner(&p.b)).collect();
            for i in 0..n {
                for j in 0..n {
                    k[(i, j)] += av[i] * bv[j].conj() + bv[i] * av[j].conj();
                }
            }
        }
        let e = hermitian_eig_unchecked(&Operator::from_matrix(k));
        for (idx, &rate) in e.values.iter().enumerate() {
            if rate.abs() <= RATE_EPS {
                continue;
            }
            let mut l = Operator::zeros(d);
            for (i, f) in basis.iter().enumerate() {
                l += f * e.vectors[(i, idx)];
            }
            out.push(Channel::new(rate, l));
        }
        out
    }

    /// Same generator with pair jumps diagonalised.
    pub fn to_channels(&self) -> LindbladTerms {
        LindbladTerms::with_channels(self.hamiltonian.clone(), self.channel_form())
    }

    /// Traceless-gauge Lindblad form over the orthonormal Pauli-type basis.
    pub fn canonical(&self) -> LindbladForm {
        self.superoperator().kossakowski(&crate::frames::traceless_basis(self.dim()))
    }

    pub fn min_rate(&self) -> f64 {
        self.channel_form().iter().map(|ch| ch.rate).fold(f64::INFINITY, f64::min)
    }

    /// `sum_j |gamma_j| ||L_j||^2` with the operator norm.
    pub fn rate_scale(&self) -> f64 {
        self.channel_form()
            .iter()
            .map(|ch| ch.rate.abs() * operator_norm(&ch.op).powi(2))
            .sum()
    }
}

pub fn operator_norm(a: &Operator) -> f64 {
    a.matrix().clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Time-dependent generator, queried at arbitrary times.
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;

    fn terms(&self, t: f64) -> LindbladTerms;

    fn superoperator(&self, t: f64) -> Superoperator {
        self.terms(t).superoperator()
    }

    /// Times where the generator is not smooth.
    fn knots(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<G: Generator + ?Sized> Generator for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        (**self).terms(t)
    }
    fn superoperator(&self, t: f64) -> Superoperator {
        (**self).superoperator(t)
    }
    fn knots(&self) -> Vec<f64> {
        (**self).knots()
    }
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        (**self).terms(t)
    }
    fn superoperator(&self, t: f64) -> Superoperator {
        (**self).superoperator(t)
    }
    fn knots(&self) -> Vec<f64> {
        (**self).knots()
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        (**self).terms(t)
    }
    fn superoperator(&self, t: f64) -> Superoperator {
        (**self).superoperator(t)
    }
    fn knots(&self) -> Vec<f64> {
        (**self).knots()
    }
}

#[derive(Clone, Debug)]
pub struct ConstantGenerator(pub LindbladTerms);

impl Generator for ConstantGenerator {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn terms(&self, _t: f64) -> LindbladTerms {
        self.0.clone()
    }
}

/// `gamma (sigma_- X sigma_+ - {sigma_+ sigma_-, X}/2)`.
pub fn decay_generator(gamma: f64) -> ConstantGenerator {
    ConstantGenerator(LindbladTerms::with_channels(
        Operator::zeros(2),
        vec![Channel::new(gamma, crate::operator::pauli::minus())],
    ))
}

/// Generator defined by a closure.
pub struct FnGenerator<F> {
    d: usize,
    f: F,
}

impl<F: Fn(f64) -> LindbladTerms + Send + Sync> FnGenerator<F> {
    pub fn new(d: usize, f: F) -> Self {
        FnGenerator { d, f }
    }
}

impl<F: Fn(f64) -> LindbladTerms + Send + Sync> Generator for FnGenerator<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn terms(&self, t: f64) -> LindbladTerms {
        (self.f)(t)
    }
}

/// Uniform time grid `t_k = k * dt`, `k = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, t_max: f64) -> Self {
        assert!(dt > 0.0 && t_max >= 0.0);
        let n = (t_max / dt - 1e-9).ceil().max(0.0) as usize;
        TimeGrid { dt, n }
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.n)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.time(k)).collect()
    }

    /// Index of the interval containing `t` and the fraction inside it.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        if self.n == 0 {
            return (0, 0.0);
        }
        let x = (t / self.dt).clamp(0.0, self.n as f64);
        let k = (x.floor() as usize).min(self.n - 1);
        (k, x - k as f64)
    }
}

/// Generator sampled on a grid as a Lindblad form over a fixed operator
/// basis, linearly interpolated in between.
#[derive(Clone, Debug)]
pub struct TabulatedGenerator {
    d: usize,
    grid: TimeGrid,
    basis: Vec<Operator>,
    hamiltonians: Vec<Operator>,
    kossakowski: Vec<DMatrix<C64>>,
    superops: Vec<Superoperator>,
    normalization: ChannelNormalization,
}

impl TabulatedGenerator {
    pub fn from_forms(grid: TimeGrid, forms: Vec<LindbladForm>, normalization: ChannelNormalization) -> Self {
        assert_eq!(forms.len(), grid.n + 1);
        let d = forms[0].d;
        let basis = forms[0].basis.clone();
        let superops = forms.iter().map(LindbladForm::superoperator).collect();
        TabulatedGenerator {
            d,
            grid,
            basis,
            hamiltonians: forms.iter().map(|f| f.hamiltonian.clone()).collect(),
            kossakowski: forms.iter().map(|f| f.kossakowski.clone()).collect(),
            superops,
            normalization,
        }
    }

    /// Decomposes sampled superoperators over `basis`.
    pub fn from_superoperators(
        grid: TimeGrid,
        superops: &[Superoperator],
        basis: &[Operator],
        normalization: ChannelNormalization,
    ) -> (Self, f64) {
        let forms: Vec<LindbladForm> = superops.iter().map(|s| s.kossakowski(basis)).collect();
        let residual = forms.iter().map(|f| f.residual).fold(0.0, f64::max);
        (TabulatedGenerator::from_forms(grid, forms, normalization), residual)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn basis(&self) -> &[Operator] {
        &self.basis
    }

    pub fn form_at(&self, k: usize) -> LindbladForm {
        LindbladForm {
            d: self.d,
            hamiltonian: self.hamiltonians[k].clone(),
            kossakowski: self.kossakowski[k].clone(),
            basis: self.basis.clone(),
            residual: 0.0,
        }
    }

    pub fn kossakowski_at(&self, k: usize) -> &DMatrix<C64> {
        &self.kossakowski[k]
    }

    pub fn sampled_superoperator(&self, k: usize) -> &Superoperator {
        &self.superops[k]
    }

    fn interpolated_form(&self, t: f64) -> LindbladForm {
        let (k, s) = self.grid.locate(t);
        let k1 = (k + 1).min(self.grid.n);
        let h = &self.hamiltonians[k] * (1.0 - s) + &self.hamiltonians[k1] * s;
        let km = &self.kossakowski[k] * c(1.0 - s, 0.0) + &self.kossakowski[k1] * c(s, 0.0);
        LindbladForm { d: self.d, hamiltonian: h, kossakowski: km, basis: self.basis.clone(), residual: 0.0 }
    }

    /// Eigen-rates per grid time, ordered by overlap continuity with the previous time.
    pub fn rate_curves(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.grid.n + 1);
        let mut prev: Option<DMatrix<C64>> = None;
        for k in &self.kossakowski {
            let e = hermitian_eig_unchecked(&Operator::from_matrix(k.clone()).hermitian_part());
            let n = e.values.len();
            let order: Vec<usize> = match &prev {
                None => (0..n).collect(),
                Some(p) => match_by_overlap(p, &e.vectors),
            };
            out.push(order.iter().map(|&i| e.values[i]).collect());
            prev = Some(DMatrix::from_fn(n, n, |r, col| e.vectors[(r, order[col])]));
        }
        out
    }
}

/// Greedy assignment: column `j` of the result is the index of the new
/// eigenvector with the largest overlap with previous vector `j`.
pub fn match_by_overlap(prev: &DMatrix<C64>, next: &DMatrix<C64>) -> Vec<usize> {
    let n = prev.ncols();
    let overlaps = prev.adjoint() * next;
    let mut taken = vec![false; n];
    let mut order = vec![0; n];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pairs.push((overlaps[(i, j)].norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut assigned = vec![false; n];
    for (_, i, j) in pairs {
        if !assigned[i] && !taken[j] {
            order[i] = j;
            assigned[i] = true;
            taken[j] = true;
        }
    }
    order
}

impl Generator for TabulatedGenerator {
    fn dim(&self) -> usize {
        self.d
    }

    fn terms(&self, t: f64) -> LindbladTerms {
        let form = self.interpolated_form(t);
        let channels = form
            .channels(self.normalization)
            .into_iter()
            .map(|(rate, op)| Channel::new(rate, op))
            .collect();
        LindbladTerms::with_channels(form.hamiltonian, channels)
    }

    fn superoperator(&self, t: f64) -> Superoperator {
        let (k, s) = self.grid.locate(t);
        let k1 = (k + 1).min(self.grid.n);
        self.superops[k].clone() * (1.0 - s) + self.superops[k1].clone() * s
    }

    fn knots(&self) -> Vec<f64> {
        self.grid.times()
    }
}
