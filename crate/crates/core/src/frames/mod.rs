//! Operator frames on the system space and their duals.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{c, pauli, Operator, C64, I};

mod opd;
mod reprep;

pub use opd::{decompose, recombine, BranchKey, EvolvedParts, OpdBranch, OpdDecomposition, Positivity};
pub use reprep::{
    expand_repreparation, reprepared_global_state, reprepared_state, KrausMap, RepreparationMatrix,
};

/// Frame `{Q_a}` with dual `{P_a}`, `tr[P_a Q_b] = delta_ab`.
#[derive(Clone, Debug)]
pub struct Frame {
    d: usize,
    elements: Vec<Operator>,
    dual: Vec<Operator>,
    labels: Vec<String>,
}

impl Frame {
    pub fn new(elements: Vec<Operator>, labels: Vec<String>) -> Result<Self> {
        let d = elements
            .first()
            .map(Operator::dim)
            .ok_or_else(|| Error::DimensionMismatch("empty frame".into()))?;
        assert_eq!(elements.len(), labels.len());
        let dual = build_dual_frame(&elements, &hermitian_basis(d))?;
        Ok(Frame { d, elements, dual, labels })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn dual(&self) -> &[Operator] {
        &self.dual
    }

    pub fn element(&self, alpha: usize) -> &Operator {
        &self.elements[alpha]
    }

    pub fn dual_element(&self, alpha: usize) -> &Operator {
        &self.dual[alpha]
    }

    pub fn label(&self, alpha: usize) -> &str {
        &self.labels[alpha]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `max |tr[P_a Q_b] - delta_ab|`.
    pub fn duality_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for (a, p) in self.dual.iter().enumerate() {
            for (b, q) in self.elements.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                r = r.max((p.trace_product(q) - c(target, 0.0)).norm());
            }
        }
        r
    }

    /// Smallest eigenvalue of each dual element.
    pub fn dual_min_eigenvalues(&self) -> Vec<f64> {
        self.dual
            .iter()
            .map(|p| crate::operator::hermitian_eig_unchecked(p).values[0])
            .collect()
    }

    /// Coefficients `tr[A P_a]` of `A = sum_a tr[A P_a] Q_a`.
    pub fn coefficients(&self, a: &Operator) -> Vec<C64> {
        self.dual.iter().map(|p| a.trace_product(p)).collect()
    }

    pub fn expand(&self, coeffs: &[C64]) -> Operator {
        let mut out = Operator::zeros(self.d);
        for (q, &k) in self.elements.iter().zip(coeffs) {
            out += q * k;
        }
        out
    }
}

/// Generalised Gell-Mann matrices, `tr[s^2] = 2`. For each column `j`
/// the symmetric and antisymmetric pairs `(i, j)`, `i < j`, come first,
/// then the diagonal element of level `j`.
pub fn gell_mann(d: usize) -> Vec<Operator> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 1..d {
        for i in 0..j {
            let mut s = Operator::zeros(d);
            s.matrix_mut()[(i, j)] = c(1.0, 0.0);
            s.matrix_mut()[(j, i)] = c(1.0, 0.0);
            out.push(s);
            let mut a = Operator::zeros(d);
            a.matrix_mut()[(i, j)] = -I;
            a.matrix_mut()[(j, i)] = I;
            out.push(a);
        }
        let norm = (2.0 / (j * (j + 1)) as f64).sqrt();
        let diag: Vec<f64> = (0..d)
            .map(|k| match k.cmp(&j) {
                std::cmp::Ordering::Less => norm,
                std::cmp::Ordering::Equal => -(j as f64) * norm,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        out.push(Operator::diagonal(&diag));
    }
    out
}

/// Traceless Pauli-type operators used by the frame in dimension `d`: the
/// qubit convention of [`pauli`] for `d = 2`, Gell-Mann matrices otherwise.
pub fn generalized_paulis(d: usize) -> Vec<Operator> {
    if d == 2 {
        pauli::all().to_vec()
    } else {
        gell_mann(d)
    }
}

/// Orthonormal traceless Hermitian operators, `tr[F_a F_b] = delta_ab`.
pub fn traceless_basis(d: usize) -> Vec<Operator> {
    let s = 1.0 / 2f64.sqrt();
    generalized_paulis(d).iter().map(|g| g * s).collect()
}

/// Normalised identity followed by [`traceless_basis`].
pub fn hermitian_basis(d: usize) -> Vec<Operator> {
    let mut out = vec![Operator::identity(d) * (1.0 / (d as f64).sqrt())];
    out.extend(traceless_basis(d));
    out
}

/// `Q_0 = 1/d - sum s_a / 2`, `Q_a = s_a / 2`.
pub fn build_pauli_frame(d: usize) -> Frame {
    assert!(d >= 2, "frame dimension must be at least 2");
    let paulis = generalized_paulis(d);
    let mut q0 = Operator::identity(d) * (1.0 / d as f64);
    for s in &paulis {
        q0 -= &(s * 0.5);
    }
    let mut elements = vec![q0];
    elements.extend(paulis.iter().map(|s| s * 0.5));
    let labels = if d == 2 {
        ["0", "x", "y", "z"].iter().map(|s| s.to_string()).collect()
    } else {
        (0..d * d).map(|a| a.to_string()).collect()
    };
    Frame::new(elements, labels).expect("generalised Pauli frame spans the operator space")
}

/// Dual via the inverse Gram matrix of the frame in `basis`: with
/// `T_ab = tr[Q_a G_b]`, `P_a = sum_b M_ab Q_b` and `M = (T T^T)^-1`.
pub fn build_dual_frame(elements: &[Operator], basis: &[Operator]) -> Result<Vec<Operator>> {
    let n = elements.len();
    let m = basis.len();
    let t = DMatrix::from_fn(n, m, |a, b| elements[a].trace_product(&basis[b]));
    let imag = t.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if imag > 1e-10 {
        return Err(Error::NotHermitian { deviation: imag });
    }
    let t = t.map(|z| z.re);
    let sv = t.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * smax.max(1e-300)).count();
    if rank < m || n != m {
        return Err(Error::SingularFrame { rank, required: m });
    }
    let gram = &t * t.transpose();
    let inv = gram
        .try_inverse()
        .ok_or(Error::SingularFrame { rank, required: m })?;
    Ok((0..n)
        .map(|a| {
            let mut p = Operator::zeros(elements[0].dim());
            for (b, q) in elements.iter().enumerate() {
                p += q * inv[(a, b)];
            }
            p.hermitian_part()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qubit_frame_duals() {
        let f = build_pauli_frame(2);
        let id = Operator::identity(2);
        assert!(f.dual_element(0).max_abs_diff(&id) < 1e-12);
        for (k, s) in pauli::all().iter().enumerate() {
            assert!(f.dual_element(k + 1).max_abs_diff(&(&id + s)) < 1e-12);
        }
        assert!((f.dual_element(1).trace_product(f.element(1)).re - 1.0).abs() < 1e-12);
        assert!(f.duality_residual() < 1e-12);
    }

    #[test]
    fn d4_frame_shape() {
        let f = build_pauli_frame(4);
        assert_eq!(f.len(), 16);
        let mut s = Operator::zeros(4);
        for q in f.elements() {
            s += q;
        }
        assert!(s.max_abs_diff(&(Operator::identity(4) * 0.25)) < 1e-14);
        let g = gell_mann(4);
        assert!(((&g[7] * &g[7]).trace().re - 2.0).abs() < 1e-14);
        assert!(((&g[14] * &g[14]).trace().re - 2.0).abs() < 1e-14);
        let s8 = Operator::diagonal(&[1.0, 1.0, -2.0, 0.0]) * (1.0 / 3f64.sqrt());
        assert!(g[7].max_abs_diff(&s8) < 1e-15);
        let s15 = Operator::diagonal(&[1.0, 1.0, 1.0, -3.0]) * (1.0 / 6f64.sqrt());
        assert!(g[14].max_abs_diff(&s15) < 1e-15);
    }

    #[test]
    fn d4_duals_are_not_all_positive() {
        let f = build_pauli_frame(4);
        let mins = f.dual_min_eigenvalues();
        assert!((mins[8] - (1.0 - 2.0 / 3f64.sqrt())).abs() < 1e-12);
        assert!((mins[15] - (1.0 - 3.0 / 6f64.sqrt())).abs() < 1e-12);
        assert!(mins.iter().enumerate().all(|(a, &m)| m >= -1e-12 || a == 8 || a == 15));
    }

    #[test]
    fn orthonormal_frame_is_self_dual() {
        let b = hermitian_basis(3);
        let dual = build_dual_frame(&b, &b).unwrap();
        for (p, q) in dual.iter().zip(&b) {
            assert!(p.max_abs_diff(q) < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_frame_is_rejected() {
        let mut els: Vec<Operator> = hermitian_basis(2);
        els[3] = els[2].clone();
        match build_dual_frame(&els, &hermitian_basis(2)) {
            Err(Error::SingularFrame { rank, required }) => {
                assert_eq!((rank, required), (3, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duality_in_small_dimensions() {
        for d in 2..=4 {
            assert!(build_pauli_frame(d).duality_residual() < 1e-10, "d = {d}");
        }
    }

    proptest! {
        #[test]
        fn frame_completeness(vals in prop::collection::vec(-1.0f64..1.0, 32), d in 2usize..5) {
            let f = build_pauli_frame(d);
            let a = Operator::from_fn(d, |i, j| c(vals[i * d + j], vals[16 + j * d + i])).hermitian_part();
            let back = f.expand(&f.coefficients(&a));
            prop_assert!(back.max_abs_diff(&a) < 1e-10);
        }
    }
}
