//! Random operators and states for sampling checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{c, BipartiteState, Ket, Operator, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let qr = ginibre(d, d, rng).qr();
    let (q, r) = qr.unpack();
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let x = r[(i, i)];
            if x.norm() == 0.0 {
                c(1.0, 0.0)
            } else {
                x / x.norm()
            }
        } else {
            c(0.0, 0.0)
        }
    });
    Operator::from_matrix(q * phases)
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Ket {
    let v = Ket::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Density operator from the Hilbert-Schmidt measure.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = ginibre(d, d, rng);
    let rho = &g * g.adjoint();
    let t = rho.trace();
    Operator::from_matrix(rho / t).hermitian_part()
}

pub fn random_bipartite<R: Rng + ?Sized>(ds: usize, de: usize, rng: &mut R) -> BipartiteState {
    BipartiteState::from_parts_unchecked(random_density(ds * de, rng), ds, de)
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    Operator::from_matrix(ginibre(d, d, rng)).hermitian_part()
}
