//! Rate-operator unravelings. The jump term is applied to `|psi><psi|`
//! directly, so pair jumps `A X B^dag + B X A^dag` need no diagonal form.
//!
//! The state-dependent transformation adds `(|Phi><psi| + |psi><Phi|) / 2`
//! to the rate operator and `-i |Phi><psi| / 2` to `K`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::operator::{c, hermitian_eig_unchecked, Ket, Operator};

use super::{normalize, StepData, Trajectory};

/// Choice of `|Phi_psi> = C_psi |psi>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiRoPolicy {
    /// `Phi = 0`: the plain rate operator.
    Zero,
    /// Qubit only: `Phi` makes the rate operator diagonal in the computational
    /// basis, so jumps only reach `|0>` and `|1>`.
    #[default]
    ThreeState,
}

impl PsiRoPolicy {
    pub fn check_dim(self, d: usize) -> Result<()> {
        if self == PsiRoPolicy::ThreeState && d != 2 {
            return Err(Error::Config(format!("three-state policy needs a qubit, got dimension {d}")));
        }
        Ok(())
    }
}

/// `|Phi>` for the three-state policy given `J = J[|psi><psi|]`.
///
/// The off-diagonal part fixes `Phi` up to `x (psi_0 |0> - psi_1 |1>)` with
/// real `x`, which moves weight between the two diagonal rates. `x` zeroes
/// the rate of the basis state carrying the larger population.
pub fn three_state_phi(psi: &Ket, j: &Operator) -> Ket {
    let j01 = j.entry(0, 1);
    let (p0, p1) = (psi[0].norm_sqr(), psi[1].norm_sqr());
    let mut phi = Ket::from_vec(vec![-j01 * psi[1] * 2.0, -j01.conj() * psi[0] * 2.0]);
    let cross = 2.0 * (j01 * psi[1] * psi[0].conj()).re;
    let a0 = j.entry(0, 0).re - cross;
    let a1 = j.entry(1, 1).re - cross;
    let x = if p0 >= p1 { -a0 / p0 } else { a1 / p1 };
    phi[0] += psi[0] * x;
    phi[1] -= psi[1] * x;
    phi
}

/// Rate operator at `psi`, its `Phi`, and the jump targets with rates.
pub fn rate_operator(psi: &Ket, step: &StepData, policy: PsiRoPolicy) -> (Operator, Option<Ket>, Vec<(f64, Ket)>) {
    let proj = Operator::projector(psi);
    let j = step.terms.jump(&proj);
    match policy {
        PsiRoPolicy::Zero => {
            let e = hermitian_eig_unchecked(&j);
            let targets = e.values.iter().enumerate().map(|(k, &l)| (l, e.vector(k))).collect();
            (j, None, targets)
        }
        PsiRoPolicy::ThreeState => {
            let phi = three_state_phi(psi, &j);
            let r = &j + (Operator::ket_bra(&phi, psi) + Operator::ket_bra(psi, &phi)) * 0.5;
            let targets = (0..2).map(|k| (r.entry(k, k).re, crate::operator::basis_ket(2, k))).collect();
            (r, Some(phi), targets)
        }
    }
}

pub fn step(traj: &mut Trajectory<'_>, step: &StepData, policy: PsiRoPolicy, eigen_tol: f64) -> Result<()> {
    let dt = traj.table.dt;
    let (r, phi, targets) = rate_operator(&traj.psi, step, policy);
    let scale = r.max_abs().max(1.0);
    let lambda_min = targets.iter().map(|(l, _)| *l).fold(f64::INFINITY, f64::min);
    traj.stats.min_rate_eigenvalue = traj.stats.min_rate_eigenvalue.min(lambda_min);
    if lambda_min < -eigen_tol * scale {
        return Err(Error::PositiveUnravelingFailure { time: step.t, lambda_min });
    }
    let total: f64 = targets.iter().map(|(l, _)| l.max(0.0) * dt).sum();
    if total > 1.0 {
        return Err(Error::StepTooLarge { time: step.t, probability: total });
    }
    let u: f64 = traj.rng.random();
    if u < total {
        let mut acc = 0.0;
        for (l, v) in targets {
            acc += l.max(0.0) * dt;
            if u < acc {
                traj.psi = v;
                traj.stats.jumps += 1;
                return Ok(());
            }
        }
    }
    let mut next = &step.drift * &traj.psi;
    if let Some(phi) = phi {
        next -= phi * c(0.5 * dt, 0.0);
    }
    normalize(&mut next);
    traj.psi = next;
    Ok(())
}
