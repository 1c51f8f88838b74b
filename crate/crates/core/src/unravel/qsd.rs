//! Quantum state diffusion with complex Wiener increments, Euler-Maruyama
//! stepping and renormalisation after every step.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::operator::{c, Ket, C64};

use super::{normalize, StepData, Trajectory, RATE_TOL};

/// Normalisation of the nonlinear drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QsdConvention {
    /// `<L>* L - L^dag L / 2 - |<L>|^2 / 2`; the mean solves the Lindblad equation.
    #[default]
    NormPreserving,
    /// `<L>* L - L^dag L - |<L>|^2`, without the halves.
    AsPrinted,
}

/// Dissipative part of the deterministic increment per unit time.
pub fn drift_vector(psi: &Ket, step: &StepData, conv: QsdConvention) -> Result<Ket> {
    let half = match conv {
        QsdConvention::NormPreserving => 0.5,
        QsdConvention::AsPrinted => 1.0,
    };
    let mut out = Ket::zeros(psi.len());
    for (j, ch) in step.channels.iter().enumerate() {
        if ch.rate < -RATE_TOL {
            return Err(Error::MethodInapplicable { method: "qsd", channel: j, rate: ch.rate, time: step.t });
        }
        let g = ch.rate.max(0.0);
        if g == 0.0 {
            continue;
        }
        let l = ch.op.matrix() * psi;
        let mean = psi.dotc(&l);
        out += (l * mean.conj() - &step.ldl[j] * psi * c(half, 0.0) - psi * c(half * mean.norm_sqr(), 0.0)) * c(g, 0.0);
    }
    Ok(out)
}

/// Complex increment with independent real and imaginary parts of variance `dt / 2`.
pub fn wiener_increment<R: rand::Rng + ?Sized>(rng: &mut R, dt: f64) -> C64 {
    let s = (dt / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re * s, im * s)
}

pub fn step(traj: &mut Trajectory<'_>, step: &StepData, conv: QsdConvention) -> Result<()> {
    let dt = traj.table.dt;
    let psi = &traj.psi;
    // Hamiltonian part exactly over the step, the rest by Euler-Maruyama.
    let mut next = &step.unitary * psi + drift_vector(psi, step, conv)? * c(dt, 0.0);
    for ch in &step.channels {
        let g = ch.rate.max(0.0);
        let dw = wiener_increment(&mut traj.rng, dt);
        if g == 0.0 {
            continue;
        }
        let l = ch.op.matrix() * psi;
        let mean = psi.dotc(&l);
        next += (l - psi * mean) * (dw * g.sqrt());
    }
    normalize(&mut next);
    traj.psi = next;
    Ok(())
}
