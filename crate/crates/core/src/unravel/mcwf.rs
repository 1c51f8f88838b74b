//! Monte-Carlo wave function: no-jump evolution with `K = H - i Gamma / 2`
//! interrupted by jumps `L_j psi / ||L_j psi||`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::operator::Ket;

use super::{drift_step, normalize, StepData, Trajectory, RATE_TOL};

/// Jump probabilities `gamma_j ||L_j psi||^2 dt` and the unnormalised targets.
pub fn jump_probabilities(psi: &Ket, step: &StepData, dt: f64) -> Result<Vec<(f64, Ket)>> {
    step.channels
        .iter()
        .enumerate()
        .map(|(j, ch)| {
            if ch.rate < -RATE_TOL {
                return Err(Error::MethodInapplicable { method: "mcwf", channel: j, rate: ch.rate, time: step.t });
            }
            let l = ch.op.matrix() * psi;
            Ok((ch.rate.max(0.0) * l.norm_squared() * dt, l))
        })
        .collect()
}

pub fn step(traj: &mut Trajectory<'_>, step: &StepData) -> Result<()> {
    let dt = traj.table.dt;
    let probs = jump_probabilities(&traj.psi, step, dt)?;
    let total: f64 = probs.iter().map(|(p, _)| p).sum();
    if total > 1.0 {
        return Err(Error::StepTooLarge { time: step.t, probability: total });
    }
    let u: f64 = traj.rng.random();
    if u < total {
        let mut acc = 0.0;
        for (p, mut l) in probs {
            acc += p;
            if u < acc {
                normalize(&mut l);
                traj.psi = l;
                traj.stats.jumps += 1;
                return Ok(());
            }
        }
    }
    traj.psi = drift_step(&traj.psi, step);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{decay_generator, Generator};
    use crate::operator::{basis_ket, Operator};
    use crate::unravel::{run_ensemble, Method, StepTable, UnravelConfig};

    fn table(cfg: &UnravelConfig) -> StepTable {
        StepTable::new(&decay_generator(1.0), cfg)
    }

    #[test]
    fn jump_probability_of_excited_state() {
        let cfg = UnravelConfig { dt: 1e-3, t_max: 0.01, ..Default::default() };
        let t = table(&cfg);
        let p = jump_probabilities(&basis_ket(2, 1), &t.steps[0], 1e-3).unwrap();
        assert!((p[0].0 - 1e-3).abs() < 1e-15);
        let p = jump_probabilities(&basis_ket(2, 0), &t.steps[0], 1e-3).unwrap();
        assert_eq!(p[0].0, 0.0);
    }

    #[test]
    fn negative_rate_is_rejected() {
        let g = crate::generators::ConstantGenerator(crate::generators::LindbladTerms::with_channels(
            Operator::zeros(2),
            vec![crate::generators::Channel::new(-0.5, crate::operator::pauli::minus())],
        ));
        let cfg = UnravelConfig { method: Method::Mcwf, n_traj: 4, t_max: 0.01, dt: 1e-3, ..Default::default() };
        let r = run_ensemble(&g, &Operator::diagonal(&[0.0, 1.0]), &cfg);
        match r.map_err(|e| e.root().to_string()) {
            Err(msg) => assert!(msg.contains("channel 0") && msg.contains("mcwf"), "{msg}"),
            Ok(_) => panic!("expected failure"),
        }
    }

    #[test]
    fn first_order_generator_consistency() {
        // E[psi psi^dag] after one step reproduces L[psi psi^dag] up to O(dt).
        let gen = crate::generators::ConstantGenerator(crate::generators::LindbladTerms::with_channels(
            crate::operator::pauli::x() * 0.3,
            vec![crate::generators::Channel::new(0.8, crate::operator::pauli::minus())],
        ));
        let psi = crate::operator::normalized(&Ket::from_vec(vec![
            crate::operator::c(0.6, 0.0),
            crate::operator::c(0.0, 0.8),
        ]));
        let rho = Operator::projector(&psi);
        let exact = gen.terms(0.0).apply(&rho);
        let err = |dt: f64| {
            let cfg = UnravelConfig { dt, t_max: dt, ..Default::default() };
            let t = StepTable::new(&gen, &cfg);
            let s = &t.steps[0];
            let probs = jump_probabilities(&psi, s, dt).unwrap();
            let total: f64 = probs.iter().map(|(p, _)| p).sum();
            let mut mean = Operator::projector(&drift_step(&psi, s)) * (1.0 - total);
            for (p, l) in probs {
                if p > 0.0 {
                    mean += Operator::projector(&crate::operator::normalized(&l)) * p;
                }
            }
            ((mean - &rho) * (1.0 / dt) - &exact).max_abs()
        };
        let (a, b) = (err(1e-3), err(5e-4));
        assert!(a < 1e-2 && (a / b - 2.0).abs() < 0.1, "{a} {b}");
    }
}
