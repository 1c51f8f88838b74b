//! Non-Markovian quantum jumps. Each replica keeps a registry of distinct
//! states with occupation numbers and advances it in lockstep; channels with
//! negative rates move occupation back to the state a forward jump came from.

use nalgebra::DMatrix;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{c, Ket, Operator, C64};

use super::{
    drift_step, initial_ensemble, normalize, trajectory_rng, Estimate, EnsembleResult, RunStats, StepData, StepTable,
    UnravelConfig, RATE_TOL,
};

/// States with fidelity at least `1 - MERGE_TOL` are the same registry entry.
pub const MERGE_TOL: f64 = 1e-8;

/// Squared jump norms below this do not count as possible jumps.
const NORM_FLOOR: f64 = 1e-24;

#[derive(Clone, Debug)]
pub struct Entry {
    pub psi: Ket,
    pub count: u64,
}

/// One coupled ensemble.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub entries: Vec<Entry>,
}

enum Target {
    New(Ket),
    Existing(usize),
}

fn same_state(a: &Ket, b: &Ket) -> bool {
    a.dotc(b).norm_sqr() >= 1.0 - MERGE_TOL
}

impl Ensemble {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    fn find(&self, psi: &Ket) -> Option<usize> {
        self.entries.iter().position(|e| e.count > 0 && same_state(&e.psi, psi))
    }

    fn insert(&mut self, psi: Ket, count: u64) {
        if count == 0 {
            return;
        }
        match self.entries.iter().position(|e| same_state(&e.psi, &psi)) {
            Some(k) => self.entries[k].count += count,
            None => self.entries.push(Entry { psi, count }),
        }
    }

    pub fn density(&self) -> DMatrix<C64> {
        let d = self.entries[0].psi.len();
        let n = self.total() as f64;
        let mut rho = DMatrix::zeros(d, d);
        for e in &self.entries {
            rho += &e.psi * e.psi.adjoint() * c(e.count as f64 / n, 0.0);
        }
        rho
    }

    /// Advances the ensemble by one step of `step`.
    pub fn step<R: rand::Rng + ?Sized>(&mut self, step: &StepData, dt: f64, rng: &mut R, stats: &mut RunStats) -> Result<()> {
        let n_entries = self.entries.len();
        // Outgoing events per entry: (probability, target).
        let mut events: Vec<Vec<(f64, Target, bool)>> = (0..n_entries).map(|_| Vec::new()).collect();
        for (j, ch) in step.channels.iter().enumerate() {
            if ch.rate > RATE_TOL {
                for (i, e) in self.entries.iter().enumerate() {
                    let mut l = ch.op.matrix() * &e.psi;
                    let w = l.norm_squared();
                    if w > NORM_FLOOR {
                        normalize(&mut l);
                        events[i].push((ch.rate * w * dt, Target::New(l), false));
                    }
                }
            } else if ch.rate < -RATE_TOL {
                for (src, e) in self.entries.iter().enumerate() {
                    let mut l = ch.op.matrix() * &e.psi;
                    let w = l.norm_squared();
                    if w <= NORM_FLOOR {
                        continue;
                    }
                    normalize(&mut l);
                    let i = self.find(&l).ok_or_else(|| Error::ReverseJumpFailure {
                        time: step.t,
                        detail: format!(
                            "channel {j} (rate {:.6e}) needs the jumped state of entry {src} but it is not occupied; source state {:?}",
                            ch.rate,
                            e.psi.as_slice()
                        ),
                    })?;
                    let p = e.count as f64 / self.entries[i].count as f64 * ch.rate.abs() * w * dt;
                    events[i].push((p, Target::Existing(src), true));
                }
            }
        }
        let mut next = Ensemble { entries: Vec::with_capacity(n_entries) };
        let mut stay = vec![0u64; n_entries];
        let mut arrivals = vec![0u64; n_entries];
        let mut new_states = Vec::new();
        for (i, ev) in events.into_iter().enumerate() {
            let total: f64 = ev.iter().map(|(p, _, _)| p).sum();
            if total > 1.0 {
                return Err(Error::StepTooLarge { time: step.t, probability: total });
            }
            let mut left = self.entries[i].count;
            let mut mass = 1.0;
            for (p, target, reverse) in ev {
                if left == 0 {
                    break;
                }
                let q = (p / mass).clamp(0.0, 1.0);
                let k = Binomial::new(left, q).map_err(|e| Error::InvalidState(e.to_string()))?.sample(rng);
                left -= k;
                mass -= p;
                if k == 0 {
                    continue;
                }
                if reverse {
                    stats.reverse_jumps += k;
                } else {
                    stats.jumps += k;
                }
                match target {
                    Target::New(psi) => new_states.push((psi, k)),
                    Target::Existing(src) => arrivals[src] += k,
                }
            }
            stay[i] = left;
        }
        for (i, e) in self.entries.iter().enumerate() {
            let count = stay[i] + arrivals[i];
            if count > 0 {
                next.insert(drift_step(&e.psi, step), count);
            }
        }
        for (psi, k) in new_states {
            next.insert(psi, k);
        }
        stats.max_distinct_states = stats.max_distinct_states.max(next.entries.len());
        *self = next;
        Ok(())
    }
}

struct ReplicaRun {
    means: Vec<DMatrix<C64>>,
    kept: Vec<Vec<Ket>>,
    stats: RunStats,
    size: usize,
}

fn run_replica(table: &StepTable, initial: &Operator, config: &UnravelConfig, seed: u64, r: usize, size: usize) -> Result<ReplicaRun> {
    let outputs = config.output_steps();
    let mut ens = Ensemble {
        entries: initial_ensemble(initial, size, config.sampling, super::derive_seed(seed, r as u64))?
            .into_iter()
            .map(|(psi, n)| Entry { psi, count: n as u64 })
            .collect(),
    };
    let mut rng = trajectory_rng(seed, r);
    let mut stats = RunStats { min_rate_eigenvalue: f64::INFINITY, max_distinct_states: ens.entries.len(), ..Default::default() };
    let mut means = Vec::with_capacity(outputs.len());
    let mut kept = Vec::new();
    let mut next = 0;
    for step_idx in 0..=table.steps.len() {
        if step_idx > 0 {
            ens.step(&table.steps[step_idx - 1], table.dt, &mut rng, &mut stats)?;
            debug_assert_eq!(ens.total(), size as u64);
        }
        if next < outputs.len() && outputs[next] == step_idx {
            means.push(ens.density());
            kept.push(ens.entries.iter().map(|e| e.psi.clone()).collect());
            next += 1;
        }
    }
    Ok(ReplicaRun { means, kept, stats, size })
}

/// Runs `config.nmqj_replicas` independent ensembles of `config.n_traj`
/// members each and combines them by batch means.
pub fn run(table: &StepTable, initial: &Operator, config: &UnravelConfig, seed: u64) -> Result<EnsembleResult> {
    let sizes = vec![config.n_traj; config.nmqj_replicas];
    let runs: Vec<Result<ReplicaRun>> = sizes
        .par_iter()
        .enumerate()
        .map(|(r, &size)| {
            run_replica(table, initial, config, seed, r, size).map_err(|e| Error::Trajectory { trajectory: r, source: Box::new(e) })
        })
        .collect();
    let runs: Vec<ReplicaRun> = runs.into_iter().collect::<Result<_>>()?;
    let outputs = config.output_steps();
    let times: Vec<f64> = outputs.iter().map(|&k| k as f64 * config.dt).collect();
    let n = (config.n_traj * runs.len()) as f64;
    let reps = runs.len() as f64;
    let d = table.dim;
    let mut est = Estimate { times, ..Default::default() };
    for k in 0..outputs.len() {
        let mut mean = DMatrix::<C64>::zeros(d, d);
        for run in &runs {
            mean += &run.means[k] * c(run.size as f64 / n, 0.0);
        }
        let mut sq_re = DMatrix::<f64>::zeros(d, d);
        let mut sq_im = DMatrix::<f64>::zeros(d, d);
        for run in &runs {
            let diff = &run.means[k] - &mean;
            sq_re += diff.map(|z| z.re * z.re);
            sq_im += diff.map(|z| z.im * z.im);
        }
        let scale = 1.0 / (reps * (reps - 1.0));
        est.se_re.push(sq_re.map(|s| (s * scale).sqrt()));
        est.se_im.push(sq_im.map(|s| (s * scale).sqrt()));
        let mut obs_mean = Vec::with_capacity(config.observables.len());
        let mut obs_se = Vec::with_capacity(config.observables.len());
        for op in &config.observables {
            let values: Vec<f64> = runs.iter().map(|run| (op.matrix() * &run.means[k]).trace().re).collect();
            let m: f64 = runs.iter().zip(&values).map(|(run, v)| v * run.size as f64 / n).sum();
            let sq: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
            obs_mean.push(m);
            obs_se.push((sq / (reps * (reps - 1.0))).sqrt());
        }
        est.expectations.push(obs_mean);
        est.se_expectations.push(obs_se);
        est.mean.push(Operator::from_matrix(mean).hermitian_part());
    }
    let mut stats = RunStats { min_rate_eigenvalue: f64::INFINITY, ..Default::default() };
    for run in &runs {
        stats.merge(&run.stats);
    }
    stats.stability = table.stability;
    let trajectories = runs.iter().take(config.keep_trajectories).map(|r| r.kept.iter().flatten().cloned().collect()).collect();
    Ok(EnsembleResult { method: config.method, n_traj: config.n_traj * runs.len(), estimate: est, trajectories, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Channel, ConstantGenerator, FnGenerator, Generator, LindbladTerms};
    use crate::operator::{basis_ket, pauli};
    use crate::unravel::{run_ensemble, Method};

    fn table<G: Generator>(gen: &G, dt: f64, t_max: f64) -> StepTable {
        StepTable::new(gen, &UnravelConfig { method: Method::Nmqj, dt, t_max, ..Default::default() })
    }

    #[test]
    fn occupation_is_conserved() {
        // Rate of sigma_- changes sign at t = 0.3.
        let gen = FnGenerator::new(2, |t: f64| {
            LindbladTerms::with_channels(
                Operator::zeros(2),
                vec![Channel::new(2.0 * (0.3 - t), pauli::minus()), Channel::new(0.5, pauli::plus())],
            )
        });
        let t = table(&gen, 0.01, 0.45);
        let mut ens = Ensemble { entries: vec![Entry { psi: basis_ket(2, 1), count: 500 }] };
        let mut rng = trajectory_rng(1, 0);
        let mut stats = RunStats::default();
        for s in &t.steps {
            ens.step(s, t.dt, &mut rng, &mut stats).unwrap();
            assert_eq!(ens.total(), 500);
            assert!(ens.entries.iter().all(|e| (e.psi.norm() - 1.0).abs() < 1e-9));
        }
        assert!(stats.reverse_jumps > 0);
        assert!(ens.entries.len() <= 2);
    }

    #[test]
    fn reverse_jump_without_source_fails() {
        let gen = ConstantGenerator(LindbladTerms::with_channels(Operator::zeros(2), vec![Channel::new(-0.5, pauli::minus())]));
        let t = table(&gen, 0.01, 0.01);
        let mut ens = Ensemble { entries: vec![Entry { psi: basis_ket(2, 1), count: 10 }] };
        let err = ens.step(&t.steps[0], t.dt, &mut trajectory_rng(0, 0), &mut RunStats::default()).unwrap_err();
        assert!(matches!(err, Error::ReverseJumpFailure { .. }));
        // Nothing to undo when no state can be reached by the channel.
        let mut ground = Ensemble { entries: vec![Entry { psi: basis_ket(2, 0), count: 10 }] };
        ground.step(&t.steps[0], t.dt, &mut trajectory_rng(0, 0), &mut RunStats::default()).unwrap();
        assert_eq!(ground.entries[0].count, 10);
    }

    #[test]
    fn reverse_probability_scales_with_source_occupation() {
        let gen = ConstantGenerator(LindbladTerms::with_channels(Operator::zeros(2), vec![Channel::new(-1.0, pauli::minus())]));
        let t = table(&gen, 0.01, 0.01);
        // N_1 = 100 excited, N_0 = 400 ground: p = (100/400) * 1 * 1 * 0.01 per ground member.
        let mut moved = 0;
        let trials = 400;
        for s in 0..trials {
            let mut ens = Ensemble {
                entries: vec![Entry { psi: basis_ket(2, 1), count: 100 }, Entry { psi: basis_ket(2, 0), count: 400 }],
            };
            ens.step(&t.steps[0], t.dt, &mut trajectory_rng(s, 0), &mut RunStats::default()).unwrap();
            moved += ens.entries[0].count - 100;
        }
        let mean = moved as f64 / trials as f64;
        let expect = 400.0 * 0.25 * 0.01;
        let sd = (expect * (1.0 - 0.0025) / trials as f64).sqrt();
        assert!((mean - expect).abs() < 5.0 * sd, "{mean} vs {expect}");
    }

    #[test]
    fn matches_lindblad_for_sign_changing_rate() {
        // gamma(t) = 1 - 1.5 t: population p(t) = exp(-(t - 0.75 t^2)).
        let gen = FnGenerator::new(2, |t: f64| {
            LindbladTerms::with_channels(Operator::zeros(2), vec![Channel::new(1.0 - 1.5 * t, pauli::minus())])
        });
        let rho = Operator::diagonal(&[0.0, 1.0]);
        let cfg = UnravelConfig { method: Method::Nmqj, n_traj: 4000, dt: 1e-3, t_max: 1.0, output_dt: 0.25, seed: 3, ..Default::default() };
        let r = run_ensemble(&gen, &rho, &cfg).unwrap();
        assert!(r.stats.reverse_jumps > 0);
        for (k, &t) in r.estimate.times.iter().enumerate() {
            let (p, se, _) = r.estimate.element(k, 1, 1);
            let exact = (-(t - 0.75 * t * t)).exp();
            assert!((p.re - exact).abs() < 4.0 * se + 2e-3, "t = {t}: {} vs {exact} (se {se})", p.re);
        }
    }
}
