//! Stochastic pure-state unravelings of time-dependent Lindblad dynamics.
//!
//! Independent-trajectory methods (MCWF, RO, Psi-RO, QSD) run in parallel
//! with one random stream per trajectory; NMQJ advances coupled ensembles in
//! lockstep and estimates errors by batch means over replicas.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{Channel, Generator, LindbladTerms};
use crate::operator::{c, hermitian_eig, trace_distance_sigma, Ket, Operator, C64, I};

pub mod mcwf;
pub mod nmqj;
pub mod opd;
pub mod qsd;
pub mod ro;

pub use opd::{unravel_opd, OpdUnravelResult, RunKey};
pub use qsd::QsdConvention;
pub use ro::PsiRoPolicy;

/// Rates above `-RATE_TOL` are treated as zero when a method needs them non-negative.
pub const RATE_TOL: f64 = 1e-12;

/// `dt * sum_j |gamma_j| ||L_j||^2` above this triggers a warning.
pub const STABILITY_WARN: f64 = 0.1;

/// Trajectories per parallel work unit. Fixed so that reductions do not
/// depend on the thread count.
const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mcwf,
    Nmqj,
    Ro,
    PsiRo,
    Qsd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mcwf => "mcwf",
            Method::Nmqj => "nmqj",
            Method::Ro => "ro",
            Method::PsiRo => "psi-ro",
            Method::Qsd => "qsd",
        }
    }

    fn needs_channels(self) -> bool {
        matches!(self, Method::Mcwf | Method::Nmqj | Method::Qsd)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcwf" => Ok(Method::Mcwf),
            "nmqj" => Ok(Method::Nmqj),
            "ro" => Ok(Method::Ro),
            "psi-ro" => Ok(Method::PsiRo),
            "qsd" => Ok(Method::Qsd),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

/// How trajectories are distributed over the eigenstates of a mixed initial state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSampling {
    #[default]
    LargestRemainder,
    Multinomial,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnravelConfig {
    pub method: Method,
    pub dt: f64,
    pub t_max: f64,
    /// Spacing of recorded times; rounded to a multiple of `dt`.
    pub output_dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub qsd_convention: QsdConvention,
    pub psi_ro_policy: PsiRoPolicy,
    pub sampling: InitialSampling,
    /// Number of individual trajectories whose states are stored.
    pub keep_trajectories: usize,
    /// Independent ensembles used for NMQJ batch means; each has `n_traj` members.
    pub nmqj_replicas: usize,
    /// Rate-operator eigenvalues above `-eigen_tol` count as non-negative.
    pub eigen_tol: f64,
    /// Hermitian operators whose expectation values are averaged per trajectory.
    #[serde(skip)]
    pub observables: Vec<Operator>,
}

impl Default for UnravelConfig {
    fn default() -> Self {
        UnravelConfig {
            method: Method::Mcwf,
            dt: 1e-3,
            t_max: 1.0,
            output_dt: 0.05,
            n_traj: 1000,
            seed: 0,
            threads: None,
            qsd_convention: QsdConvention::default(),
            psi_ro_policy: PsiRoPolicy::default(),
            sampling: InitialSampling::default(),
            keep_trajectories: 0,
            nmqj_replicas: 20,
            eigen_tol: 1e-9,
            observables: Vec::new(),
        }
    }
}

impl UnravelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be non-negative, got {}", self.t_max)));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be positive".into()));
        }
        if self.method == Method::Nmqj && self.nmqj_replicas < 2 {
            return Err(Error::Config(format!("nmqj needs at least 2 replicas, got {}", self.nmqj_replicas)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn stride(&self) -> usize {
        ((self.output_dt / self.dt).round() as usize).max(1)
    }

    /// Step indices at which the ensemble is recorded.
    pub fn output_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let stride = self.stride();
        let mut out: Vec<usize> = (0..=n).step_by(stride).collect();
        if *out.last().expect("non-empty") != n {
            out.push(n);
        }
        out
    }
}

/// Generator data at the start of one step, shared by all trajectories.
#[derive(Clone, Debug)]
pub struct StepData {
    pub t: f64,
    pub terms: LindbladTerms,
    /// `K = H - i Gamma / 2`.
    pub k_eff: Operator,
    /// `exp(-i K dt)` with `K` at the step midpoint.
    pub drift: DMatrix<C64>,
    /// `exp(-i H dt)` with `H` at the step midpoint.
    pub unitary: DMatrix<C64>,
    /// Diagonal channels, only for methods that need them.
    pub channels: Vec<Channel>,
    /// `L_j^dag L_j` per channel.
    pub ldl: Vec<DMatrix<C64>>,
}

#[derive(Clone, Debug)]
pub struct StepTable {
    pub dt: f64,
    pub dim: usize,
    pub steps: Vec<StepData>,
    /// `dt * max_t sum_j |gamma_j| ||L_j||^2`.
    pub stability: f64,
}

impl StepTable {
    pub fn new<G: Generator + ?Sized>(gen: &G, config: &UnravelConfig) -> Self {
        let dt = config.dt;
        let d = gen.dim();
        let with_channels = config.method.needs_channels();
        let steps: Vec<StepData> = (0..config.n_steps())
            .into_par_iter()
            .map(|k| {
                let t = k as f64 * dt;
                let terms = gen.terms(t);
                let k_eff = terms.effective_hamiltonian();
                let mid = gen.terms(t + dt / 2.0);
                let drift = (mid.effective_hamiltonian().matrix() * (-I * dt)).exp();
                let unitary = (mid.hamiltonian.matrix() * (-I * dt)).exp();
                let channels = if with_channels { terms.channel_form() } else { Vec::new() };
                let ldl = channels.iter().map(|ch| ch.op.matrix().adjoint() * ch.op.matrix()).collect();
                StepData { t, terms, k_eff, drift, unitary, channels, ldl }
            })
            .collect();
        let stability = steps.iter().map(|s| s.terms.rate_scale()).fold(0.0, f64::max) * dt;
        if stability > STABILITY_WARN {
            log::warn!("dt * max rate = {stability:.3} exceeds {STABILITY_WARN}; first-order stepping is inaccurate");
        }
        StepTable { dt, dim: d, steps, stability }
    }
}

/// Mean density operator and element-wise standard errors on the output times.
#[derive(Clone, Debug, Default)]
pub struct Estimate {
    pub times: Vec<f64>,
    pub mean: Vec<Operator>,
    pub se_re: Vec<DMatrix<f64>>,
    pub se_im: Vec<DMatrix<f64>>,
    /// `<O_o>` per output time and observable.
    pub expectations: Vec<Vec<f64>>,
    pub se_expectations: Vec<Vec<f64>>,
}

impl Estimate {
    /// `sum_k c_k E_k` with independent errors added in quadrature.
    pub fn combine(terms: &[(&Estimate, f64)]) -> Result<Estimate> {
        let (first, _) = terms.first().ok_or_else(|| Error::Config("nothing to combine".into()))?;
        let n = first.times.len();
        let d = first.mean[0].dim();
        let mut out = Estimate {
            times: first.times.clone(),
            mean: vec![Operator::zeros(d); n],
            se_re: vec![DMatrix::zeros(d, d); n],
            se_im: vec![DMatrix::zeros(d, d); n],
            expectations: first.expectations.iter().map(|v| vec![0.0; v.len()]).collect(),
            se_expectations: first.expectations.iter().map(|v| vec![0.0; v.len()]).collect(),
        };
        for (e, w) in terms {
            if e.times.len() != n || e.expectations.len() != out.expectations.len() {
                return Err(Error::DimensionMismatch("estimates on different time grids".into()));
            }
            for k in 0..n {
                out.mean[k] += &e.mean[k] * *w;
                out.se_re[k] += e.se_re[k].map(|s| (w * s).powi(2));
                out.se_im[k] += e.se_im[k].map(|s| (w * s).powi(2));
            }
            for (k, (m, s)) in e.expectations.iter().zip(&e.se_expectations).enumerate() {
                for o in 0..m.len().min(out.expectations[k].len()) {
                    out.expectations[k][o] += w * m[o];
                    out.se_expectations[k][o] += (w * s[o]).powi(2);
                }
            }
        }
        for k in 0..n {
            out.se_re[k] = out.se_re[k].map(f64::sqrt);
            out.se_im[k] = out.se_im[k].map(f64::sqrt);
        }
        for s in out.se_expectations.iter_mut().flatten() {
            *s = s.sqrt();
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Estimate {
        Estimate {
            times: self.times.clone(),
            mean: self.mean.iter().map(|m| m * s).collect(),
            se_re: self.se_re.iter().map(|e| e * s.abs()).collect(),
            se_im: self.se_im.iter().map(|e| e * s.abs()).collect(),
            expectations: self.expectations.iter().map(|v| v.iter().map(|x| x * s).collect()).collect(),
            se_expectations: self.se_expectations.iter().map(|v| v.iter().map(|x| x * s.abs()).collect()).collect(),
        }
    }

    /// `(mean, se of real part, se of imaginary part)` of `<i|rho|j>` at output `k`.
    pub fn element(&self, k: usize, i: usize, j: usize) -> (C64, f64, f64) {
        (self.mean[k].entry(i, j), self.se_re[k][(i, j)], self.se_im[k][(i, j)])
    }

    /// Modulus-combined element errors.
    pub fn se(&self, k: usize) -> DMatrix<f64> {
        self.se_re[k].zip_map(&self.se_im[k], |a, b| a.hypot(b))
    }

    /// Trace-distance scale of the statistical error at output `k`.
    pub fn trace_distance_sigma(&self, k: usize) -> f64 {
        trace_distance_sigma(&self.se(k))
    }

    /// Index of the output time closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct RunStats {
    pub jumps: u64,
    pub reverse_jumps: u64,
    /// Largest number of distinct states in an NMQJ ensemble.
    pub max_distinct_states: usize,
    /// Smallest rate-operator eigenvalue met (RO methods).
    pub min_rate_eigenvalue: f64,
    pub stability: f64,
}

impl RunStats {
    fn merge(&mut self, other: &RunStats) {
        self.jumps += other.jumps;
        self.reverse_jumps += other.reverse_jumps;
        self.max_distinct_states = self.max_distinct_states.max(other.max_distinct_states);
        self.min_rate_eigenvalue = self.min_rate_eigenvalue.min(other.min_rate_eigenvalue);
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub method: Method,
    pub n_traj: usize,
    pub estimate: Estimate,
    /// States of the first `keep_trajectories` trajectories on the output times.
    pub trajectories: Vec<Vec<Ket>>,
    pub stats: RunStats,
}

/// Per-trajectory state on which a method acts.
pub struct Trajectory<'a> {
    pub index: usize,
    pub psi: Ket,
    pub rng: ChaCha8Rng,
    pub table: &'a StepTable,
    pub stats: RunStats,
}

/// Counter-based stream for trajectory `index` of run `seed`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Seed for a sub-run tagged by `tag`, independent of the parent streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(u64::MAX);
    rng.random()
}

/// Eigen-decomposition of the initial state with trajectory counts per eigenvector.
pub fn initial_ensemble(rho: &Operator, n: usize, sampling: InitialSampling, seed: u64) -> Result<Vec<(Ket, usize)>> {
    if (rho.trace().re - 1.0).abs() > 1e-9 || rho.trace().im.abs() > 1e-9 {
        return Err(Error::InvalidState(format!("trace {} is not one", rho.trace())));
    }
    let e = hermitian_eig(rho)?;
    if e.values[0] < -1e-9 {
        return Err(Error::InvalidState(format!("eigenvalue {:.3e} is negative", e.values[0])));
    }
    let p: Vec<f64> = e.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let counts = match sampling {
        InitialSampling::LargestRemainder => {
            let raw: Vec<f64> = p.iter().map(|x| x * n as f64).collect();
            let mut counts: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
            let mut rest = n - counts.iter().sum::<usize>();
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(p[b].total_cmp(&p[a])));
            for k in order {
                if rest == 0 {
                    break;
                }
                counts[k] += 1;
                rest -= 1;
            }
            counts
        }
        InitialSampling::Multinomial => {
            let mut rng = trajectory_rng(derive_seed(seed, 0x5a4d), 0);
            let dist = WeightedIndex::new(&p).map_err(|e| Error::InvalidState(e.to_string()))?;
            let mut counts = vec![0; p.len()];
            for _ in 0..n {
                counts[dist.sample(&mut rng)] += 1;
            }
            counts
        }
    };
    Ok((0..p.len()).rev().map(|k| (e.vector(k), counts[k])).filter(|(_, n)| *n > 0).collect())
}

/// Initial state of every trajectory index.
fn assign_initial(ensemble: &[(Ket, usize)]) -> Vec<&Ket> {
    ensemble.iter().flat_map(|(psi, n)| std::iter::repeat_n(psi, *n)).collect()
}

pub(crate) fn normalize(psi: &mut Ket) -> f64 {
    let n = psi.norm();
    *psi /= c(n, 0.0);
    n
}

pub(crate) fn drift_step(psi: &Ket, step: &StepData) -> Ket {
    let mut out = &step.drift * psi;
    normalize(&mut out);
    out
}

/// Runs `f` on a pool with `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

struct Accumulator {
    sum: Vec<DMatrix<C64>>,
    sq_re: Vec<DMatrix<f64>>,
    sq_im: Vec<DMatrix<f64>>,
    obs_sum: Vec<Vec<f64>>,
    obs_sq: Vec<Vec<f64>>,
    kept: Vec<(usize, Vec<Ket>)>,
    stats: RunStats,
}

impl Accumulator {
    fn new(n_out: usize, d: usize, n_obs: usize) -> Self {
        Accumulator {
            sum: vec![DMatrix::zeros(d, d); n_out],
            sq_re: vec![DMatrix::zeros(d, d); n_out],
            sq_im: vec![DMatrix::zeros(d, d); n_out],
            obs_sum: vec![vec![0.0; n_obs]; n_out],
            obs_sq: vec![vec![0.0; n_obs]; n_out],
            kept: Vec::new(),
            stats: RunStats { min_rate_eigenvalue: f64::INFINITY, ..Default::default() },
        }
    }

    fn add(&mut self, k: usize, psi: &Ket, observables: &[Operator]) {
        for (o, op) in observables.iter().enumerate() {
            let v = op.expectation(psi).re;
            self.obs_sum[k][o] += v;
            self.obs_sq[k][o] += v * v;
        }
        let p = psi * psi.adjoint();
        self.sq_re[k] += p.map(|z| z.re * z.re);
        self.sq_im[k] += p.map(|z| z.im * z.im);
        self.sum[k] += p;
    }

    fn merge(&mut self, other: Accumulator) {
        for k in 0..self.sum.len() {
            self.sum[k] += &other.sum[k];
            self.sq_re[k] += &other.sq_re[k];
            self.sq_im[k] += &other.sq_im[k];
            for o in 0..self.obs_sum[k].len() {
                self.obs_sum[k][o] += other.obs_sum[k][o];
                self.obs_sq[k][o] += other.obs_sq[k][o];
            }
        }
        self.kept.extend(other.kept);
        self.stats.merge(&other.stats);
    }

    fn finish(self, times: Vec<f64>, n: usize) -> (Estimate, Vec<Vec<Ket>>, RunStats) {
        let nf = n as f64;
        let mut est = Estimate { times, ..Default::default() };
        for k in 0..self.sum.len() {
            let mean = &self.sum[k] / c(nf, 0.0);
            let se = |sq: &DMatrix<f64>, part: fn(&C64) -> f64| {
                DMatrix::from_fn(mean.nrows(), mean.ncols(), |i, j| {
                    let m = part(&mean[(i, j)]);
                    if n < 2 {
                        return 0.0;
                    }
                    let var = ((sq[(i, j)] - nf * m * m) / (nf - 1.0)).max(0.0);
                    (var / nf).sqrt()
                })
            };
            est.se_re.push(se(&self.sq_re[k], |z| z.re));
            est.se_im.push(se(&self.sq_im[k], |z| z.im));
            est.mean.push(Operator::from_matrix(mean).hermitian_part());
            let (m, e): (Vec<f64>, Vec<f64>) = self.obs_sum[k]
                .iter()
                .zip(&self.obs_sq[k])
                .map(|(&s, &q)| {
                    let m = s / nf;
                    let e = if n < 2 { 0.0 } else { (((q - nf * m * m) / (nf - 1.0)).max(0.0) / nf).sqrt() };
                    (m, e)
                })
                .unzip();
            est.expectations.push(m);
            est.se_expectations.push(e);
        }
        let mut kept = self.kept;
        kept.sort_by_key(|(i, _)| *i);
        (est, kept.into_iter().map(|(_, v)| v).collect(), self.stats)
    }
}

/// Averages trajectories of `gen` started from the mixed state `initial`.
pub fn run_ensemble<G: Generator + ?Sized>(gen: &G, initial: &Operator, config: &UnravelConfig) -> Result<EnsembleResult> {
    config.validate()?;
    if initial.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state dimension {} vs generator {}",
            initial.dim(),
            gen.dim()
        )));
    }
    with_threads(config.threads, || {
        let table = StepTable::new(gen, config);
        run_with_table(&table, initial, config, config.seed)
    })?
}

/// As [`run_ensemble`] with a precomputed step table and explicit seed.
pub fn run_with_table(table: &StepTable, initial: &Operator, config: &UnravelConfig, seed: u64) -> Result<EnsembleResult> {
    if config.method == Method::PsiRo {
        config.psi_ro_policy.check_dim(table.dim)?;
    }
    if config.method == Method::Nmqj {
        return nmqj::run(table, initial, config, seed);
    }
    let ensemble = initial_ensemble(initial, config.n_traj, config.sampling, seed)?;
    let starts = assign_initial(&ensemble);
    let outputs = config.output_steps();
    let times: Vec<f64> = outputs.iter().map(|&k| k as f64 * config.dt).collect();
    let d = table.dim;
    let n = starts.len();
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let partials: Vec<Result<Accumulator>> = chunks
        .par_iter()
        .map(|&ci| {
            let mut acc = Accumulator::new(outputs.len(), d, config.observables.len());
            for index in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
                let mut traj = Trajectory {
                    index,
                    psi: starts[index].clone(),
                    rng: trajectory_rng(seed, index),
                    table,
                    stats: RunStats { min_rate_eigenvalue: f64::INFINITY, ..Default::default() },
                };
                let keep = index < config.keep_trajectories;
                let mut kept = Vec::new();
                let mut next = 0;
                for (step_idx, step) in std::iter::once(None).chain(table.steps.iter().map(Some)).enumerate() {
                    if let Some(step) = step {
                        let r = match config.method {
                            Method::Mcwf => mcwf::step(&mut traj, step),
                            Method::Ro | Method::PsiRo => {
                                let policy = if config.method == Method::Ro { PsiRoPolicy::Zero } else { config.psi_ro_policy };
                                ro::step(&mut traj, step, policy, config.eigen_tol)
                            }
                            Method::Qsd => qsd::step(&mut traj, step, config.qsd_convention),
                            Method::Nmqj => unreachable!(),
                        };
                        r.map_err(|e| Error::Trajectory { trajectory: index, source: Box::new(e) })?;
                    }
                    if next < outputs.len() && outputs[next] == step_idx {
                        acc.add(next, &traj.psi, &config.observables);
                        if keep {
                            kept.push(traj.psi.clone());
                        }
                        next += 1;
                    }
                }
                if keep {
                    acc.kept.push((index, kept));
                }
                acc.stats.merge(&traj.stats);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::new(outputs.len(), d, config.observables.len());
    for p in partials {
        total.merge(p?);
    }
    let (estimate, trajectories, mut stats) = total.finish(times, n);
    stats.stability = table.stability;
    Ok(EnsembleResult { method: config.method, n_traj: n, estimate, trajectories, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{decay_generator, ConstantGenerator};
    use crate::operator::pauli;

    #[test]
    fn largest_remainder_counts() {
        let rho = Operator::diagonal(&[0.25, 0.75]);
        let e = initial_ensemble(&rho, 10, InitialSampling::LargestRemainder, 0).unwrap();
        let counts: Vec<usize> = e.iter().map(|(_, n)| *n).collect();
        assert_eq!(counts, vec![8, 2]);
        let m = initial_ensemble(&rho, 1000, InitialSampling::Multinomial, 3).unwrap();
        assert_eq!(m.iter().map(|(_, n)| n).sum::<usize>(), 1000);
    }

    #[test]
    fn rejects_non_states() {
        let bad = Operator::diagonal(&[1.2, -0.2]);
        assert!(matches!(initial_ensemble(&bad, 10, Default::default(), 0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn zero_generator_keeps_pure_state() {
        let gen = ConstantGenerator(LindbladTerms::zero(2));
        let rho = Operator::diagonal(&[0.0, 1.0]);
        for method in [Method::Mcwf, Method::Ro, Method::Qsd, Method::Nmqj] {
            let cfg = UnravelConfig { method, n_traj: 40, t_max: 0.1, dt: 0.01, ..Default::default() };
            let r = run_ensemble(&gen, &rho, &cfg).unwrap();
            for m in &r.estimate.mean {
                assert!(m.max_abs_diff(&rho) < 1e-12, "{method:?}");
            }
        }
    }

    #[test]
    fn output_grid() {
        let cfg = UnravelConfig { dt: 0.01, t_max: 0.25, output_dt: 0.1, ..Default::default() };
        assert_eq!(cfg.output_steps(), vec![0, 10, 20, 25]);
    }

    #[test]
    fn deterministic_across_threads() {
        let gen = decay_generator(1.0);
        let rho = Operator::diagonal(&[0.0, 1.0]);
        for method in [Method::Mcwf, Method::Qsd, Method::Nmqj] {
            let base = UnravelConfig { method, n_traj: 300, t_max: 0.5, dt: 0.01, seed: 9, ..Default::default() };
            let a = run_ensemble(&gen, &rho, &UnravelConfig { threads: Some(1), ..base.clone() }).unwrap();
            let b = run_ensemble(&gen, &rho, &UnravelConfig { threads: Some(4), ..base }).unwrap();
            for (x, y) in a.estimate.mean.iter().zip(&b.estimate.mean) {
                assert_eq!(x.matrix(), y.matrix());
            }
        }
    }

    #[test]
    fn unital_fixed_point() {
        let gen = ConstantGenerator(LindbladTerms::with_channels(
            Operator::zeros(2),
            vec![Channel::new(0.7, pauli::z()), Channel::new(0.3, pauli::x())],
        ));
        let rho = Operator::identity(2) * 0.5;
        let cfg = UnravelConfig { method: Method::Mcwf, n_traj: 2000, t_max: 1.0, dt: 0.01, ..Default::default() };
        let r = run_ensemble(&gen, &rho, &cfg).unwrap();
        let k = r.estimate.times.len() - 1;
        let (p, se, _) = r.estimate.element(k, 1, 1);
        assert!((p.re - 0.5).abs() < 4.0 * se.max(1e-3));
    }

    #[test]
    fn observable_errors_follow_populations() {
        // sigma_z = 2 |1><1| - 1 on every trajectory, so its error is twice the population error.
        let gen = decay_generator(1.0);
        let rho = Operator::diagonal(&[0.0, 1.0]);
        for method in [Method::Mcwf, Method::Nmqj] {
            let cfg = UnravelConfig { method, n_traj: 500, t_max: 0.5, dt: 0.01, observables: vec![pauli::z()], ..Default::default() };
            let r = run_ensemble(&gen, &rho, &cfg).unwrap();
            for k in 0..r.estimate.times.len() {
                let (p, se, _) = r.estimate.element(k, 1, 1);
                assert!((r.estimate.expectations[k][0] - (2.0 * p.re - 1.0)).abs() < 1e-12);
                assert!((r.estimate.se_expectations[k][0] - 2.0 * se).abs() < 1e-9, "{method:?}");
            }
        }
    }
}
