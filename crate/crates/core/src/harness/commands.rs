//! The five harness commands. Each returns in-memory results; writing
//! files is left to [`super::run`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{lindblad_ode_solve, GlobalPropagator, OdeOptions};
use crate::frames::{
    build_pauli_frame, decompose, expand_repreparation, recombine, reprepared_global_state, reprepared_state, BranchKey,
    EvolvedParts, Frame, KrausMap, OpdDecomposition, RepreparationMatrix,
};
use crate::generators::fixed_corr::{compatible_state_check, domain_volume, CorrelationOperator, COMPATIBILITY_TOL};
use crate::generators::Generator;
use crate::operator::{hermitian_eig_unchecked, partial_trace, trace_distance, BipartiteState, Keep, Operator, Sign};
use crate::random::random_density;
use crate::unravel::{derive_seed, run_ensemble, unravel_opd, Estimate, RunStats, UnravelConfig};

use super::config::{DomainSpec, ExperimentConfig, FrameKind, OracleKind, ReprepSpec};
use super::model::{branch_generators, build_state, fixed_correlations, to_interaction_picture, BoxedGenerator};
use super::table::{Metadata, ObservableSet, ResultTable};

/// Rates below this count as negative in generator summaries.

pub fn build_frame(cfg: &ExperimentConfig, d: usize) -> Frame {
    match cfg.frame.kind {
        FrameKind::Pauli => build_pauli_frame(d),
    }
}

fn kraus_map(spec: &ReprepSpec, d: usize) -> Result<KrausMap> {
    match spec {
        ReprepSpec::Bell { n, m } => Ok(KrausMap::bell(d, *n, *m)),
        ReprepSpec::ZeroDiscord { p } => {
            if p.len() != d {
                return Err(Error::Config(format!("zero-discord needs {d} weights, got {}", p.len())));
            }
            Ok(KrausMap::zero_discord(p))
        }
        ReprepSpec::Factorize => Ok(KrausMap::factorize(d)),
    }
}

fn output_times(u: &UnravelConfig) -> Vec<f64> {
    u.output_steps().iter().map(|&k| k as f64 * u.dt).collect()
}

fn ode_options(cfg: &ExperimentConfig) -> OdeOptions {
    OdeOptions { rel_tol: cfg.oracle.rel_tol, abs_tol: cfg.oracle.abs_tol, ..Default::default() }
}

fn alpha_label(frame: &Frame, alpha: usize) -> String {
    format!("alpha={}", frame.label(alpha))
}

fn reprep_label(spec: &ReprepSpec) -> String {
    format!("reprep={}", spec.label())
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    pub alpha: usize,
    pub label: String,
    pub weight: f64,
    pub env_spectrum: Vec<f64>,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// `max |mu+ Sigma+ - mu- Sigma- - Q_a|`.
    pub split_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeReport {
    pub metadata: Metadata,
    pub model: String,
    pub ds: usize,
    pub de: usize,
    pub frame_labels: Vec<String>,
    /// `max |tr[P_a Q_b] - delta_ab|`.
    pub duality_residual: f64,
    pub dual_min_eigenvalues: Vec<f64>,
    /// `max |rho_SE - sum w_a Q_a (x) rho_a|`.
    pub reconstruction_residual: f64,
    /// `max |tr_E rho_SE - sum w_a Q_a|`.
    pub reduced_residual: f64,
    pub dropped: Vec<usize>,
    pub branches: Vec<BranchReport>,
}

fn decomposition(cfg: &ExperimentConfig, state: &BipartiteState) -> Result<OpdDecomposition> {
    let frame = build_frame(cfg, state.ds());
    decompose(state, &frame, cfg.frame.positivity)
}

pub fn cmd_decompose(cfg: &ExperimentConfig) -> Result<DecomposeReport> {
    let state = build_state(cfg)?;
    let dec = decomposition(cfg, &state)?;
    let frame = &dec.frame;
    let branches = dec
        .branches
        .iter()
        .map(|b| BranchReport {
            alpha: b.alpha,
            label: frame.label(b.alpha).to_string(),
            weight: b.weight,
            env_spectrum: b.env_spectrum.clone(),
            mu_plus: b.split.mu_plus,
            mu_minus: b.split.mu_minus,
            split_residual: b.split.recombined(dec.ds).max_abs_diff(frame.element(b.alpha)),
        })
        .collect();
    Ok(DecomposeReport {
        metadata: Metadata::new(cfg.unravel.seed, cfg.hash()),
        model: cfg.model.name().into(),
        ds: dec.ds,
        de: dec.de,
        frame_labels: frame.labels().to_vec(),
        duality_residual: frame.duality_residual(),
        dual_min_eigenvalues: frame.dual_min_eigenvalues(),
        reconstruction_residual: dec.reconstruct().max_abs_diff(state.rho()),
        reduced_residual: dec.reduced_state().max_abs_diff(&partial_trace(&state, Keep::System)),
        dropped: dec.dropped.clone(),
        branches,
    })
}

/// Everything the simulate, exact and compare commands derive from a config.
pub struct Setup {
    pub state: BipartiteState,
    pub observables: ObservableSet,
    pub propagator: Option<GlobalPropagator>,
    pub pipeline: Pipeline,
    pub repreparations: Vec<(String, KrausMap)>,
    pub times: Vec<f64>,
}

pub enum Pipeline {
    Opd {
        decomposition: OpdDecomposition,
        generators: Vec<BoxedGenerator>,
        matrices: Vec<RepreparationMatrix>,
    },
    Fixed {
        rho_s: Operator,
        generator: Box<crate::generators::fixed_corr::FixedCorrelationsGenerator>,
    },
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, need_propagator: bool) -> Result<Self> {
        let state = build_state(cfg)?;
        let d = state.ds();
        let observables = ObservableSet::new(&cfg.observables, d)?;
        let needs_generators_propagator = matches!(
            cfg.model,
            super::config::ModelSpec::DephasingD4(_) | super::config::ModelSpec::FixedCorrelations(_)
        );
        let propagator = if need_propagator || needs_generators_propagator {
            cfg.model.propagator(cfg.oracle.cap)?
        } else {
            None
        };
        let repreparations = cfg
            .repreparations
            .iter()
            .map(|r| kraus_map(r, d).map(|k| (reprep_label(r), k)))
            .collect::<Result<Vec<_>>>()?;
        let pipeline = if cfg.model.uses_opd() {
            let decomposition = decomposition(cfg, &state)?;
            let generators = branch_generators(cfg, &decomposition, propagator.as_ref())?;
            let matrices = repreparations.iter().map(|(_, k)| expand_repreparation(k, &decomposition.frame)).collect();
            Pipeline::Opd { decomposition, generators, matrices }
        } else {
            if !repreparations.is_empty() {
                return Err(Error::Config("repreparations need an OPD-based model".into()));
            }
            let prop = propagator.as_ref().expect("fixed-correlations builds its propagator");
            let (rho_s, _, generator) = fixed_correlations(cfg, &state, prop)?;
            Pipeline::Fixed { rho_s, generator: Box::new(generator) }
        };
        Ok(Setup { state, observables, propagator, pipeline, repreparations, times: output_times(&cfg.unravel) })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub group: usize,
    pub element: usize,
    pub sign: Sign,
    pub n_traj: usize,
    pub stats: RunStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateReport {
    pub metadata: Metadata,
    pub model: String,
    pub method: String,
    pub times: Vec<f64>,
    pub runs: Vec<RunSummary>,
    /// Generator group of each OPD branch.
    pub groups: Vec<usize>,
    pub distinct_generators: usize,
    pub group_max_difference: f64,
}

pub struct SimulationOutput {
    pub table: ResultTable,
    pub report: SimulateReport,
    pub recombined: Estimate,
    /// `(label, estimate)` per repreparation.
    pub reprepared: Vec<(String, Estimate)>,
    /// `(label, estimate)` of `Phi^a[Q_a]` per branch.
    pub branch_maps: Vec<(String, Estimate)>,
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulationOutput> {
    let setup = Setup::new(cfg, false)?;
    simulate_with(cfg, &setup)
}

pub fn simulate_with(cfg: &ExperimentConfig, setup: &Setup) -> Result<SimulationOutput> {
    let mut ucfg = cfg.unravel.clone();
    ucfg.observables = setup.observables.operators().to_vec();
    let method = ucfg.method.name();
    let metadata = Metadata::new(ucfg.seed, cfg.hash());
    let mut table = ResultTable::new(metadata.clone());
    let mut report = SimulateReport {
        metadata,
        model: cfg.model.name().into(),
        method: method.into(),
        times: setup.times.clone(),
        runs: Vec::new(),
        groups: Vec::new(),
        distinct_generators: 1,
        group_max_difference: 0.0,
    };
    match &setup.pipeline {
        Pipeline::Opd { decomposition, generators, matrices } => {
            let gens: Vec<&dyn Generator> = generators.iter().map(|g| g.as_ref()).collect();
            let r = unravel_opd(decomposition, &gens, matrices, &ucfg)?;
            table.rows.extend(setup.observables.rows_from_estimate(&r.reduced, method, "recombined"));
            let branch_maps: Vec<(String, Estimate)> =
                r.branch_maps.iter().map(|(a, e)| (alpha_label(&decomposition.frame, *a), e.clone())).collect();
            for (label, e) in &branch_maps {
                table.rows.extend(setup.observables.rows_from_estimate(e, method, label));
            }
            let reprepared: Vec<(String, Estimate)> =
                setup.repreparations.iter().zip(&r.reprepared).map(|((l, _), e)| (l.clone(), e.clone())).collect();
            for (label, e) in &reprepared {
                table.rows.extend(setup.observables.rows_from_estimate(e, method, label));
            }
            report.runs = r
                .runs
                .iter()
                .map(|(k, e)| RunSummary { group: k.group, element: k.element, sign: k.sign, n_traj: e.n_traj, stats: e.stats.clone() })
                .collect();
            report.groups = r.groups.clone();
            report.distinct_generators = r.distinct_generators;
            report.group_max_difference = r.group_max_difference;
            Ok(SimulationOutput { table, report, recombined: r.reduced, reprepared, branch_maps })
        }
        Pipeline::Fixed { rho_s, generator } => {
            let r = run_ensemble(generator.as_ref(), rho_s, &ucfg)?;
            table.rows.extend(setup.observables.rows_from_estimate(&r.estimate, method, "recombined"));
            report.runs.push(RunSummary { group: 0, element: 0, sign: Sign::Plus, n_traj: r.n_traj, stats: r.stats });
            Ok(SimulationOutput { table, report, recombined: r.estimate, reprepared: Vec::new(), branch_maps: Vec::new() })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorSummary {
    pub branch: String,
    pub min_rate: f64,
    /// First step start with a rate the engines reject.
    pub first_negative_rate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactReport {
    pub metadata: Metadata,
    pub model: String,
    pub times: Vec<f64>,
    pub global: bool,
    pub interaction_picture: bool,
    pub generators: Vec<GeneratorSummary>,
    /// Largest global-vs-master-equation trace distance of the reduced state.
    pub max_global_me_distance: Option<f64>,
}

/// Reference time series: reduced state and reprepared outputs.
#[derive(Clone, Debug, Default)]
pub struct Reference {
    pub recombined: Vec<Operator>,
    pub reprepared: Vec<(String, Vec<Operator>)>,
    pub branch_maps: Vec<(String, Vec<Operator>)>,
}

pub struct ExactOutput {
    pub table: ResultTable,
    pub report: ExactReport,
    pub global: Option<Reference>,
    pub master_equation: Reference,
}

/// Exact reduced dynamics of the global state, in the generators' picture.
pub fn global_reference(cfg: &ExperimentConfig, setup: &Setup) -> Result<Reference> {
    let prop = setup
        .propagator
        .as_ref()
        .ok_or_else(|| Error::Config(format!("model {} has no global Hamiltonian", cfg.model.name())))?;
    let rot = cfg.model.interaction_hamiltonian();
    let reduce = |s: &BipartiteState, t: f64| {
        let r = partial_trace(&prop.evolve(s, t), Keep::System);
        match &rot {
            Some(h) => to_interaction_picture(&r, h, t),
            None => r,
        }
    };
    let series = |s: &BipartiteState| setup.times.iter().map(|&t| reduce(s, t)).collect::<Vec<_>>();
    let mut out = Reference { recombined: series(&setup.state), ..Default::default() };
    for (label, k) in &setup.repreparations {
        let s = reprepared_global_state(&setup.state, k)?;
        out.reprepared.push((label.clone(), series(&s)));
    }
    if let Pipeline::Opd { decomposition, .. } = &setup.pipeline {
        for b in &decomposition.branches {
            let q = decomposition.frame.element(b.alpha);
            let maps: Vec<Operator> = setup
                .times
                .iter()
                .map(|&t| {
                    let r = prop.reduced_map(&b.env_state, t).apply(q);
                    match &rot {
                        Some(h) => to_interaction_picture(&r, h, t),
                        None => r,
                    }
                })
                .collect();
            out.branch_maps.push((alpha_label(&decomposition.frame, b.alpha), maps));
        }
    }
    Ok(out)
}

/// Integration of the branch generators, recombined like the trajectories.
pub fn master_equation_reference(cfg: &ExperimentConfig, setup: &Setup) -> Result<Reference> {
    let opts = ode_options(cfg);
    let times = &setup.times;
    match &setup.pipeline {
        Pipeline::Fixed { rho_s, generator } => {
            Ok(Reference { recombined: lindblad_ode_solve(generator.as_ref(), rho_s, times, opts)?, ..Default::default() })
        }
        Pipeline::Opd { decomposition, generators, matrices } => {
            let mut keys: Vec<BranchKey> = decomposition.recombination_terms().into_iter().map(|(k, _)| k).collect();
            for m in matrices {
                keys.extend(m.required(decomposition)?);
            }
            keys.sort();
            keys.dedup();
            let index: std::collections::BTreeMap<usize, usize> =
                decomposition.branches.iter().enumerate().map(|(i, b)| (b.alpha, i)).collect();
            let solved: Vec<(BranchKey, Vec<Operator>)> = keys
                .par_iter()
                .map(|key| {
                    let gen = &generators[index[&key.alpha]];
                    let (_, sigma) = decomposition.splits[key.element].part(key.sign).ok_or(Error::MissingBranch(key.element))?;
                    lindblad_ode_solve(gen.as_ref(), sigma, times, opts).map(|s| (*key, s))
                })
                .collect::<Result<_>>()?;
            let parts: Vec<EvolvedParts> = (0..times.len())
                .map(|k| solved.iter().map(|(key, s)| (*key, s[k].clone())).collect())
                .collect();
            let mut out = Reference {
                recombined: parts.iter().map(|p| recombine(p, decomposition)).collect::<Result<_>>()?,
                ..Default::default()
            };
            for ((label, _), m) in setup.repreparations.iter().zip(matrices) {
                let s = parts.iter().map(|p| reprepared_state(p, decomposition, m)).collect::<Result<_>>()?;
                out.reprepared.push((label.clone(), s));
            }
            for b in &decomposition.branches {
                let maps = parts
                    .iter()
                    .map(|p| {
                        let mut acc = Operator::zeros(decomposition.ds);
                        for sign in [Sign::Plus, Sign::Minus] {
                            if let Some((mu, _)) = b.split.part(sign) {
                                acc += &p[&BranchKey::new(b.alpha, b.alpha, sign)] * (mu * sign.factor());
                            }
                        }
                        acc
                    })
                    .collect();
                out.branch_maps.push((alpha_label(&decomposition.frame, b.alpha), maps));
            }
            Ok(out)
        }
    }
}

fn generator_summaries(cfg: &ExperimentConfig, setup: &Setup) -> Vec<GeneratorSummary> {
    let dt = cfg.unravel.dt;
    let steps: Vec<f64> = (0..=cfg.unravel.n_steps()).map(|k| k as f64 * dt).collect();
    let summarize = |branch: String, gen: &dyn Generator| {
        let rates: Vec<(f64, f64)> = steps.par_iter().map(|&t| (t, gen.terms(t).min_rate())).collect();
        GeneratorSummary {
            branch,
            min_rate: rates.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
            first_negative_rate: rates.iter().find(|r| r.1 < -crate::unravel::RATE_TOL).map(|r| r.0),
        }
    };
    match &setup.pipeline {
        Pipeline::Opd { decomposition, generators, .. } => decomposition
            .branches
            .iter()
            .zip(generators)
            .map(|(b, g)| summarize(alpha_label(&decomposition.frame, b.alpha), g.as_ref()))
            .collect(),
        Pipeline::Fixed { generator, .. } => vec![summarize("recombined".into(), generator.as_ref())],
    }
}

fn reference_rows(set: &ObservableSet, times: &[f64], r: &Reference, method: &str, table: &mut ResultTable) {
    table.rows.extend(set.rows_from_states(times, &r.recombined, method, "recombined"));
    for (label, s) in &r.branch_maps {
        table.rows.extend(set.rows_from_states(times, s, method, label));
    }
    for (label, s) in &r.reprepared {
        table.rows.extend(set.rows_from_states(times, s, method, label));
    }
}

pub fn cmd_exact(cfg: &ExperimentConfig) -> Result<ExactOutput> {
    let setup = Setup::new(cfg, true)?;
    let global = if setup.propagator.is_some() { Some(global_reference(cfg, &setup)?) } else { None };
    let me = master_equation_reference(cfg, &setup)?;
    let metadata = Metadata::new(cfg.unravel.seed, cfg.hash());
    let mut table = ResultTable::new(metadata.clone());
    if let Some(g) = &global {
        reference_rows(&setup.observables, &setup.times, g, "global", &mut table);
    }
    reference_rows(&setup.observables, &setup.times, &me, "master-equation", &mut table);
    let max_global_me_distance = match &global {
        Some(g) => Some(
            g.recombined
                .iter()
                .zip(&me.recombined)
                .map(|(a, b)| trace_distance(a, b))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max),
        ),
        None => None,
    };
    let report = ExactReport {
        metadata,
        model: cfg.model.name().into(),
        times: setup.times.clone(),
        global: global.is_some(),
        interaction_picture: cfg.model.interaction_hamiltonian().is_some(),
        generators: generator_summaries(cfg, &setup),
        max_global_me_distance,
    };
    Ok(ExactOutput { table, report, global, master_equation: me })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareEntry {
    pub branch: String,
    pub t: f64,
    pub distance: f64,
    /// Trace-distance scale of the standard error.
    pub sigma: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub metadata: Metadata,
    pub model: String,
    pub method: String,
    pub oracle: OracleKind,
    pub threshold: f64,
    pub abs_tol: f64,
    pub pass: bool,
    pub flagged: usize,
    /// Largest `distance / sigma` over unflagged and flagged entries.
    pub max_ratio: f64,
    pub entries: Vec<CompareEntry>,
}

pub struct CompareOutput {
    pub report: CompareReport,
    pub simulation: SimulationOutput,
    pub reference: Reference,
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<CompareOutput> {
    let oracle = cfg.compare.oracle.unwrap_or_else(|| cfg.model.default_oracle());
    let setup = Setup::new(cfg, oracle == OracleKind::Global)?;
    let reference = match oracle {
        OracleKind::Global => global_reference(cfg, &setup)?,
        OracleKind::MasterEquation => master_equation_reference(cfg, &setup)?,
    };
    let simulation = simulate_with(cfg, &setup)?;
    let mut entries = Vec::new();
    let mut push = |branch: &str, est: &Estimate, exact: &[Operator]| -> Result<()> {
        for (k, rho) in exact.iter().enumerate() {
            let distance = trace_distance(&est.mean[k], rho)?;
            let sigma = est.trace_distance_sigma(k);
            let flagged = distance > cfg.compare.threshold * sigma + cfg.compare.abs_tol;
            entries.push(CompareEntry { branch: branch.into(), t: est.times[k], distance, sigma, flagged });
        }
        Ok(())
    };
    push("recombined", &simulation.recombined, &reference.recombined)?;
    for ((label, est), (_, exact)) in simulation.reprepared.iter().zip(&reference.reprepared) {
        push(label, est, exact)?;
    }
    let flagged = entries.iter().filter(|e| e.flagged).count();
    let max_ratio = entries
        .iter()
        .filter(|e| e.sigma > 0.0)
        .map(|e| e.distance / e.sigma)
        .fold(0.0, f64::max);
    let report = CompareReport {
        metadata: simulation.report.metadata.clone(),
        model: cfg.model.name().into(),
        method: cfg.unravel.method.name().into(),
        oracle,
        threshold: cfg.compare.threshold,
        abs_tol: cfg.compare.abs_tol,
        pass: flagged == 0,
        flagged,
        max_ratio,
        entries,
    };
    Ok(CompareOutput { report, simulation, reference })
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub lambda: f64,
    pub samples: usize,
    /// Samples compatible by the direct positivity scan.
    pub compatible: usize,
    /// Samples where the scan agrees with `rho - lambda/n >= 0`.
    pub agree: usize,
    pub identity_compatible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainReport {
    pub metadata: Metadata,
    pub lambda_family: Vec<LambdaReport>,
    /// Monte-Carlo fraction of Hilbert-Schmidt random states that are compatible.
    pub volume: Option<(f64, f64)>,
    /// Whether the configured reduced state is itself compatible.
    pub initial_state_compatible: Option<bool>,
    pub all_agree: bool,
}

/// Samples `samples` random states and compares the positivity scan with
/// the closed form for the lambda family.
pub fn lambda_scan(n: usize, lambda: f64, samples: usize, seed: u64) -> Result<LambdaReport> {
    let corr = CorrelationOperator::lambda_family(n, lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = Operator::identity(n) * (lambda / n as f64);
    let (mut compatible, mut agree) = (0, 0);
    for _ in 0..samples {
        let rho = random_density(n, &mut rng);
        let scan = compatible_state_check(&corr, &rho)?;
        let closed = hermitian_eig_unchecked(&(&rho - &shift)).values[0] >= -COMPATIBILITY_TOL;
        compatible += usize::from(scan);
        agree += usize::from(scan == closed);
    }
    let identity_compatible = compatible_state_check(&corr, &(Operator::identity(n) * (1.0 / n as f64)))?;
    Ok(LambdaReport { lambda, samples, compatible, agree, identity_compatible })
}

pub fn cmd_domain(cfg: &ExperimentConfig) -> Result<DomainReport> {
    let spec = cfg.domain.clone().unwrap_or(DomainSpec::FromState { samples: 10_000 });
    let seed = cfg.unravel.seed;
    let mut report = DomainReport {
        metadata: Metadata::new(seed, cfg.hash()),
        lambda_family: Vec::new(),
        volume: None,
        initial_state_compatible: None,
        all_agree: true,
    };
    match spec {
        DomainSpec::LambdaFamily { n, lambdas, samples } => {
            for (i, &lambda) in lambdas.iter().enumerate() {
                let r = lambda_scan(n, lambda, samples, derive_seed(seed, i as u64))?;
                report.all_agree &= r.agree == r.samples;
                report.lambda_family.push(r);
            }
        }
        DomainSpec::General { ds, env_state, chi, samples } => {
            let corr = CorrelationOperator::new(chi.to_operator()?, env_state.to_operator()?, ds)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            report.volume = Some(domain_volume(&corr, samples, &mut rng));
        }
        DomainSpec::FromState { samples } => {
            let state = build_state(cfg)?;
            let (rho_s, corr) = CorrelationOperator::from_state(&state);
            report.initial_state_compatible = Some(compatible_state_check(&corr, &rho_s)?);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            report.volume = Some(domain_volume(&corr, samples, &mut rng));
        }
    }
    Ok(report)
}
