//! Acceptance criteria 1 to 10. Runs without the libtest harness so that every
//! criterion prints one PASS or FAIL line. The process fails when an outcome
//! differs from `EXPECTED_FAIL`.

use std::time::Instant;

use opd_unravel::exact::{lindblad_ode_solve, OdeOptions};
use opd_unravel::frames::{build_pauli_frame, decompose, Positivity};
use opd_unravel::generators::two_qubit::{normalized_rates, TwoQubitModel};
use opd_unravel::generators::{decay_generator, operator_norm, Channel, ConstantGenerator, Generator, LindbladTerms, TimeGrid};
use opd_unravel::harness::commands::{global_reference, lambda_scan, master_equation_reference, simulate_with, Pipeline, Setup};
use opd_unravel::harness::{cmd_compare, cmd_exact, cmd_simulate, ExperimentConfig};
use opd_unravel::operator::{basis_ket, pauli, positive_negative_parts, trace_distance, Operator};
use opd_unravel::random::random_bipartite;
use opd_unravel::unravel::qsd::drift_vector;
use opd_unravel::unravel::{run_ensemble, Estimate, Method, QsdConvention, StepTable, UnravelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criteria whose FAIL is recorded as a known deviation.
const EXPECTED_FAIL: &[u8] = &[6];

const SIGMAS: f64 = 4.0;

struct Outcome {
    id: u8,
    pass: bool,
    detail: String,
}

type Check = opd_unravel::Result<(bool, String)>;

fn config(text: &str) -> ExperimentConfig {
    let cfg = ExperimentConfig::from_toml(text).expect("acceptance config parses");
    cfg.validate().expect("acceptance config validates");
    cfg
}

fn within(x: f64, target: f64, se: f64, floor: f64) -> bool {
    (x - target).abs() <= SIGMAS * se + floor
}

// 1
fn opd_round_trip() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for (ds, de) in [(2, 2), (2, 3), (4, 4)] {
        let frame = build_pauli_frame(ds);
        let policy = if ds == 2 { Positivity::Strict } else { Positivity::AllowQuasiStates };
        for _ in 0..100 {
            let s = random_bipartite(ds, de, &mut rng);
            let dec = decompose(&s, &frame, policy)?;
            worst = worst.max(operator_norm(&(dec.reconstruct() - s.rho())));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst < 1e-10 && secs < 10.0, format!("max residual {worst:.2e}, {secs:.2} s")))
}

// 2
fn frame_duality() -> Check {
    let mut duality: f64 = 0.0;
    let mut split: f64 = 0.0;
    for d in 2..=4 {
        let f = build_pauli_frame(d);
        duality = duality.max(f.duality_residual());
        for q in f.elements() {
            split = split.max(positive_negative_parts(q)?.recombined(d).max_abs_diff(q));
        }
    }
    let q0 = positive_negative_parts(build_pauli_frame(2).element(0))?;
    let s3 = 3f64.sqrt();
    let mu_err = (q0.mu_plus - (s3 + 1.0) / 2.0).abs().max((q0.mu_minus - (s3 - 1.0) / 2.0).abs());
    let pass = duality < 1e-10 && mu_err < 1e-12 && split < 1e-12;
    Ok((pass, format!("duality {duality:.1e}, mu_0 error {mu_err:.1e}, split {split:.1e}")))
}

// 3, plus the printed QSD drift for 9
fn decay_run(method: Method, conv: QsdConvention, n_traj: usize, seed: u64, threads: Option<usize>) -> opd_unravel::Result<Estimate> {
    let cfg = UnravelConfig {
        method,
        dt: 1e-3,
        t_max: 2.0,
        output_dt: 0.5,
        n_traj,
        seed,
        threads,
        qsd_convention: conv,
        ..Default::default()
    };
    Ok(run_ensemble(&decay_generator(1.0), &Operator::unit(2, 1, 1), &cfg)?.estimate)
}

fn decay_matches(est: &Estimate) -> (bool, f64) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let k = est.index_of(t);
        let (m, se, _) = est.element(k, 1, 1);
        let exact = (-t as f64).exp();
        ok &= within(m.re, exact, se, 0.0);
        worst = worst.max((m.re - exact).abs() / se);
    }
    (ok, worst)
}

fn engine_vs_analytic() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for method in [Method::Mcwf, Method::Ro, Method::Qsd] {
        let start = Instant::now();
        let est = decay_run(method, QsdConvention::NormPreserving, 10_000, 3, None)?;
        let secs = start.elapsed().as_secs_f64();
        let (ok, z) = decay_matches(&est);
        pass &= ok && secs < 60.0;
        parts.push(format!("{} max z {z:.2} in {secs:.1} s", method.name()));
    }
    Ok((pass, parts.join("; ")))
}

// 4
const DEPHASING: &str = r#"
[model]
name = "dephasing-d4"
d = 4
g = 0.5
[state]
preset = "maximally-entangled-d4"
[frame]
positivity = "allow-quasi-states"
[unravel]
method = "mcwf"
dt = 1e-3
output_dt = 0.1
n_traj = 1000
seed = 4
[[observables]]
kind = "element"
row = 0
col = 1
[compare]
oracle = "global"
"#;

fn dephasing_pipeline() -> Check {
    let mut probe = config(DEPHASING);
    probe.unravel.t_max = 2.5;
    let exact = cmd_exact(&probe)?;
    let window = exact
        .report
        .generators
        .iter()
        .filter_map(|g| g.first_negative_rate)
        .fold(probe.unravel.t_max, f64::min);
    let oracle = exact.global.as_ref().expect("dephasing has a global oracle");
    let populations = oracle
        .recombined
        .iter()
        .flat_map(|r| (0..4).map(move |i| (r.entry(i, i).re - 0.25).abs()))
        .fold(0.0, f64::max);
    let coherence: Vec<f64> = oracle.recombined.iter().map(|r| r.entry(0, 1).norm()).collect();
    let kpeak = (0..coherence.len()).max_by(|&a, &b| coherence[a].total_cmp(&coherence[b])).unwrap();

    let mut cfg = config(DEPHASING);
    cfg.unravel.t_max = (window * 10.0).floor() / 10.0;
    let out = cmd_compare(&cfg)?;
    let est = &out.simulation.recombined;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (k, rho) in out.reference.recombined.iter().enumerate() {
        let (m, se_re, se_im) = est.element(k, 0, 1);
        let exact = rho.entry(0, 1);
        ok &= within(m.re, exact.re, se_re, 1e-12) && within(m.im, exact.im, se_im, 1e-12);
        if se_re > 0.0 && se_im > 0.0 {
            worst = worst.max((m.re - exact.re).abs() / se_re).max((m.im - exact.im).abs() / se_im);
        }
    }
    let initial = oracle.recombined[0].entry(0, 1).norm();
    let pass = ok && populations < 1e-9 && initial < 1e-12;
    Ok((
        pass,
        format!(
            "CP window t < {window:.2}, run to {:.1}; max z {worst:.2}; populations off by {populations:.1e}; oracle coherence peaks at {:.3} at t = {:.1}",
            cfg.unravel.t_max, coherence[kpeak], exact.report.times[kpeak]
        ),
    ))
}

// 5
const JC: &str = r#"
[model]
name = "jc-single-mode"
omega0 = 1.0
omega = 0.1
g = 0.5
cutoff = 4
[state]
preset = "single-mode-entangled"
n0 = 1
n1 = 0
[unravel]
method = "nmqj"
dt = 1e-3
t_max = 5.0
output_dt = 0.25
n_traj = 10000
seed = 5
[[observables]]
kind = "expectation"
name = "sigma_z"
operator = "sigma-z"
[[repreparations]]
kind = "zero-discord"
p = [0.5, 0.5]
[[repreparations]]
kind = "zero-discord"
p = [0.9, 0.1]
[[repreparations]]
kind = "factorize"
"#;

fn expectation_agrees(est: &Estimate, exact: &[Operator], op: &Operator) -> (bool, f64) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (k, rho) in exact.iter().enumerate() {
        let x = op.trace_product(rho).re;
        let (m, se) = (est.expectations[k][0], est.se_expectations[k][0]);
        ok &= within(m, x, se, 1e-6);
        if se > 1e-6 {
            worst = worst.max((m - x).abs() / se);
        }
    }
    (ok, worst)
}

fn state_agrees(est: &Estimate, exact: &[Operator]) -> opd_unravel::Result<(bool, f64)> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (k, rho) in exact.iter().enumerate() {
        let d = trace_distance(&est.mean[k], rho)?;
        let s = est.trace_distance_sigma(k);
        ok &= d <= SIGMAS * s + 1e-6;
        if s > 1e-6 {
            worst = worst.max(d / s);
        }
    }
    Ok((ok, worst))
}

fn jc_single_mode() -> Check {
    let cfg = config(JC);
    let setup = Setup::new(&cfg, true)?;
    let me = master_equation_reference(&cfg, &setup)?;
    let global = global_reference(&cfg, &setup)?;
    let sim = simulate_with(&cfg, &setup)?;
    let sz = pauli::z();
    let mut pass = true;
    let mut branch_z: f64 = 0.0;
    for ((label, est), (_, exact)) in sim.branch_maps.iter().zip(&me.branch_maps) {
        let (ok, z) = expectation_agrees(est, exact, &sz);
        pass &= ok;
        branch_z = branch_z.max(z);
        if !ok {
            println!("    {label}: sigma_z off the master equation");
        }
    }
    let groups = &sim.report.groups;
    let dedup = sim.report.distinct_generators == 2
        && groups[0] == groups[1]
        && groups[1] == groups[2]
        && groups[3] != groups[0]
        && sim.report.group_max_difference == 0.0;
    pass &= dedup;
    let mut reprep_z: f64 = 0.0;
    let mut global_gap: f64 = 0.0;
    for (((label, est), (_, exact)), (_, direct)) in sim.reprepared.iter().zip(&me.reprepared).zip(&global.reprepared) {
        let (ok, z) = state_agrees(est, exact)?;
        pass &= ok;
        reprep_z = reprep_z.max(z);
        if !ok {
            println!("    {label}: reprepared state off the master equation");
        }
        for (a, b) in exact.iter().zip(direct) {
            global_gap = global_gap.max(trace_distance(a, b)?);
        }
    }
    Ok((
        pass,
        format!(
            "branch sigma_z max z {branch_z:.2}; {} distinct generators, groups {groups:?}, spread {:.1e}; repreparations max z {reprep_z:.2}; second-order vs exact unitary gap {global_gap:.3}",
            sim.report.distinct_generators, sim.report.group_max_difference
        ),
    ))
}

// 6
const TWO_QUBIT: &str = r#"
[model]
name = "two-qubit"
g = 1.0
omega1 = 1.0
omega2 = 1.0
omega = 1.0
mu = 1.0
cutoff = 8
[unravel]
method = "psi-ro"
dt = 1e-3
output_dt = 0.1
n_traj = 10000
seed = 6
[[observables]]
kind = "expectation"
name = "sigma_z"
operator = "sigma-z"
"#;

fn two_qubit() -> Check {
    let m = TwoQubitModel::default();
    let envs: Vec<Operator> = decompose(&m.initial_state(), &build_pauli_frame(2), Positivity::AllowQuasiStates)?
        .branches
        .iter()
        .map(|b| b.env_state.clone())
        .collect();

    let grid = TimeGrid::new(0.1, 2.0);
    let mut rate_err: f64 = 0.0;
    let mut gm_numeric = f64::NAN;
    for env in &envs[1..3] {
        let numeric = m.apo_numeric(env, grid, Default::default())?;
        for (k, t) in grid.times().into_iter().enumerate().skip(1) {
            let r = normalized_rates(&numeric.terms(t));
            let (gp, gm) = m.analytic_rates(t);
            let expect_p = t.sin() + 2.0 * (t / 2.0).sin();
            let expect_m = t.sin() - 2.0 * (t / 2.0).sin();
            rate_err = rate_err.max((r[0] - expect_m).abs()).max((r[1] - expect_p).abs());
            rate_err = rate_err.max((gp - expect_p).abs()).max((gm - expect_m).abs());
            if k == 1 {
                gm_numeric = r[0];
            }
        }
    }
    let rates_ok = rate_err < 1e-9;
    let gm_ok = (gm_numeric + 1.249e-4).abs() < 1e-7 && (m.analytic_rates(0.1).1 + 1.249e-4).abs() < 1e-7;

    let mu_grid = TimeGrid::new(0.25, 1.0);
    let mut mu_diff: f64 = 0.0;
    for env in &envs {
        let gens = [0.0, 1.0, 5.0]
            .iter()
            .map(|&mu| TwoQubitModel { mu, ..m }.apo_numeric(env, mu_grid, Default::default()))
            .collect::<opd_unravel::Result<Vec<_>>>()?;
        for k in 0..=mu_grid.n {
            for g in &gens[1..] {
                mu_diff = mu_diff.max(g.sample(k).superoperator.max_abs_diff(&gens[0].sample(k).superoperator));
            }
        }
    }
    let mu_ok = mu_diff < 1e-10;

    let mut full = config(TWO_QUBIT);
    full.unravel.t_max = 1.0;
    let completes = match cmd_simulate(&full) {
        Ok(out) => out.report.runs.iter().all(|r| r.stats.reverse_jumps == 0),
        Err(e) => {
            println!("    t_max = 1: {e}");
            false
        }
    };

    let mut short = config(TWO_QUBIT);
    short.unravel.t_max = 0.9;
    let cmp = cmd_compare(&short)?;
    let no_reverse = cmp.simulation.report.runs.iter().all(|r| r.stats.reverse_jumps == 0);
    let (z_ok, z) = expectation_agrees(&cmp.simulation.recombined, &cmp.reference.recombined, &pauli::z());
    let match_ok = cmp.report.pass && z_ok && no_reverse;

    let pass = rates_ok && gm_ok && mu_ok && completes && match_ok;
    Ok((
        pass,
        format!(
            "rates error {rate_err:.1e}; gamma_-(0.1) = {gm_numeric:.4e}; mu spread {mu_diff:.1e}; psi-ro completes to t = 1: {}; t <= 0.9 matches master equation (max z {z:.2}, trace max ratio {:.2}): {}",
            if completes { "yes" } else { "no" },
            cmp.report.max_ratio,
            if match_ok { "yes" } else { "no" }
        ),
    ))
}

// 7
const FIXED: &str = r#"
[model]
name = "fixed-correlations"
d = 4
g = 0.5
[generator]
dt = 0.005
[unravel]
t_max = 1.0
output_dt = 0.25
"#;

fn fixed_correlations() -> Check {
    let cfg = config(FIXED);
    let setup = Setup::new(&cfg, true)?;
    let Pipeline::Fixed { rho_s, generator } = &setup.pipeline else {
        unreachable!("fixed-correlations model builds a fixed pipeline")
    };
    let eta_sum = generator.max_eta_sum();
    let eta0 = generator.parts[1].min_eta();
    let times = [0.25, 0.5, 0.75, 1.0];
    let solved = lindblad_ode_solve(generator.as_ref(), rho_s, &times, OdeOptions::default())?;
    let direct = generator.evolve_direct(rho_s);
    let dt = generator.grid().dt;
    let mut gap: f64 = 0.0;
    for (r, &t) in solved.iter().zip(&times) {
        gap = gap.max(r.max_abs_diff(&direct[(t / dt).round() as usize]));
    }
    let pass = eta_sum < 1e-9 && eta0 < 0.0 && gap < 1e-6;
    Ok((pass, format!("max |sum eta| {eta_sum:.1e}; min eta(dt) {eta0:.4}; solved vs direct {gap:.1e}")))
}

// 8
fn compatible_domain() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, lambda) in [0.0, 0.25, 0.5, 1.0].into_iter().enumerate() {
        let r = lambda_scan(2, lambda, 10_000, 80 + i as u64)?;
        pass &= r.agree == r.samples;
        if lambda == 0.0 {
            pass &= r.compatible == r.samples;
        }
        if lambda == 1.0 {
            pass &= r.compatible == 0 && r.identity_compatible;
        }
        parts.push(format!("lambda {lambda}: {}/{} compatible, {} agree", r.compatible, r.samples, r.agree));
    }
    Ok((pass, parts.join("; ")))
}

// 9
fn qsd_convention() -> Check {
    let gen = ConstantGenerator(LindbladTerms::with_channels(Operator::zeros(2), vec![Channel::new(1.0, pauli::z())]));
    let table = StepTable::new(&gen, &UnravelConfig { method: Method::Qsd, dt: 1e-3, t_max: 1e-3, ..Default::default() });
    let psi = basis_ket(2, 0);
    let selected = drift_vector(&psi, &table.steps[0], QsdConvention::NormPreserving)?.norm();
    let printed = drift_vector(&psi, &table.steps[0], QsdConvention::AsPrinted)?.norm();
    let (mean_ok, z) = decay_matches(&decay_run(Method::Qsd, QsdConvention::NormPreserving, 10_000, 3, None)?);
    let (printed_mean_ok, zp) = decay_matches(&decay_run(Method::Qsd, QsdConvention::AsPrinted, 10_000, 3, None)?);
    let pass = mean_ok && selected < 1e-14 && printed > 1e-3;
    Ok((
        pass,
        format!(
            "selected: decay max z {z:.2}, eigenstate drift {selected:.1e}; printed: eigenstate drift {printed:.2} (fixed point fails), decay max z {zp:.1} ({})",
            if printed_mean_ok { "within 4 sigma" } else { "outside 4 sigma" }
        ),
    ))
}

// 10
const DETERMINISM: &str = r#"
[model]
name = "jc-single-mode"
[state]
preset = "single-mode-entangled"
n0 = 1
n1 = 0
[unravel]
method = "nmqj"
dt = 1e-3
t_max = 1.0
output_dt = 0.1
n_traj = 500
seed = 10
nmqj_replicas = 4
[[repreparations]]
kind = "factorize"
"#;

fn csv_bytes(cfg: &ExperimentConfig) -> opd_unravel::Result<Vec<u8>> {
    let mut buf = Vec::new();
    cmd_simulate(cfg)?.table.write_csv(&mut buf)?;
    Ok(buf)
}

fn determinism_and_scaling() -> Check {
    let n = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(2);
    let mut identical = true;
    for method in ["nmqj", "mcwf", "qsd", "ro"] {
        let mut cfg = config(DETERMINISM);
        cfg.unravel.method = method.parse()?;
        cfg.unravel.threads = Some(1);
        let one = csv_bytes(&cfg)?;
        cfg.unravel.threads = Some(n);
        identical &= one == csv_bytes(&cfg)?;
    }
    let a = decay_run(Method::Mcwf, QsdConvention::NormPreserving, 2_500, 11, None)?;
    let b = decay_run(Method::Mcwf, QsdConvention::NormPreserving, 10_000, 11, None)?;
    let mut ratios = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let k = a.index_of(t);
        ratios.push(b.element(k, 1, 1).1 / a.element(k, 1, 1).1);
    }
    let scaling = ratios.iter().all(|r| (r - 0.5).abs() <= 0.1);
    Ok((
        identical && scaling,
        format!(
            "CSV identical at 1 and {n} threads for nmqj, mcwf, qsd, ro: {identical}; SE ratio at 4n {:?}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    ))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Check); 10] = [
        (1, "OPD round trip", opd_round_trip),
        (2, "frame duality and split", frame_duality),
        (3, "engines vs analytic decay", engine_vs_analytic),
        (4, "dephasing d=4 pipeline", dephasing_pipeline),
        (5, "JC single mode", jc_single_mode),
        (6, "two-qubit model", two_qubit),
        (7, "fixed-correlations consistency", fixed_correlations),
        (8, "compatible-state domain", compatible_domain),
        (9, "QSD drift convention", qsd_convention),
        (10, "determinism and scaling", determinism_and_scaling),
    ];
    let mut outcomes = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name} [{:.1} s]: {detail}", start.elapsed().as_secs_f64());
        outcomes.push(Outcome { id, pass, detail });
    }
    let unexpected: Vec<&Outcome> = outcomes.iter().filter(|o| o.pass == EXPECTED_FAIL.contains(&o.id)).collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass; recorded failures {EXPECTED_FAIL:?}", outcomes.len());
    if !unexpected.is_empty() {
        for o in &unexpected {
            println!("unexpected outcome for criterion {}: {}", o.id, o.detail);
        }
        std::process::exit(1);
    }
}
