//! Unraveling of an operator-product decomposition: every needed split part
//! `Sigma^sign_element` is evolved once per distinct generator and the
//! reduced state, per-branch maps and repreparations are linear
//! combinations of those runs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frames::{BranchKey, OpdDecomposition, RepreparationMatrix};
use crate::generators::Generator;
use crate::operator::Sign;

use super::{derive_seed, with_threads, EnsembleResult, Estimate, StepTable, UnravelConfig};

/// Generators whose superoperators differ by at most this on every step are merged.
pub const DEDUP_TOL: f64 = 1e-12;

/// One ensemble run: split part `(element, sign)` under generator group `group`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct RunKey {
    pub group: usize,
    pub element: usize,
    pub sign: Sign,
}

impl RunKey {
    fn tag(&self) -> u64 {
        ((self.group as u64) << 32) | ((self.element as u64) << 1) | u64::from(self.sign == Sign::Minus)
    }
}

#[derive(Clone, Debug)]
pub struct OpdUnravelResult {
    /// Reduced system state.
    pub reduced: Estimate,
    /// `Phi^a[Q_a]` per branch, in decomposition order.
    pub branch_maps: Vec<(usize, Estimate)>,
    /// Normalised outputs of each requested repreparation.
    pub reprepared: Vec<Estimate>,
    pub runs: BTreeMap<RunKey, EnsembleResult>,
    /// Generator group of each branch, in decomposition order.
    pub groups: Vec<usize>,
    pub distinct_generators: usize,
    /// Largest superoperator difference between generators merged into one group.
    pub group_max_difference: f64,
}

fn sample_difference(a: &dyn Generator, b: &dyn Generator, times: &[f64]) -> f64 {
    times
        .iter()
        .map(|&t| a.superoperator(t).max_abs_diff(&b.superoperator(t)))
        .fold(0.0, f64::max)
}

/// Assigns each generator to the first earlier one it matches on `times`.
pub fn group_generators(gens: &[&dyn Generator], times: &[f64]) -> (Vec<usize>, usize, f64) {
    let mut reps: Vec<usize> = Vec::new();
    let mut groups = Vec::with_capacity(gens.len());
    let mut max_diff: f64 = 0.0;
    for (i, g) in gens.iter().enumerate() {
        let found = reps.iter().enumerate().find_map(|(grp, &r)| {
            let d = sample_difference(*g, gens[r], times);
            (d <= DEDUP_TOL).then_some((grp, d))
        });
        match found {
            Some((grp, d)) => {
                groups.push(grp);
                max_diff = max_diff.max(d);
            }
            None => {
                groups.push(reps.len());
                reps.push(i);
            }
        }
    }
    (groups, reps.len(), max_diff)
}

fn aggregate(terms: &[(BranchKey, f64)], groups: &BTreeMap<usize, usize>) -> Result<BTreeMap<RunKey, f64>> {
    let mut out = BTreeMap::new();
    for (key, coeff) in terms {
        let group = *groups.get(&key.alpha).ok_or(Error::MissingBranch(key.alpha))?;
        *out.entry(RunKey { group, element: key.element, sign: key.sign }).or_insert(0.0) += coeff;
    }
    Ok(out)
}

fn combine(runs: &BTreeMap<RunKey, EnsembleResult>, coeffs: &BTreeMap<RunKey, f64>) -> Result<Estimate> {
    let terms: Vec<(&Estimate, f64)> = coeffs.iter().map(|(k, &c)| (&runs[k].estimate, c)).collect();
    Estimate::combine(&terms)
}

/// Evolves `decomposition` with one generator per branch (decomposition order)
/// and evaluates the requested repreparations.
pub fn unravel_opd(
    decomposition: &OpdDecomposition,
    generators: &[&dyn Generator],
    repreparations: &[RepreparationMatrix],
    config: &UnravelConfig,
) -> Result<OpdUnravelResult> {
    config.validate()?;
    if generators.len() != decomposition.branches.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} generators for {} branches",
            generators.len(),
            decomposition.branches.len()
        )));
    }
    if let Some(g) = generators.iter().find(|g| g.dim() != decomposition.ds) {
        return Err(Error::DimensionMismatch(format!("generator dimension {} vs system {}", g.dim(), decomposition.ds)));
    }
    let step_times: Vec<f64> = (0..config.n_steps().max(1)).map(|k| k as f64 * config.dt).collect();
    let (groups, distinct, group_max_difference) = group_generators(generators, &step_times);
    let alpha_group: BTreeMap<usize, usize> =
        decomposition.branches.iter().zip(&groups).map(|(b, &g)| (b.alpha, g)).collect();

    let base = aggregate(&decomposition.recombination_terms(), &alpha_group)?;
    let mut branch_coeffs = Vec::new();
    for b in &decomposition.branches {
        let mut terms = Vec::new();
        for sign in [Sign::Plus, Sign::Minus] {
            if let Some((mu, _)) = b.split.part(sign) {
                terms.push((BranchKey::new(b.alpha, b.alpha, sign), mu * sign.factor()));
            }
        }
        branch_coeffs.push((b.alpha, aggregate(&terms, &alpha_group)?));
    }
    let mut reprep_coeffs = Vec::new();
    for r in repreparations {
        let (terms, norm) = r.terms(decomposition)?;
        let scaled: Vec<_> = terms.into_iter().map(|(k, c)| (k, c / norm)).collect();
        reprep_coeffs.push(aggregate(&scaled, &alpha_group)?);
    }

    let mut needed: Vec<RunKey> = base.keys().copied().collect();
    for (_, c) in &branch_coeffs {
        needed.extend(c.keys());
    }
    for c in &reprep_coeffs {
        needed.extend(c.keys());
    }
    needed.sort();
    needed.dedup();

    let mut group_rep = vec![usize::MAX; distinct];
    for (i, &g) in groups.iter().enumerate() {
        if group_rep[g] == usize::MAX {
            group_rep[g] = i;
        }
    }
    let runs = with_threads(config.threads, || -> Result<BTreeMap<RunKey, EnsembleResult>> {
        let mut runs = BTreeMap::new();
        for (g, &rep) in group_rep.iter().enumerate() {
            let keys: Vec<RunKey> = needed.iter().copied().filter(|k| k.group == g).collect();
            if keys.is_empty() {
                continue;
            }
            let table = StepTable::new(generators[rep], config);
            for key in keys {
                let (_, sigma) = decomposition.splits[key.element].part(key.sign).ok_or(Error::MissingBranch(key.element))?;
                let result = super::run_with_table(&table, sigma, config, derive_seed(config.seed, key.tag()))?;
                log::info!("run {key:?}: {} jumps, {} reverse", result.stats.jumps, result.stats.reverse_jumps);
                runs.insert(key, result);
            }
        }
        Ok(runs)
    })??;

    let reduced = combine(&runs, &base)?;
    let branch_maps = branch_coeffs
        .iter()
        .map(|(a, c)| combine(&runs, c).map(|e| (*a, e)))
        .collect::<Result<Vec<_>>>()?;
    let reprepared = reprep_coeffs.iter().map(|c| combine(&runs, c)).collect::<Result<Vec<_>>>()?;
    Ok(OpdUnravelResult { reduced, branch_maps, reprepared, runs, groups, distinct_generators: distinct, group_max_difference })
}
