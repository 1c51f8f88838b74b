use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::{
    hermitian_eig_unchecked, partial_trace_op, positive_negative_parts,
    tensor_product, BipartiteState, Keep, Operator, PosNegSplit, Sign,
};

use super::Frame;

/// Frame elements whose unnormalised environment block is below this are dropped.
pub const WEIGHT_CUTOFF: f64 = 1e-12;
/// Environment-state eigenvalues below this fail a strict decomposition.
pub const EIGENVALUE_FLOOR: f64 = -1e-8;

/// What to do with environment states that come out non-positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Positivity {
    /// Fail below [`EIGENVALUE_FLOOR`], clamp small negative eigenvalues.
    #[default]
    Strict,
    /// Keep unit-trace Hermitian `rho_a` as they are and record their spectra.
    /// Needed for frames whose duals are not positive.
    AllowQuasiStates,
}

#[derive(Clone, Debug)]
pub struct OpdBranch {
    pub alpha: usize,
    pub weight: f64,
    pub env_state: Operator,
    pub env_spectrum: Vec<f64>,
    pub split: PosNegSplit,
}

impl OpdBranch {
    pub fn env_min_eigenvalue(&self) -> f64 {
        self.env_spectrum[0]
    }
}

/// `rho_SE = sum_a w_a Q_a (x) rho_a`.
#[derive(Clone, Debug)]
pub struct OpdDecomposition {
    pub frame: Frame,
    pub ds: usize,
    pub de: usize,
    pub branches: Vec<OpdBranch>,
    /// Frame elements that carry no weight.
    pub dropped: Vec<usize>,
    /// Split of every frame element, indexed by frame position.
    pub splits: Vec<PosNegSplit>,
}

impl OpdDecomposition {
    pub fn branch(&self, alpha: usize) -> Option<&OpdBranch> {
        self.branches.iter().find(|b| b.alpha == alpha)
    }

    pub fn reconstruct(&self) -> Operator {
        let mut out = Operator::zeros(self.ds * self.de);
        for b in &self.branches {
            out += tensor_product(self.frame.element(b.alpha), &b.env_state) * b.weight;
        }
        out
    }

    pub fn reduced_state(&self) -> Operator {
        let mut out = Operator::zeros(self.ds);
        for b in &self.branches {
            out += self.frame.element(b.alpha) * b.weight;
        }
        out
    }

    /// `(alpha, alpha, sign) -> w_a mu_a^sign * sign`.
    pub fn recombination_terms(&self) -> Vec<(BranchKey, f64)> {
        let mut out = Vec::new();
        for b in &self.branches {
            for sign in [Sign::Plus, Sign::Minus] {
                if let Some((mu, _)) = b.split.part(sign) {
                    out.push((BranchKey::new(b.alpha, b.alpha, sign), b.weight * mu * sign.factor()));
                }
            }
        }
        out
    }
}

/// Evolved split part `Phi^alpha[Sigma^sign_element]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct BranchKey {
    pub alpha: usize,
    pub element: usize,
    pub sign: Sign,
}

impl BranchKey {
    pub fn new(alpha: usize, element: usize, sign: Sign) -> Self {
        BranchKey { alpha, element, sign }
    }
}

/// Evolved split parts at one time.
pub type EvolvedParts = BTreeMap<BranchKey, Operator>;

pub fn decompose(state: &BipartiteState, frame: &Frame, policy: Positivity) -> Result<OpdDecomposition> {
    let (ds, de) = (state.ds(), state.de());
    if frame.dim() != ds {
        return Err(Error::DimensionMismatch(format!(
            "frame dimension {} does not match system dimension {}",
            frame.dim(),
            ds
        )));
    }
    let id_e = Operator::identity(de);
    let mut branches = Vec::new();
    let mut dropped = Vec::new();
    for (alpha, p) in frame.dual().iter().enumerate() {
        let lifted = tensor_product(p, &id_e) * state.rho();
        let block = partial_trace_op(&lifted, ds, de, Keep::Environment)?.hermitian_part();
        let weight = block.trace().re;
        if block.max_abs() < WEIGHT_CUTOFF {
            dropped.push(alpha);
            continue;
        }
        if weight.abs() < WEIGHT_CUTOFF {
            return Err(Error::Decomposition {
                alpha,
                reason: format!("vanishing weight {weight:.3e} with a non-zero environment block"),
            });
        }
        let rho = &block * (1.0 / weight);
        let e = hermitian_eig_unchecked(&rho);
        let min = e.values[0];
        let (env_state, env_spectrum) = match policy {
            Positivity::AllowQuasiStates => (rho, e.values),
            Positivity::Strict if weight < 0.0 => {
                return Err(Error::Decomposition {
                    alpha,
                    reason: format!("negative weight {weight:.6e}"),
                })
            }
            Positivity::Strict if min < EIGENVALUE_FLOOR => {
                return Err(Error::Decomposition {
                    alpha,
                    reason: format!("environment state has eigenvalue {min:.6e}"),
                })
            }
            Positivity::Strict if min < 0.0 => {
                let clamped: Vec<f64> = e.values.iter().map(|&l| l.max(0.0)).collect();
                let total: f64 = clamped.iter().sum();
                let spectrum: Vec<f64> = clamped.iter().map(|l| l / total).collect();
                let fixed = crate::operator::Eigen { values: spectrum.clone(), vectors: e.vectors };
                (fixed.reconstruct(), spectrum)
            }
            Positivity::Strict => (rho, e.values),
        };
        branches.push(OpdBranch {
            alpha,
            weight,
            env_state,
            env_spectrum,
            split: positive_negative_parts(frame.element(alpha))?,
        });
    }
    if !dropped.is_empty() {
        log::info!("decomposition dropped frame elements {dropped:?} with zero weight");
    }
    let splits = frame
        .elements()
        .iter()
        .map(positive_negative_parts)
        .collect::<Result<Vec<_>>>()?;
    Ok(OpdDecomposition {
        frame: frame.clone(),
        ds,
        de,
        branches,
        dropped,
        splits,
    })
}

/// `rho_S(t) = sum_a w_a (mu_a^+ Phi^a[Sigma_a^+] - mu_a^- Phi^a[Sigma_a^-])`.
pub fn recombine(evolved: &EvolvedParts, decomposition: &OpdDecomposition) -> Result<Operator> {
    let mut out = Operator::zeros(decomposition.ds);
    for (key, coeff) in decomposition.recombination_terms() {
        let part = evolved.get(&key).ok_or(Error::MissingBranch(key.alpha))?;
        out += part * coeff;
    }
    Ok(out.hermitian_part())
}
