use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{c, tensor_product, BipartiteState, Operator, Sign, C64};

use super::{BranchKey, EvolvedParts, Frame, OpdDecomposition};

/// Completely positive map in operator-sum form, `R[X] = sum_k A_k X A_k^dag`.
#[derive(Clone, Debug)]
pub struct KrausMap {
    pub ops: Vec<Operator>,
}

impl KrausMap {
    pub fn new(ops: Vec<Operator>) -> Self {
        assert!(!ops.is_empty());
        KrausMap { ops }
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn identity(d: usize) -> Self {
        KrausMap::new(vec![Operator::identity(d)])
    }

    /// `|k> -> exp(2 pi i k n / d) |k + m mod d>`.
    pub fn bell(d: usize, n: usize, m: usize) -> Self {
        let mut v = Operator::zeros(d);
        for k in 0..d {
            let phase = 2.0 * std::f64::consts::PI * (k * n) as f64 / d as f64;
            v.matrix_mut()[((k + m) % d, k)] = C64::from_polar(1.0, phase);
        }
        KrausMap::new(vec![v])
    }

    /// `R[X] = sum_k p_k <k|X|k> |k><k|`.
    pub fn zero_discord(p: &[f64]) -> Self {
        let d = p.len();
        KrausMap::new(
            p.iter()
                .enumerate()
                .map(|(k, &pk)| Operator::unit(d, k, k) * pk.sqrt())
                .collect(),
        )
    }

    /// `R[X] = tr[X] 1/d`.
    pub fn factorize(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let mut ops = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                ops.push(Operator::unit(d, i, j) * s);
            }
        }
        KrausMap::new(ops)
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        let mut out = Operator::zeros(x.dim());
        for a in &self.ops {
            out += a * x * a.adjoint();
        }
        out
    }
}

/// `R[Q_a] = sum_b R_ab Q_b`.
#[derive(Clone, Debug)]
pub struct RepreparationMatrix {
    pub entries: DMatrix<f64>,
    /// `tr R[Q_a]`.
    pub norm_weights: Vec<f64>,
    /// Largest deviation of the expansion from `R[Q_a]`.
    pub residual: f64,
}

pub fn expand_repreparation(r_map: &KrausMap, frame: &Frame) -> RepreparationMatrix {
    let n = frame.len();
    let mut entries = DMatrix::zeros(n, n);
    let mut norm_weights = Vec::with_capacity(n);
    let mut residual: f64 = 0.0;
    for a in 0..n {
        let image = r_map.apply(frame.element(a));
        norm_weights.push(image.trace().re);
        let coeffs = frame.coefficients(&image);
        for (b, k) in coeffs.iter().enumerate() {
            entries[(a, b)] = k.re;
        }
        let back = frame.expand(&coeffs.iter().map(|k| c(k.re, 0.0)).collect::<Vec<_>>());
        residual = residual.max(back.max_abs_diff(&image));
    }
    RepreparationMatrix { entries, norm_weights, residual }
}

/// Matrix-element threshold below which repreparation terms are skipped.
pub const REPREP_CUTOFF: f64 = 1e-12;

impl RepreparationMatrix {
    /// Linear coefficients on evolved split parts and the normalisation.
    pub fn terms(&self, decomposition: &OpdDecomposition) -> Result<(Vec<(BranchKey, f64)>, f64)> {
        let mut terms = Vec::new();
        let mut norm = 0.0;
        for b in &decomposition.branches {
            norm += b.weight * self.norm_weights[b.alpha];
            for (e, split) in decomposition.splits.iter().enumerate() {
                let r = self.entries[(b.alpha, e)];
                if r.abs() < REPREP_CUTOFF {
                    continue;
                }
                for sign in [Sign::Plus, Sign::Minus] {
                    if let Some((mu, _)) = split.part(sign) {
                        terms.push((BranchKey::new(b.alpha, e, sign), b.weight * r * mu * sign.factor()));
                    }
                }
            }
        }
        if norm.abs() < REPREP_CUTOFF {
            return Err(Error::VanishingRepreparation { norm });
        }
        Ok((terms, norm))
    }

    /// Keys of evolved parts needed to evaluate this repreparation.
    pub fn required(&self, decomposition: &OpdDecomposition) -> Result<Vec<BranchKey>> {
        Ok(self.terms(decomposition)?.0.into_iter().map(|(k, _)| k).collect())
    }
}

/// `sum w_a R_ab (mu_b^+ Phi^a[Sigma_b^+] - mu_b^- Phi^a[Sigma_b^-]) / sum w_a tr R[Q_a]`.
pub fn reprepared_state(
    evolved: &EvolvedParts,
    decomposition: &OpdDecomposition,
    reprep: &RepreparationMatrix,
) -> Result<Operator> {
    let (terms, norm) = reprep.terms(decomposition)?;
    let mut out = Operator::zeros(decomposition.ds);
    for (key, coeff) in terms {
        let part = evolved.get(&key).ok_or(Error::MissingBranch(key.alpha))?;
        out += part * (coeff / norm);
    }
    Ok(out.hermitian_part())
}

/// `(R (x) id)[rho_SE]` normalised to unit trace.
pub fn reprepared_global_state(state: &BipartiteState, r_map: &KrausMap) -> Result<BipartiteState> {
    let id_e = Operator::identity(state.de());
    let mut out = Operator::zeros(state.rho().dim());
    for a in &r_map.ops {
        let big = tensor_product(a, &id_e);
        out += &big * state.rho() * big.adjoint();
    }
    let t = out.trace().re;
    if t.abs() < REPREP_CUTOFF {
        return Err(Error::VanishingRepreparation { norm: t });
    }
    BipartiteState::new(out * (1.0 / t), state.ds(), state.de())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_pauli_frame, decompose, recombine, Positivity};
    use crate::operator::{basis_ket, partial_trace, tensor_ket, Keep, Ket};

    fn entangled() -> BipartiteState {
        let psi0 = Ket::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let psi1 = Ket::from_vec(vec![c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.8)]);
        let v = tensor_ket(&basis_ket(2, 0), &psi0) + tensor_ket(&basis_ket(2, 1), &psi1);
        BipartiteState::pure(&v, 2, 3).unwrap()
    }

    fn parts_at_zero(d: &OpdDecomposition) -> EvolvedParts {
        let mut parts = EvolvedParts::new();
        for b in &d.branches {
            for (e, split) in d.splits.iter().enumerate() {
                for sign in [Sign::Plus, Sign::Minus] {
                    if let Some((_, s)) = split.part(sign) {
                        parts.insert(BranchKey::new(b.alpha, e, sign), s.clone());
                    }
                }
            }
        }
        parts
    }

    #[test]
    fn identity_map_is_identity_matrix() {
        let f = build_pauli_frame(2);
        let r = expand_repreparation(&KrausMap::identity(2), &f);
        assert!((r.entries.clone() - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn zero_discord_reconstructs() {
        let f = build_pauli_frame(2);
        let map = KrausMap::zero_discord(&[0.9, 0.1]);
        let r = expand_repreparation(&map, &f);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn bell_rotation_d4_reconstructs() {
        let f = build_pauli_frame(4);
        let r = expand_repreparation(&KrausMap::bell(4, 1, 2), &f);
        assert!(r.residual < 1e-10);
        for a in 0..16 {
            assert!((r.norm_weights[a] - f.element(a).trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn reprepared_at_zero_matches_global() {
        let s = entangled();
        let f = build_pauli_frame(2);
        let d = decompose(&s, &f, Positivity::Strict).unwrap();
        let parts = parts_at_zero(&d);
        for map in [KrausMap::zero_discord(&[0.5, 0.5]), KrausMap::zero_discord(&[0.9, 0.1]), KrausMap::factorize(2), KrausMap::bell(2, 1, 1)] {
            let r = expand_repreparation(&map, &f);
            let got = reprepared_state(&parts, &d, &r).unwrap();
            let expect = partial_trace(&reprepared_global_state(&s, &map).unwrap(), Keep::System);
            assert!(got.max_abs_diff(&expect) < 1e-10);
        }
        let id = expand_repreparation(&KrausMap::identity(2), &f);
        let a = reprepared_state(&parts, &d, &id).unwrap();
        assert!(a.max_abs_diff(&recombine(&parts, &d).unwrap()) < 1e-12);
    }

    #[test]
    fn annihilating_repreparation_is_reported() {
        let s = BipartiteState::product(&Operator::unit(2, 0, 0), &Operator::unit(3, 0, 0)).unwrap();
        let f = build_pauli_frame(2);
        let d = decompose(&s, &f, Positivity::Strict).unwrap();
        let r = expand_repreparation(&KrausMap::new(vec![Operator::unit(2, 1, 1)]), &f);
        assert!(matches!(r.terms(&d), Err(Error::VanishingRepreparation { .. })));
    }
}
