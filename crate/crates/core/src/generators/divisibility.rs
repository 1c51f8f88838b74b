//! Divisibility diagnostics: sign of the rates (CP) and a sampled
//! Kossakowski test over random orthonormal bases (P).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::random::haar_unitary;

use super::{operator_norm, Generator, TimeGrid};

/// Rates above `-RATE_TOL` count as non-negative.
pub const RATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct DivisibilityOptions {
    pub bases: usize,
    pub seed: u64,
}

impl Default for DivisibilityOptions {
    fn default() -> Self {
        DivisibilityOptions { bases: 200, seed: 0 }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DivisibilityPoint {
    pub t: f64,
    /// Rates for unit operator-norm jumps, ascending.
    pub rates: Vec<f64>,
    pub cp_divisible: bool,
    /// Smallest `sum_j g_j |<phi_m|L_j|phi_n>|^2`, `m != n`, over the sampled bases.
    pub kossakowski_min: f64,
    /// No sampled basis violated the P-divisibility condition.
    pub p_not_falsified: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DivisibilityReport {
    pub points: Vec<DivisibilityPoint>,
}

impl DivisibilityReport {
    pub fn cp_divisible(&self) -> bool {
        self.points.iter().all(|p| p.cp_divisible)
    }

    pub fn p_not_falsified(&self) -> bool {
        self.points.iter().all(|p| p.p_not_falsified)
    }

    /// First grid time with a negative rate.
    pub fn first_negative_rate(&self) -> Option<f64> {
        self.points.iter().find(|p| !p.cp_divisible).map(|p| p.t)
    }
}

pub fn divisibility_report<G: Generator + ?Sized>(gen: &G, grid: TimeGrid, opts: DivisibilityOptions) -> DivisibilityReport {
    let d = gen.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut bases: Vec<_> = (0..opts.bases).map(|_| haar_unitary(d, &mut rng)).collect();
    bases.insert(0, crate::operator::Operator::identity(d));
    let points = grid
        .times()
        .into_iter()
        .map(|t| {
            let channels = gen.terms(t).channel_form();
            let mut rates: Vec<f64> = channels.iter().map(|ch| ch.rate * operator_norm(&ch.op).powi(2)).collect();
            rates.sort_by(f64::total_cmp);
            let cp = rates.first().is_none_or(|&r| r >= -RATE_TOL);
            let mut kmin = f64::INFINITY;
            for u in &bases {
                let rotated: Vec<_> = channels.iter().map(|ch| (ch.rate, u.adjoint() * &ch.op * u)).collect();
                for m in 0..d {
                    for n in 0..d {
                        if m == n {
                            continue;
                        }
                        let s: f64 = rotated.iter().map(|(g, l)| g * l.entry(m, n).norm_sqr()).sum();
                        kmin = kmin.min(s);
                    }
                }
            }
            if d < 2 {
                kmin = 0.0;
            }
            DivisibilityPoint { t, rates, cp_divisible: cp, kossakowski_min: kmin, p_not_falsified: kmin >= -RATE_TOL }
        })
        .collect();
    DivisibilityReport { points }
}
