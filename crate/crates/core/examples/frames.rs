//! Generalized Pauli frames, their duals and the positive/negative split.

use opd_unravel::frames::build_pauli_frame;
use opd_unravel::operator::positive_negative_parts;

fn main() -> opd_unravel::Result<()> {
    for d in 2..=4 {
        let f = build_pauli_frame(d);
        let min = f.dual_min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        println!("d = {d}: {} elements, duality residual {:.1e}, smallest dual eigenvalue {min:.4}", f.len(), f.duality_residual());
    }
    let f = build_pauli_frame(2);
    for (a, q) in f.elements().iter().enumerate() {
        let s = positive_negative_parts(q)?;
        println!("Q_{}: mu+ = {:.6}, mu- = {:.6}", f.label(a), s.mu_plus, s.mu_minus);
    }
    Ok(())
}
