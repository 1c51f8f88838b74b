//! One-sided positive decomposition of an entangled qubit-qutrit state.

use opd_unravel::frames::{build_pauli_frame, decompose, Positivity};
use opd_unravel::operator::{basis_ket, c, tensor_ket, BipartiteState, Ket};

fn main() -> opd_unravel::Result<()> {
    let psi0 = Ket::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let psi1 = Ket::from_vec(vec![c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.8)]);
    let v = (tensor_ket(&basis_ket(2, 0), &psi0) + tensor_ket(&basis_ket(2, 1), &psi1)) * c(0.5f64.sqrt(), 0.0);
    let state = BipartiteState::pure(&v, 2, 3)?;

    let dec = decompose(&state, &build_pauli_frame(2), Positivity::Strict)?;
    for b in &dec.branches {
        println!(
            "alpha = {}: w = {:.4}, spectrum of rho_a {:?}, mu+ = {:.4}, mu- = {:.4}",
            dec.frame.label(b.alpha),
            b.weight,
            b.env_spectrum.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            b.split.mu_plus,
            b.split.mu_minus
        );
    }
    println!("reconstruction residual {:.1e}", dec.reconstruct().max_abs_diff(state.rho()));
    Ok(())
}
