//! Global unitary propagation, reduced maps and their CPTP check.

use opd_unravel::exact::{verify_cptp, GlobalPropagator};
use opd_unravel::generators::jc::jc_hamiltonian;
use opd_unravel::harness::model::single_mode_entangled;
use opd_unravel::operator::{partial_trace, Keep, Operator};

fn main() -> opd_unravel::Result<()> {
    let cutoff = 4;
    let prop = GlobalPropagator::new(jc_hamiltonian(1.0, 0.1, 0.5, cutoff), 2, cutoff + 1)?;
    let state = single_mode_entangled(1, 0, cutoff)?;
    for t in [0.0, 1.0, 2.0, 4.0] {
        let rho = partial_trace(&prop.evolve(&state, t), Keep::System);
        println!("t = {t}: rho_11 = {:.4}, purity {:.4}", rho.entry(1, 1).re, (&rho * &rho).trace().re);
    }
    let vacuum = Operator::unit(cutoff + 1, 0, 0);
    let map = prop.reduced_map(&vacuum, 2.0);
    println!("reduced map with vacuum environment is CPTP: {}", verify_cptp(&map).is_cptp());
    Ok(())
}
