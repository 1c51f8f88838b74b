//! One master equation for all compatible states of the correlated dephasing model.

use opd_unravel::exact::{lindblad_ode_solve, OdeOptions};
use opd_unravel::generators::dephasing::DephasingModel;
use opd_unravel::generators::fixed_corr::{fixed_correlations_generator, CorrelationOperator};
use opd_unravel::generators::TimeGrid;

fn main() -> opd_unravel::Result<()> {
    let model = DephasingModel::new(4, 1.0, 0.5);
    let (rho_s, corr) = CorrelationOperator::from_state(&model.maximally_entangled());
    let grid = TimeGrid::new(0.01, 1.0);
    let gen = fixed_correlations_generator(&model.propagator()?, &corr, grid, Default::default())?;
    for k in [1, 25, 50, 100] {
        let p = &gen.parts[k];
        println!("t = {:.2}: min eta {:+.4}, sum eta {:.1e}", grid.time(k), p.min_eta(), p.eta_sum());
    }
    let solved = lindblad_ode_solve(&gen, &rho_s, &[1.0], OdeOptions::default())?;
    let direct = gen.evolve_direct(&rho_s);
    println!("master equation vs Phi_t[rho_S] + I_t at t = 1: {:.1e}", solved[0].max_abs_diff(&direct[grid.n]));
    Ok(())
}
