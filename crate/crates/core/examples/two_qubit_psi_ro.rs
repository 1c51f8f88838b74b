//! Damped two-qubit model: second-order rates and the positive rate-operator
//! unraveling with the three-state policy.

use opd_unravel::harness::{cmd_compare, cmd_simulate, ExperimentConfig};
use opd_unravel::generators::two_qubit::TwoQubitModel;

const CONFIG: &str = r#"
[model]
name = "two-qubit"
cutoff = 4
[unravel]
method = "psi-ro"
t_max = 0.9
output_dt = 0.3
n_traj = 2000
[[observables]]
kind = "expectation"
name = "sigma_x"
operator = "sigma-x"
"#;

fn main() -> opd_unravel::Result<()> {
    let m = TwoQubitModel::default();
    for t in [0.1, 0.5, 1.0, 2.0] {
        let (gp, gm) = m.analytic_rates(t);
        println!("t = {t}: gamma+ = {gp:+.6}, gamma- = {gm:+.6}");
    }
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = cmd_compare(&cfg)?;
    println!("psi-ro to t = 0.9: max distance / sigma {:.2}, pass {}", out.report.max_ratio, out.report.pass);

    let mut longer = cfg.clone();
    longer.unravel.t_max = 1.2;
    if let Err(e) = cmd_simulate(&longer) {
        println!("to t = 1.2: {e}");
    }
    Ok(())
}
