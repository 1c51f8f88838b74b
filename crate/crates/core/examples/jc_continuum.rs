//! Second-order rates of a qubit in an Ohmic continuum with sharp cutoff.

use opd_unravel::generators::jc::{JcContinuum, JcLabeling};
use opd_unravel::quadrature::QuadOptions;

fn main() -> opd_unravel::Result<()> {
    let model = JcContinuum { g: 0.05, omega_c: 2.0, n: 10.0, omega0: 1.0, labeling: JcLabeling::AsPrinted };
    for t in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let r = model.rates(t, QuadOptions::default())?;
        println!("t = {t:>4}: gamma- = {:.5}, gamma+ = {:.5}, beta+ = {:+.5}, beta- = {:+.5}", r.gamma_minus, r.gamma_plus, r.beta_plus, r.beta_minus);
    }
    Ok(())
}
