//! MCWF, rate-operator and diffusive unravelings of spontaneous decay.

use opd_unravel::generators::decay_generator;
use opd_unravel::operator::Operator;
use opd_unravel::unravel::{run_ensemble, Method, UnravelConfig};

fn main() -> opd_unravel::Result<()> {
    let gen = decay_generator(1.0);
    let excited = Operator::unit(2, 1, 1);
    for method in [Method::Mcwf, Method::Ro, Method::Qsd] {
        let cfg = UnravelConfig { method, t_max: 2.0, output_dt: 0.5, n_traj: 5000, seed: 1, ..Default::default() };
        let r = run_ensemble(&gen, &excited, &cfg)?;
        print!("{:>4}:", method.name());
        for (k, &t) in r.estimate.times.iter().enumerate() {
            let (p, se, _) = r.estimate.element(k, 1, 1);
            print!("  t={t:.1} {:.4}±{se:.4} (exact {:.4})", p.re, (-t).exp());
        }
        println!();
    }
    Ok(())
}
