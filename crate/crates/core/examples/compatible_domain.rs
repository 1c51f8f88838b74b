//! Compatible reduced states for `rho_E = 1/2`, `chi = lambda (|Psi><Psi| - 1/4)`.

use opd_unravel::generators::fixed_corr::{domain_volume, CorrelationOperator};
use opd_unravel::harness::commands::lambda_scan;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> opd_unravel::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let scan = lambda_scan(2, lambda, 20_000, 1)?;
        let (v, se) = domain_volume(&CorrelationOperator::lambda_family(2, lambda), 20_000, &mut rng);
        println!(
            "lambda {lambda:.2}: volume {v:.4} ± {se:.4}, closed form agrees on {}/{}, identity compatible {}",
            scan.agree, scan.samples, scan.identity_compatible
        );
    }
    Ok(())
}
