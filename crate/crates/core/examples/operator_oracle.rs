use trotter_lab::semigroup::{operator_norm_oracle, OracleConfig};
use trotter_lab::Potential;

fn main() -> trotter_lab::Result<()> {
    let q = Potential::piecewise_constant(vec![0.0, 0.4, 0.7, 1.0], vec![0.0, 2.0, 1.0])?;
    let tau = 0.75;
    for p in [1.0, 2.0, 4.0] {
        let cfg = OracleConfig { p, ..OracleConfig::default() };
        for n in [4, 16] {
            let report = operator_norm_oracle(&q, tau, n, &cfg)?;
            println!(
                "p = {p}, n = {n:>2}: symbol {:.6} at t = {:.4}, test functions {:.6} ({} tried, bump width {:?})",
                report.symbol.value, report.symbol.argmax_t, report.value, report.tests, report.best_bump_width
            );
        }
    }
    Ok(())
}
