//! Bounds on the operator-norm Trotter error next to the per-τ norm.

use trotter_lab::semigroup::{per_tau_operator_norm, sup_operator_norm, uniform_tau_grid};
use trotter_lab::{sup_riemann_error, Potential, SearchConfig};

fn main() -> trotter_lab::Result<()> {
    let q = Potential::weierstrass(0.5, 10)?;
    let taus = uniform_tau_grid(128);
    for n in [4, 16, 64] {
        let report = sup_riemann_error(&q, n, &SearchConfig::default())?;
        let grid = sup_operator_norm(&q, n, &taus)?;
        let at_argmax = per_tau_operator_norm(&q, report.argmax.width(), n)?;
        let norm = if at_argmax.value > grid.value { at_argmax } else { grid };
        println!(
            "n = {n:>3}: {:.5e} <= {:.5e} (τ = {:.6}) <= {:.5e}",
            report.lower_op_norm,
            norm.value,
            norm.tau,
            report.upper_op_norm.unwrap_or(report.r_n),
        );
    }
    Ok(())
}
