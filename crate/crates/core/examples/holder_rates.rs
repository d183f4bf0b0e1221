use trotter_lab::rates::{fit_loglog, holder_bound_check};
use trotter_lab::{sup_riemann_error, Potential, SearchConfig};

fn main() -> trotter_lab::Result<()> {
    let cfg = SearchConfig::default();
    for beta in [0.25, 0.5, 0.75] {
        let q = Potential::weierstrass(beta, 14)?;
        let reports = (1..=10)
            .map(|m| sup_riemann_error(&q, 1 << m, &cfg))
            .collect::<trotter_lab::Result<Vec<_>>>()?;
        let points: Vec<(u64, f64)> = reports.iter().map(|r| (r.n, r.r_n)).collect();
        let fit = fit_loglog(&points)?;
        let margins = holder_bound_check(&q, &reports)?;
        let worst = margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
        println!(
            "β = {beta}: slope {:.3} ± {:.3}, {}, smallest bound margin {worst:.3e}",
            fit.slope, fit.slope_ci, fit.verdict
        );
    }
    Ok(())
}
