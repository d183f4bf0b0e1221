use trotter_lab::{sup_riemann_error, Potential, SearchConfig};

fn main() -> trotter_lab::Result<()> {
    let q = Potential::linear(0.0, 1.0)?;
    let cfg = SearchConfig::default();
    println!("{:>6} {:>14} {:>14} {:>10} {:>10}", "n", "R_n", "certified", "t*", "s*");
    for m in 1..=10 {
        let report = sup_riemann_error(&q, 1 << m, &cfg)?;
        println!(
            "{:>6} {:>14.6e} {:>14.6e} {:>10.6} {:>10.3e}",
            report.n,
            report.r_n,
            report.upper_op_norm.unwrap_or(f64::NAN),
            report.argmax.t(),
            report.argmax.s(),
        );
    }
    Ok(())
}
