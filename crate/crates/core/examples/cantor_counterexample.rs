//! The fat Cantor indicator: ∫q stays above ½ while R_{2^m} never drops below it.

use trotter_lab::{build_cantor, riemann_error, CantorConstruction, DeltaPair};

fn main() -> trotter_lab::Result<()> {
    let depth = 6;
    let (q, construction) = build_cantor(depth)?;
    println!("depth {depth}: |complement| = {}", construction.complement_measure);
    println!("{} disjoint removed intervals", construction.merged_open_set.len());
    for m in 1..=depth {
        let eps = CantorConstruction::corner_epsilon(m);
        let eps_f = *eps.numer() as f64 / *eps.denom() as f64;
        let corner = DeltaPair::new(1.0 - eps_f / 2.0, eps_f / 2.0)?;
        let r = riemann_error(&q, corner, 1 << m)?;
        println!("m = {m}: ε_m = {eps:<12} R at the corner = {r:.6}");
    }
    Ok(())
}
