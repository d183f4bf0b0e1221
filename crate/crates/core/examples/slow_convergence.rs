//! A continuous tent train whose R_{2^m} outlasts a prescribed slowly decaying sequence.

use trotter_lab::rates::{slow_convergence_check, DeltaSeq};
use trotter_lab::{Potential, SearchConfig};

fn main() -> trotter_lab::Result<()> {
    let q = Potential::harmonic_tent_train(12)?;
    let ms: Vec<u32> = (1..=11).collect();
    let table = slow_convergence_check(&q, DeltaSeq::InversePower(1.0), &ms, &SearchConfig::default())?;
    println!("{:>3} {:>6} {:>12} {:>12} {:>10} {:>12}", "m", "n", "R_n", "δ_n", "ratio", "predicted");
    for row in &table.rows {
        println!(
            "{:>3} {:>6} {:>12.6} {:>12.6} {:>10.3} {:>12.6}",
            row.m, row.n, row.r_n, row.delta_n, row.ratio, row.predicted_lower
        );
    }
    println!("ratio increasing: {}", table.ratio_increasing);
    println!("lower bounds hold: {}", table.lower_bounds_hold);
    Ok(())
}
