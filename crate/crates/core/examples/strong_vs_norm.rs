//! For the Cantor indicator the Trotter product converges strongly but not in norm.

use num_complex::Complex64;
use trotter_lab::build_cantor;
use trotter_lab::experiments::smooth_bump;
use trotter_lab::semigroup::{strong_convergence_curve, sup_operator_norm, uniform_tau_grid, GridFunction};

fn main() -> trotter_lab::Result<()> {
    let (q, _) = build_cantor(6)?;
    let f = GridFunction::from_fn(1 << 14, 2.0, |t| Complex64::new(smooth_bump(t), 0.0))?;
    let ns: Vec<u64> = (1..=6).map(|m| 1 << m).collect();
    let strong = strong_convergence_curve(&q, &f, 0.5, &ns)?;
    let taus = uniform_tau_grid(64);
    for (n, residual) in strong {
        let norm = sup_operator_norm(&q, n, &taus)?;
        println!("n = {n:>3}: ||(T - V_n) f|| = {residual:.3e}   sup_τ ||T - V_n|| >= {:.4}", norm.value);
    }
    Ok(())
}
