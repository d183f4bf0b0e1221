//! Builds each potential family and prints a few samples and integrals.

use trotter_lab::PotentialSpec;

fn main() -> trotter_lab::Result<()> {
    let specs = [
        "constant:1.5",
        "linear",
        "piecewise:breakpoints=0;0.3;1,values=2;0.5",
        "weier:beta=0.5,levels=12",
        "tent:harmonic=10",
        "cantor:depth=4",
    ];
    for text in specs {
        let q = text.parse::<PotentialSpec>()?.build()?;
        let samples: Vec<String> = [0.1, 0.25, 0.5, 0.9].iter().map(|&t| format!("{:.4}", q.value(t))).collect();
        let total = q.antiderivative(1.0)?;
        println!(
            "{:<40} ||q|| = {:.4}  ∫q = {:.6}  q(0.1, 0.25, 0.5, 0.9) = [{}]",
            q.label(),
            q.sup_norm(),
            total,
            samples.join(", ")
        );
        if let Some(h) = q.holder() {
            println!("{:<40} Hölder bound on R_64: {:.3e}", "", h.riemann_bound(64));
        }
    }
    Ok(())
}
