use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trotter_lab::matrix_lie::{lie_error, nilpotent_pair, random_pair, telescoping_residual};
use trotter_lab::rates::fit_loglog;

fn main() -> trotter_lab::Result<()> {
    let ns: Vec<u64> = (4..=12).map(|m| 1 << m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (a, b) = random_pair(5, 2.0, &mut rng)?;
    let (x, y) = nilpotent_pair();
    for (name, a, b) in [("random 5x5", &a, &b), ("nilpotent 2x2", &x, &y)] {
        let errors = lie_error(a, b, 1.0, &ns)?;
        let fit = fit_loglog(&errors)?;
        let (last_n, last) = errors[errors.len() - 1];
        println!(
            "{name}: slope {:.4}, n·error at n = {last_n} is {:.4}, telescoping residual {:.1e}",
            fit.slope,
            last_n as f64 * last,
            telescoping_residual(a, b, 1.0, 8)?
        );
    }
    Ok(())
}
