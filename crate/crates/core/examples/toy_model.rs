//! Single-qubit picture: how much reset is needed to undo two rounds of
//! depolarizing noise, and where that stops being possible.

use dvqa::toymodel::{optimal_reset_probability, toy_table};

fn main() -> dvqa::Result<()> {
    let lambdas = [0.0, 0.05, 0.1, 0.2, 0.3];
    let radii = [0.5, 0.7, 0.8, 0.9];

    println!("{:>6} {:>5} {:>8} {:>9} {:>10}", "lambda", "r", "p", "feasible", "residual");
    for row in toy_table(&lambdas, &radii)? {
        println!(
            "{:>6.2} {:>5.2} {:>8.5} {:>9} {:>10.2e}",
            row.lambda, row.r, row.p, row.feasible, row.residual
        );
    }

    let sol = optimal_reset_probability(0.8, 0.1)?;
    println!("\nr = 0.8, lambda = 0.1 -> p = {:.6}", sol.p());
    Ok(())
}
