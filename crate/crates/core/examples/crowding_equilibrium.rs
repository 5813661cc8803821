//! Reference example 3: example 2 with crowding mortality `F(P) = 1e-5 P`.
//! The population settles at `P* = lambda*/gamma`.
//!
//! Run with `cargo run --example crowding_equilibrium`.

use clonal_evolve::model::{example_scenario, Grid};
use clonal_evolve::solver::explicit_crowding_oracle;
use clonal_evolve::{find_equilibrium, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(241, 101, 6.0, 1.0)?;
    let s = example_scenario(3, &grid)?;
    let report = find_equilibrium(&s)?;
    println!(
        "lambda* = {:.5}, P* = {:.1}, stability margin {:.4}, extinction stable: {}",
        report.lambda_star, report.p_star, report.stability_margin, report.extinction_stable
    );

    let crowded = simulate(&s)?;
    let mut linear = s.clone();
    linear.crowding = None;
    let oracle = explicit_crowding_oracle(&simulate(&linear)?, s.crowding.as_ref().unwrap())?;

    println!("{:>5} {:>12} {:>12}", "t", "P(t)", "formula");
    for t in (0..=50).step_by(5) {
        let n = crowded.index_of(t as f64);
        println!("{t:>5} {:>12.1} {:>12.1}", crowded.totals[n], oracle[n]);
    }
    Ok(())
}
