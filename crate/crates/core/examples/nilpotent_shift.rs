//! Without division or death every cell simply ages out: the population is
//! exactly zero one step after the maximal age.
//!
//! Run with `cargo run --example nilpotent_shift`.

use clonal_evolve::model::{build_initial_density, Grid};
use clonal_evolve::solver::nilpotency_check;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(241, 101, 6.0, 1.0)?;
    let p0 = build_initial_density(&grid);
    let total = nilpotency_check(&grid, &p0)?;
    println!("P(0) = {:.3}, P(a_max + dt) = {total}", p0.total());
    Ok(())
}
