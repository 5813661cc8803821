//! Reference example 2: a fraction of divisions restores telomere length, and
//! the population grows exponentially at the characteristic rate.
//!
//! Run with `cargo run --example growth`.

use clonal_evolve::bounds::log_slope;
use clonal_evolve::model::{example_scenario, Grid};
use clonal_evolve::spectral::{analyze, growth_rate};
use clonal_evolve::simulate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(241, 101, 6.0, 1.0)?;
    let s = example_scenario(2, &grid)?;

    let report = analyze(&s.coefficients, &s.kernel)?;
    let lambda = growth_rate(&s.coefficients, &s.kernel)?;
    println!(
        "r(O_0) = {:.4} after {} power iterations, lambda* = {lambda:.5}",
        report.radius, report.iterations
    );

    let trace = simulate(&s)?;
    let slope = log_slope(&trace.times, &trace.totals, 10.0, 20.0)?;
    println!("fitted slope of log P on [10, 20]: {slope:.5}");

    let shape = |t: f64| trace.snapshot_at(t).and_then(|d| d.normalized()).expect("snapshot");
    for (a, b) in [(5.0, 10.0), (10.0, 15.0), (10.0, 20.0)] {
        println!("L1 distance of normalized densities, t = {a} vs {b}: {:.4}", shape(a).l1_distance(&shape(b)));
    }
    Ok(())
}
