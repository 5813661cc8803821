//! Reference example 1: telomeres only shorten, so every lineage reaches its
//! division limit and the population dies out.
//!
//! Run with `cargo run --example extinction`.

use clonal_evolve::bounds::log_slope;
use clonal_evolve::model::{example_scenario, Grid};
use clonal_evolve::spectral::{bound_curves, classify, growth_rate};
use clonal_evolve::simulate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(241, 101, 6.0, 1.0)?;
    let s = example_scenario(1, &grid)?;

    let class = classify(&s.coefficients, &s.kernel)?;
    let lambda = growth_rate(&s.coefficients, &s.kernel)?;
    println!("r(O_0) = {:.4} ({:?}), lambda* = {lambda:.4}", class.radius, class.regime);

    let curves = bound_curves(&s.coefficients, &s.kernel, 0.0)?;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    println!(
        "max mother estimate {:.4}, max daughter estimate {:.4}",
        max(&curves.mother),
        max(&curves.daughter)
    );

    let trace = simulate(&s)?;
    println!("{:>6} {:>12}  bands (longest first)", "t", "P(t)");
    for t in (0..=14).step_by(2) {
        let n = trace.index_of(t as f64);
        let bands: Vec<String> = trace.class_totals.iter().map(|c| format!("{:10.3e}", c[n])).collect();
        println!("{t:>6} {:>12.4e}  {}", trace.totals[n], bands.join(" "));
    }
    // The decay rate approaches lambda* only slowly: cells that stopped
    // dividing linger until they age out.
    println!("fitted slope on [7, 14]: {:.4}", log_slope(&trace.times, &trace.totals, 7.0, 14.0)?);
    Ok(())
}
