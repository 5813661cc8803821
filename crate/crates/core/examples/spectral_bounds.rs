//! Perron root of the discretised renewal operator against its two-sided
//! estimates, on the separable kernel `r ≡ 1` where the root is known.
//!
//! Run with `cargo run --example spectral_bounds`.

use clonal_evolve::model::Grid;
use clonal_evolve::spectral::{assemble, radius_bounds, separable_radius, spectral_radius};
use clonal_evolve::{CoefficientField, DivisionKernel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let exact = separable_radius(1.0, 1.0, 1.0, 1.0);
    println!("closed form 1 - e^-2 = {exact:.9}");
    println!("{:>6} {:>12} {:>10}   mother bracket         daughter bracket", "n_age", "r", "rel err");
    for n_age in [101, 201, 401, 801] {
        let grid = Grid::new(n_age, 101, 1.0, 1.0)?;
        let c = CoefficientField::constant(grid, 1.0, 1.0)?;
        let k = DivisionKernel::from_fn(&grid, |_, _| 1.0)?;
        let r = spectral_radius(&assemble(&c, &k, 0.0)?).radius;
        let b = radius_bounds(&c, &k)?;
        println!(
            "{n_age:>6} {r:>12.9} {:>10.2e}   [{:.6}, {:.6}]   [{:.6}, {:.6}]",
            (r - exact).abs() / exact,
            b.mother_lower,
            b.mother_upper,
            b.daughter_lower,
            b.daughter_upper
        );
    }
    // Division is switched off at the maximal age, which costs half a cell of
    // quadrature: the error halves with each refinement.
    Ok(())
}
