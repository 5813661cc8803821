#![allow(dead_code)]

use clonal_evolve::model::{Grid, Scenario};
use clonal_evolve::spectral::assemble;
use clonal_evolve::{CoefficientField, DivisionKernel};
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn example(which: u8, n_age: usize, n_len: usize) -> Scenario {
    let grid = Grid::new(n_age, n_len, 6.0, 1.0).unwrap();
    clonal_evolve::model::example_scenario(which, &grid).unwrap()
}

pub fn default_example(which: u8) -> Scenario {
    example(which, 241, 101)
}

/// A small random problem: positive kernel, rates drawn per node.
pub struct Instance {
    pub coefficients: CoefficientField,
    pub kernel: DivisionKernel,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_age = rng.gen_range(6..=40);
    let n_len = rng.gen_range(4..=50);
    let a_max = rng.gen_range(0.5..3.0);
    let grid = Grid::new(n_age, n_len, a_max, 1.0).unwrap();
    let beta = Array2::from_shape_fn(grid.shape(), |_| rng.gen_range(0.0..3.0));
    let mu = Array2::from_shape_fn(grid.shape(), |_| rng.gen_range(0.0..2.0));
    let coefficients = CoefficientField::new(grid, beta, mu).unwrap();
    let r = Array2::from_shape_fn((n_len, n_len), |_| rng.gen_range(0.05..2.0));
    let kernel = DivisionKernel::new(&grid, r).unwrap();
    Instance {
        coefficients,
        kernel,
    }
}

/// Largest eigenvalue modulus of a dense matrix.
pub fn dense_radius(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let d = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    d.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn dense_radius_at(coefficients: &CoefficientField, kernel: &DivisionKernel, lambda: f64) -> f64 {
    dense_radius(&assemble(coefficients, kernel, lambda).unwrap().m)
}

/// Kernel that only maps the lower half of lengths to itself and the upper
/// half to itself.
pub fn two_block_kernel(grid: &Grid) -> DivisionKernel {
    let half = grid.n_len / 2;
    let r = Array2::from_shape_fn((grid.n_len, grid.n_len), |(i, j)| {
        if (i < half) == (j < half) {
            1.0
        } else {
            0.0
        }
    });
    DivisionKernel::new(grid, r).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
