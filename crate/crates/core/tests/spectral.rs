mod common;

use clonal_evolve::model::Grid;
use clonal_evolve::spectral::{
    assemble, bound_curves, classify, growth_rate, irreducible, irreducible_with_threshold,
    perron, radius_at, separable_radius, spectral_radius, survival_kernel, Regime,
};
use clonal_evolve::{CoefficientField, DivisionKernel};
use common::{dense_radius, dense_radius_at, example, random_instance, rel, two_block_kernel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn separable(n_age: usize, n_len: usize) -> (CoefficientField, DivisionKernel) {
    let grid = Grid::new(n_age, n_len, 1.0, 1.0).unwrap();
    (
        CoefficientField::constant(grid, 1.0, 1.0).unwrap(),
        DivisionKernel::from_fn(&grid, |_, _| 1.0).unwrap(),
    )
}

#[test]
fn perron_matches_dense_eigensolver() {
    for seed in 0..30 {
        let inst = random_instance(seed);
        let m = assemble(&inst.coefficients, &inst.kernel, 0.3).unwrap().m;
        let pair = perron(&m);
        assert!(pair.converged, "seed {seed}");
        let dense = dense_radius(&m);
        assert!(rel(pair.radius, dense) < 1e-8, "seed {seed}: {} vs {dense}", pair.radius);
        let mv = m.dot(&ndarray::Array1::from(pair.eigenvector.clone()));
        for (x, y) in mv.iter().zip(&pair.eigenvector) {
            assert!((x - pair.radius * y).abs() < 1e-7 * pair.radius);
            assert!(*y >= 0.0);
        }
    }
}

#[test]
fn separable_operator_is_rank_one() {
    let (c, k) = separable(41, 31);
    let m = assemble(&c, &k, 0.0).unwrap().m;
    let d = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
    let mut s: Vec<f64> = d.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert!(s[1] < 1e-12 * s[0]);
}

#[test]
fn separable_error_is_first_order_in_age_step() {
    // Zeroing β at a_max removes half a cell of division from the quadrature,
    // so the error halves with the age step and is unaffected by n_len.
    let exact = separable_radius(1.0, 1.0, 1.0, 1.0);
    assert!((exact - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    let err = |n_age| {
        let (c, k) = separable(n_age, 201);
        exact - radius_at(&c, &k, 0.0).unwrap()
    };
    let (e1, e2, e3) = (err(101), err(201), err(401));
    assert!(e1 > 0.0 && e2 > 0.0 && e3 > 0.0);
    assert!((e1 / e2 - 2.0).abs() < 0.05 && (e2 / e3 - 2.0).abs() < 0.05);
    let (c, k) = separable(401, 51);
    assert!((exact - radius_at(&c, &k, 0.0).unwrap() - e3).abs() < 1e-12);
}

#[test]
fn separable_growth_rate_matches_scalar_root() {
    // 2(1 − e^{−s})/s = 1 with s = 2 + λ, solved independently.
    let h = |s: f64| 2.0 * (1.0 - (-s).exp()) / s - 1.0;
    let (mut lo, mut hi) = (0.5, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_exact = 0.5 * (lo + hi) - 2.0;
    let (c, k) = separable(2001, 21);
    let lambda = growth_rate(&c, &k).unwrap();
    assert!((lambda - lambda_exact).abs() < 1e-3, "{lambda} vs {lambda_exact}");
    assert!((radius_at(&c, &k, lambda).unwrap() - 1.0).abs() < 1e-7);
}

#[test]
fn reference_examples_classify() {
    let s1 = example(1, 121, 51);
    let s2 = example(2, 121, 51);
    assert_eq!(classify(&s1.coefficients, &s1.kernel).unwrap().regime, Regime::Decay);
    assert_eq!(classify(&s2.coefficients, &s2.kernel).unwrap().regime, Regime::Growth);
    for s in [&s1, &s2] {
        let lambda = growth_rate(&s.coefficients, &s.kernel).unwrap();
        assert!((radius_at(&s.coefficients, &s.kernel, lambda).unwrap() - 1.0).abs() < 1e-6);
    }
    let curves = bound_curves(&s1.coefficients, &s1.kernel, 0.0).unwrap();
    assert!(curves.mother.iter().chain(&curves.daughter).all(|&v| v < 1.0));
}

#[test]
fn irreducibility_of_examples_and_blocks() {
    for which in 1..=3 {
        let s = example(which, 61, 41);
        let survival = survival_kernel(&s.coefficients, 0.0);
        assert!(irreducible(&s.kernel, &survival));
    }
    let s = example(2, 61, 41);
    let survival = survival_kernel(&s.coefficients, 0.0);
    assert!(!irreducible(&two_block_kernel(&s.grid), &survival));
    // Gaussian tails far below the peak disappear under a relative threshold.
    assert!(!irreducible_with_threshold(&s.kernel, &survival, 0.5));
}

#[test]
fn reducible_kernel_radius_is_the_larger_block() {
    let grid = Grid::new(31, 20, 1.0, 1.0).unwrap();
    let c = CoefficientField::constant(grid, 1.0, 0.5).unwrap();
    let k = two_block_kernel(&grid);
    let op = assemble(&c, &k, 0.0).unwrap();
    let dense = dense_radius(&op.m);
    assert!(rel(spectral_radius(&op).radius, dense) < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimates_bracket_radius(seed in any::<u64>(), lambda in -1.0f64..1.0) {
        let inst = random_instance(seed);
        let dense = dense_radius_at(&inst.coefficients, &inst.kernel, lambda);
        let b = bound_curves(&inst.coefficients, &inst.kernel, lambda).unwrap().bounds();
        let slack = 1e-10 * dense;
        prop_assert!(b.mother_lower <= dense + slack && dense <= b.mother_upper + slack);
        prop_assert!(b.daughter_lower <= dense + slack && dense <= b.daughter_upper + slack);
    }

    #[test]
    fn radius_strictly_decreases_in_lambda(seed in any::<u64>(), a in -2.0f64..2.0, gap in 0.01f64..1.0) {
        let inst = random_instance(seed);
        let r1 = radius_at(&inst.coefficients, &inst.kernel, a).unwrap();
        let r2 = radius_at(&inst.coefficients, &inst.kernel, a + gap).unwrap();
        prop_assert!(r2 < r1);
    }
}
