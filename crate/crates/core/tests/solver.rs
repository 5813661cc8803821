mod common;

use clonal_evolve::model::{Band, Grid};
use clonal_evolve::solver::{
    class_population, explicit_crowding_oracle, nilpotency_check, renewal_boundary, SolverError,
    Stepper,
};
use clonal_evolve::{simulate, CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Scenario};
use common::{example, random_instance, rel};
use ndarray::Array2;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_density(grid: &Grid, seed: u64) -> Array2<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    Array2::from_shape_fn(grid.shape(), |_| {
        if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.0..10.0)
        }
    })
}

#[test]
fn transport_alone_conserves_mass_up_to_mortality() {
    let grid = Grid::new(81, 11, 2.0, 1.0).unwrap();
    let mu = 0.7;
    let c = CoefficientField::constant(grid, 0.0, mu).unwrap();
    let stepper = Stepper::from_parts(&c, &DivisionKernel::zeros(&grid), None).unwrap();
    // Support well inside the age domain, so nothing leaves through a_max.
    let p0 = Array2::from_shape_fn(grid.shape(), |(k, i)| {
        let a = grid.age(k);
        if a < 1.0 { a * (1.0 - a) * (1.0 + i as f64) } else { 0.0 }
    });
    let total0 = grid.integrate(&p0);
    let p1 = stepper.step_values(&p0).unwrap();
    let expected = total0 * (-mu * grid.dt()).exp();
    assert!(rel(grid.integrate(&p1), expected) < 1e-13);
}

#[test]
fn nilpotent_for_random_initial_data() {
    let grid = Grid::new(41, 21, 2.0, 1.0).unwrap();
    for seed in 0..5 {
        let p0 = DensityField::new(grid, random_density(&grid, seed)).unwrap();
        assert_eq!(nilpotency_check(&grid, &p0).unwrap(), 0.0);
    }
}

#[test]
fn newborns_match_renewal_integral() {
    let s = example(2, 61, 21);
    let stepper = Stepper::new(&s).unwrap();
    let next = stepper.step(&s.initial).unwrap();
    let expected = renewal_boundary(&next, &s.coefficients, &s.kernel);
    for (b, e) in next.values().row(0).iter().zip(&expected) {
        assert!((b - e).abs() <= 1e-10 * e.abs().max(1.0));
    }
}

#[test]
fn band_partition_sums_to_total() {
    let s = example(2, 61, 41);
    let trace = simulate(&s.clone().with_horizon(1.0).unwrap()).unwrap();
    let bands = Band::partition(1.0, 4);
    let sum: f64 = bands.iter().map(|b| class_population(&trace.last, b)).sum();
    assert!(rel(sum, trace.last.total()) < 1e-12);
}

#[test]
fn crowded_totals_follow_explicit_formula() {
    let s = example(3, 121, 41).with_horizon(20.0).unwrap();
    let crowded = simulate(&s).unwrap();
    let mut linear = s.clone();
    linear.crowding = None;
    let oracle = explicit_crowding_oracle(&simulate(&linear).unwrap(), s.crowding.as_ref().unwrap())
        .unwrap();
    for (o, p) in oracle.iter().zip(&crowded.totals) {
        assert!(rel(*p, *o) < 5e-3);
    }
    assert!(matches!(
        explicit_crowding_oracle(&crowded, s.crowding.as_ref().unwrap()),
        Err(SolverError::CrowdedTrace)
    ));
}

#[test]
fn exponential_blowup_is_reported() {
    let grid = Grid::new(11, 6, 1.0, 1.0).unwrap();
    let c = CoefficientField::constant(grid, 200.0, 0.0).unwrap();
    let k = DivisionKernel::from_fn(&grid, |_, _| 1e3).unwrap();
    let stepper = Stepper::from_parts(&c, &k, None);
    assert!(matches!(stepper, Err(SolverError::UnstableBoundary { .. })));
}

#[test]
fn snapshots_follow_cadence() {
    let s = example(1, 61, 21)
        .with_horizon(2.0)
        .unwrap()
        .with_cadence(0.5)
        .unwrap();
    let trace = simulate(&s).unwrap();
    let times: Vec<f64> = trace.snapshots.iter().map(|(t, _)| *t).collect();
    assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    assert_eq!(trace.times.len(), 21);
}

#[test]
fn negative_input_is_rejected() {
    let s = example(1, 25, 11);
    let stepper = Stepper::new(&s).unwrap();
    let mut p = s.initial.values().clone();
    p[[3, 4]] = -1e-3;
    assert!(matches!(
        stepper.step_values(&p),
        Err(SolverError::NegativeDensity { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steps_preserve_positivity(seed in any::<u64>(), steps in 1usize..30) {
        let inst = random_instance(seed);
        let grid = *inst.coefficients.grid();
        let stepper = match Stepper::from_parts(&inst.coefficients, &inst.kernel, None) {
            Ok(s) => s,
            Err(SolverError::UnstableBoundary { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let mut p = random_density(&grid, seed ^ 1);
        for _ in 0..steps {
            p = stepper.step_values(&p).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn linear_step_is_linear(seed in any::<u64>(), a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let inst = random_instance(seed);
        let grid = *inst.coefficients.grid();
        let Ok(stepper) = Stepper::from_parts(&inst.coefficients, &inst.kernel, None) else {
            return Ok(());
        };
        let p = random_density(&grid, seed ^ 2);
        let q = random_density(&grid, seed ^ 3);
        let sp = stepper.step_values(&p).unwrap();
        prop_assert_eq!(stepper.step_values(&(&p * 4.0)).unwrap(), &sp * 4.0);
        let lhs = stepper.step_values(&(&p * a + &q * b)).unwrap();
        let rhs = &sp * a + &stepper.step_values(&q).unwrap() * b;
        let scale = rhs.iter().copied().fold(1.0, f64::max);
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn crowding_only_lowers_the_population(gamma in 1e-6f64..1e-3) {
        let s = example(2, 61, 21).with_horizon(3.0).unwrap();
        let linear = simulate(&s).unwrap();
        let crowded: Scenario = s.with_crowding(CrowdingLaw::linear(gamma).unwrap());
        let crowded = simulate(&crowded).unwrap();
        for (c, l) in crowded.totals.iter().zip(&linear.totals) {
            prop_assert!(c <= l);
        }
    }
}
