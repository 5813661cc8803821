mod common;

use clonal_evolve::bounds::{
    binomial, check_no_self_renewal, class_bound_curve, evaluate_class_bounds, log_slope,
    no_renewal_scenario, renewal_scenario, verify_class_bounds, verify_renewal_lower_bound,
    BoundsError, ClassBoundConfig, RenewalHypothesis,
};
use clonal_evolve::simulate;
use common::example;
use proptest::prelude::*;

/// Integrates `Q′ = −σQ + ω Σ_{i<j} Q_i` with RK4; the bound curves are its
/// exact solution.
fn ode_bound(sigma: f64, omega: f64, q0: &[f64], t: f64) -> Vec<f64> {
    let rhs = |q: &[f64]| -> Vec<f64> {
        let mut below = 0.0;
        q.iter()
            .map(|&v| {
                let d = -sigma * v + omega * below;
                below += v;
                d
            })
            .collect()
    };
    let steps = 2000;
    let h = t / steps as f64;
    let mut q = q0.to_vec();
    let axpy = |q: &[f64], k: &[f64], s: f64| q.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = rhs(&q);
        let k2 = rhs(&axpy(&q, &k1, h / 2.0));
        let k3 = rhs(&axpy(&q, &k2, h / 2.0));
        let k4 = rhs(&axpy(&q, &k3, h));
        for i in 0..q.len() {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    q
}

#[test]
fn bound_curves_solve_the_comparison_system() {
    let s = no_renewal_scenario(41, 51, 0.1, 1.5, 0.3, 1.0).unwrap();
    let config = ClassBoundConfig::new(&s.coefficients, &s.kernel, 0.1).unwrap();
    let q0 = [3.0, 1.0, 0.5, 2.0, 0.25, 4.0, 1.5, 0.75, 0.1];
    assert_eq!(config.n + 1, q0.len());
    for t in [0.0f64, 0.3, 1.0, 2.5] {
        let oracle = ode_bound(config.sigma, config.omega, &q0, t);
        for (j, o) in oracle.iter().enumerate() {
            let b = class_bound_curve(&config, j, &q0, t).unwrap();
            assert!((b - o).abs() <= 1e-10 * o.abs().max(1.0), "j={j} t={t}: {b} vs {o}");
        }
    }
}

#[test]
fn constructed_scenario_respects_bounds() {
    let s = no_renewal_scenario(81, 101, 0.2, 2.0, 0.5, 4.0).unwrap();
    let config = ClassBoundConfig::new(&s.coefficients, &s.kernel, 0.2).unwrap();
    assert!(config.no_self_renewal);
    let report = verify_class_bounds(&simulate(&s).unwrap(), &config).unwrap();
    assert!(report.holds(), "{:?}", report.worst_ratio);
    // The top band only loses cells, so its bound is attained.
    assert!((report.worst_ratio[0] - 1.0).abs() < 1e-6);
}

#[test]
fn renewing_kernels_are_refused_by_the_gated_check() {
    let mut s = example(1, 61, 51);
    let config = ClassBoundConfig::new(&s.coefficients, &s.kernel, 0.2).unwrap();
    assert!(!config.no_self_renewal);
    s.bands = config.bands();
    s.horizon = 2.0;
    let trace = simulate(&s).unwrap();
    assert!(matches!(
        verify_class_bounds(&trace, &config),
        Err(BoundsError::Hypothesis(_))
    ));
    assert!(evaluate_class_bounds(&trace, &config).unwrap().holds());
}

#[test]
fn restoring_kernels_renew_at_every_scale() {
    let s = example(2, 31, 101);
    for delta in [0.05, 0.1, 0.2] {
        assert!(!check_no_self_renewal(&s.kernel, &s.grid, delta));
    }
}

#[test]
fn renewal_slope_beats_the_guaranteed_rate() {
    let hyp = RenewalHypothesis {
        delta: 0.25,
        r1: 0.8,
        beta1: 2.0,
        mu1: 0.5,
    };
    let s = renewal_scenario(81, 101, &hyp, 8.0).unwrap();
    let report = verify_renewal_lower_bound(&simulate(&s).unwrap(), &s, &hyp).unwrap();
    assert!((report.rate - 0.7).abs() < 1e-12);
    assert!(report.holds && report.slope >= 0.686);
}

#[test]
fn balanced_renewal_does_not_shrink_the_top_band() {
    let hyp = RenewalHypothesis {
        delta: 0.25,
        r1: 0.5,
        beta1: 2.0,
        mu1: 0.0,
    };
    assert_eq!(hyp.rate(), 0.0);
    let s = renewal_scenario(81, 101, &hyp, 8.0).unwrap();
    let trace = simulate(&s).unwrap();
    let top = &trace.class_totals[0];
    let from = trace.index_of(2.0);
    assert!(top[from..].windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    let slope = log_slope(&trace.times, top, 2.0, 8.0).unwrap();
    assert!(slope >= 0.0);
}

#[test]
fn binomial_overflow_is_an_error() {
    assert_eq!(binomial(60, 30).unwrap(), 118_264_581_564_861_424);
    assert!(matches!(binomial(80, 40), Err(BoundsError::Overflow { .. })));
}

proptest! {
    #[test]
    fn bounds_are_nonnegative_and_start_at_the_data(
        q0 in proptest::collection::vec(0.0f64..10.0, 4),
        t in 0.0f64..5.0,
    ) {
        let s = no_renewal_scenario(21, 51, 0.2, 1.0, 0.2, 1.0).unwrap();
        let config = ClassBoundConfig::new(&s.coefficients, &s.kernel, 0.2).unwrap();
        for j in 0..=config.n {
            let b = class_bound_curve(&config, j, &q0, t).unwrap();
            prop_assert!(b >= 0.0);
            prop_assert_eq!(class_bound_curve(&config, j, &q0, 0.0).unwrap(), q0[j]);
        }
    }
}
