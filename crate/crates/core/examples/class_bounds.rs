//! Telomere-class decay bounds on a kernel that never returns a daughter to
//! within `delta` of its mother's length.
//!
//! Run with `cargo run --example class_bounds`.

use clonal_evolve::bounds::{no_renewal_scenario, verify_class_bounds, ClassBoundConfig};
use clonal_evolve::simulate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delta = 0.2;
    let s = no_renewal_scenario(81, 101, delta, 2.0, 0.5, 4.0)?;
    let config = ClassBoundConfig::new(&s.coefficients, &s.kernel, delta)?;
    println!(
        "N = {}, sigma = {:.3}, omega = {:.3}, hypothesis holds: {}",
        config.n, config.sigma, config.omega, config.no_self_renewal
    );
    let report = verify_class_bounds(&simulate(&s)?, &config)?;
    let end = report.rows.last().map_or(0.0, |r| r.time);
    for (j, ratio) in report.worst_ratio.iter().enumerate() {
        let band = config.band(j);
        let last = report.rows.iter().find(|r| r.time == end && r.band == j).unwrap();
        println!(
            "band {j} [{:.1}, {:.1}]: max P_j / bound = {ratio:.4}, at t = {end}: {:.3e}",
            band.lo, band.hi, last.ratio
        );
    }
    println!("violations: {}", report.violations);
    Ok(())
}
