//! Self-renewal lower bound: when enough daughters stay in the top telomere
//! band, that band grows at least at `2 r1 beta1 - beta1 - mu1`.
//!
//! Run with `cargo run --example renewal_lower_bound`.

use clonal_evolve::bounds::{renewal_scenario, verify_renewal_lower_bound, RenewalHypothesis};
use clonal_evolve::simulate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for r1 in [0.65, 0.7, 0.8] {
        let hyp = RenewalHypothesis { delta: 0.25, r1, beta1: 2.0, mu1: 0.5 };
        let s = renewal_scenario(81, 101, &hyp, 8.0)?;
        let report = verify_renewal_lower_bound(&simulate(&s)?, &s, &hyp)?;
        println!(
            "r1 = {r1}: guaranteed rate {:+.3}, fitted top-band slope {:+.4}, holds: {}",
            report.rate, report.slope, report.holds
        );
    }
    Ok(())
}
