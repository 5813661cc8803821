//! Scenarios as JSON documents: write one, edit it, and run it. Artifacts go
//! to the directory given as the first argument (a temporary one otherwise).
//!
//! Run with `cargo run --example scenario_document -- /tmp/run`.

use std::path::PathBuf;

use clonal_evolve::model::{CrowdingSpec, ScenarioDocument};
use clonal_evolve::output::{totals_csv, OutputDir};
use clonal_evolve::{find_equilibrium, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("clonal-evolve-document"));

    // Example 2 with stronger crowding than example 3.
    let mut doc = ScenarioDocument::example(2, 121, 51)?;
    doc.crowding = CrowdingSpec::Linear { gamma: 1e-4 };
    doc.horizon = 40.0;
    doc.cadence = 10.0;

    let mut out = OutputDir::create(&root, true)?;
    out.write("scenario.json", &doc.to_json())?;
    let reread = ScenarioDocument::read(&root.join("scenario.json"))?;
    assert_eq!(reread, doc);

    let scenario = reread.build()?;
    let trace = simulate(&scenario)?;
    out.write("totals.csv", &totals_csv(&trace))?;
    let steady = find_equilibrium(&scenario)?;
    println!(
        "P(40) = {:.1}, P* = {:.1}; wrote {:?} to {}",
        trace.totals.last().unwrap(),
        steady.p_star,
        out.written(),
        root.display()
    );
    Ok(())
}
