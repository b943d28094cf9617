//! Sweeps the defender collision threshold and prints how the mission
//! flips from routine success to failure once defenders must keep more
//! distance than the intruder's own bubble grants them.
//!
//! A miniature of the CLI's `sweep` subcommand; expect a few minutes.

use swarm_escort::engine::ScenarioConfig;
use swarm_escort::harness::{self, SweepSpec};

fn main() {
    let base = ScenarioConfig::default();
    let spec = SweepSpec::new("eps_d", vec![40.0, 55.0, 70.0], 10).unwrap();
    println!(
        "sweeping eps_d over {:?} with {} runs per value (eps_m = {})",
        spec.values, spec.runs_per_value, base.eps_m
    );

    for cell in harness::sweep(&base, &spec).unwrap() {
        println!("\neps_d = {}", cell.summary.value);
        println!("  {}", cell.summary);
        for r in cell.records.iter().take(3) {
            println!("  {r}");
        }
        if cell.records.len() > 3 {
            println!("  ... {} more", cell.records.len() - 3);
        }
    }

    println!("\npast the boundary the defenders stall outside their own bubble");
    println!("and can no longer press the intruder, so runs time out.");
}
